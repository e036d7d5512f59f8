#pragma once

// Flat `key = value` experiment files with [section] headers.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lco/env.hpp"
#include "lco/errors.hpp"
#include "lco/policy.hpp"
#include "lco/trainer.hpp"

namespace lco {

/// A configuration problem tied to a source location and field.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& source, int line, const std::string& field, const std::string& message);
  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int line_;
  std::string field_;
};

struct IniEntry {
  std::string value;
  int line = 0;
};

struct IniFile {
  std::string source;
  std::map<std::string, std::map<std::string, IniEntry>> sections;
};

/// Parses text; '#' and ';' start comments. Keys before any header go to "".
IniFile parse_ini(const std::string& text, const std::string& source);
IniFile load_ini(const std::filesystem::path& path);

struct EnvironmentSpec {
  std::size_t vocab = 4;
  std::size_t horizon = 1;
  RewardRule rule = TargetSequenceRule{{0}};
  std::optional<Table> scorer_log_probs;
  std::optional<Table> reference_log_probs;
};

struct ModelSpec {
  ModelFamily family = ModelFamily::kTabular;
  std::size_t hidden = kDefaultHiddenWidth;
  bool uniform_init = false;  // TABULAR/LINEAR start at zero unless set; MLP1 is always uniform
  double init_scale = kDefaultInitScale;
  std::optional<std::vector<double>> init_logits;
  std::optional<std::uint64_t> seed;  // defaults to the trainer seed
};

struct ExperimentConfig {
  std::filesystem::path base_dir;
  EnvironmentSpec environment;
  ModelSpec model;
  TrainerConfig trainer;
  bool plot = false;
  std::optional<std::pair<ObjectiveKind, ObjectiveKind>> compare;
  bool parallel = true;
  ConvergeConfig converge;
};

/// Reads and validates an experiment file. Relative table paths resolve
/// against the file's directory. Throws ConfigError.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig experiment_config_from_ini(const IniFile& ini, const std::filesystem::path& base_dir);

PolicyModel build_model(const ExperimentConfig& config);
ToyEnvironment build_environment(const ExperimentConfig& config);

}  // namespace lco
