#pragma once

// Subcommand bodies for the lco-lab tool. Each returns the process exit code
// and writes human-readable progress to `log`, errors to `err`.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lco/verify.hpp"

namespace lco {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitStepSize = 3;

int cmd_verify(const std::optional<std::string>& suite, std::ostream& log, std::ostream& err,
               const ObjectiveTable& table = {});

/// Writes dynamics.csv and model.txt (plus dynamics.svg when plotting is on).
int cmd_train(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& log,
              std::ostream& err);

/// Paired runs of the two objectives named in [dynamics] compare, same seed
/// and environment: dynamics_a.csv, dynamics_b.csv, summary.txt.
int cmd_dynamics(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& log,
                 std::ostream& err);

/// Writes converge.csv; exit 0 iff every asserted step is within its bound.
int cmd_converge(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& log,
                 std::ostream& err);

struct PlotRequest {
  std::vector<std::filesystem::path> csvs;
  std::filesystem::path out;
  std::optional<std::string> x;
  std::vector<std::string> y;
  std::string title;
};

int cmd_plot(const PlotRequest& request, std::ostream& log, std::ostream& err);

}  // namespace lco
