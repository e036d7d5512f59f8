#pragma once

// CSV persistence for dynamics and convergence tables, and model dumps.

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lco/policy.hpp"
#include "lco/trainer.hpp"

namespace lco {

inline constexpr std::string_view kDynamicsHeader =
    "step,loss,grad_norm_param,grad_sampled_logit,grad_nonsampled_logit,entropy,sampled_prob,adv_bucket,bound";
inline constexpr std::string_view kConvergeHeader = "k,loss,bound,rho";

/// Shortest text that round-trips: printf "%.17g".
std::string format_real(double x);

void write_dynamics_csv(std::ostream& out, std::span<const DynamicsRecord> records);
void write_dynamics_csv(const std::filesystem::path& path, std::span<const DynamicsRecord> records);

void write_converge_csv(std::ostream& out, const ConvergeResult& result);
void write_converge_csv(const std::filesystem::path& path, const ConvergeResult& result);

/// One parameter per line after a "# family=..." header comment.
void write_model(std::ostream& out, const PolicyModel& model);
void write_model(const std::filesystem::path& path, const PolicyModel& model);
std::vector<double> read_model_parameters(const std::filesystem::path& path);

/// Plain comma-separated text without quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable parse_csv(const std::string& text, const std::string& source);
CsvTable read_csv(const std::filesystem::path& path);

/// Inverse of write_dynamics_csv. Throws SchemaError if the header differs.
std::vector<DynamicsRecord> dynamics_from_csv(const CsvTable& table);

}  // namespace lco
