#pragma once

// Toy autoregressive environments: the state is the token prefix and the
// reward comes from a verifier-style sequence match or a per-token table.

#include <filesystem>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "lco/dist.hpp"

namespace lco {

inline constexpr std::size_t kMaxToyVocab = 64;
inline constexpr std::size_t kMaxToyHorizon = 16;

/// +1 when the generated sequence equals target exactly, -1 otherwise.
struct TargetSequenceRule {
  std::vector<ActionIndex> target;
};

/// Reward of token a at timestep t is table[t][a].
struct ScorerTableRule {
  std::vector<std::vector<double>> table;
};

using RewardRule = std::variant<TargetSequenceRule, ScorerTableRule>;

using Table = std::vector<std::vector<double>>;  // horizon rows of |V| values

class ToyEnvironment {
 public:
  ToyEnvironment(std::size_t vocab, std::size_t horizon, RewardRule rule);

  std::size_t vocab() const noexcept { return vocab_; }
  std::size_t horizon() const noexcept { return horizon_; }
  const RewardRule& rule() const noexcept { return rule_; }

  /// Total reward of a complete sequence of length horizon.
  double sequence_reward(std::span<const ActionIndex> sequence) const;

  /// Per-timestep scalar advantage signal for the sampled tokens: the
  /// sequence verdict repeated at every step, or the per-token table value.
  std::vector<double> sampled_advantages(std::span<const ActionIndex> sequence) const;

  // Log-probability tables consumed by the dense estimators.
  void set_scorer_log_probs(Table t);
  void set_reference_log_probs(Table t);
  const std::optional<Table>& scorer_log_probs() const noexcept { return scorer_; }
  const std::optional<Table>& reference_log_probs() const noexcept { return reference_; }

 private:
  void check_table(const Table& t, const char* what) const;

  std::size_t vocab_;
  std::size_t horizon_;
  RewardRule rule_;
  std::optional<Table> scorer_;
  std::optional<Table> reference_;
};

/// Reads one row per timestep of |V| whitespace-separated floats. Blank lines
/// and text after '#' are ignored. Throws InvalidInputError naming the line.
Table read_table(const std::filesystem::path& path, std::size_t vocab);

}  // namespace lco
