#pragma once

// Differentiable softmax-policy families over a token-prefix state space.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lco/dist.hpp"
#include "lco/linalg.hpp"
#include "lco/random.hpp"

namespace lco {

enum class ModelFamily { kTabular, kLinear, kMlp1 };

std::string_view to_string(ModelFamily family);
ModelFamily parse_family(std::string_view name);

/// A state is the prefix of tokens generated so far (length < horizon).
struct State {
  std::vector<ActionIndex> prefix;
};

/// All prefixes of length 0 .. horizon-1 over a vocabulary, indexed in
/// length-then-lexicographic order.
class StateSpace {
 public:
  StateSpace(std::size_t vocab, std::size_t horizon);

  std::size_t vocab() const noexcept { return vocab_; }
  std::size_t horizon() const noexcept { return horizon_; }
  std::size_t size() const noexcept { return size_; }

  /// Throws InvalidStateError for prefixes outside the space.
  std::size_t index(const State& s) const;

  /// [1, one-hot position (horizon), one-hot last token (vocab + "none")].
  std::vector<double> canonical_features(const State& s) const;
  std::size_t canonical_feature_dim() const noexcept { return 2 + horizon_ + vocab_; }

 private:
  std::size_t vocab_;
  std::size_t horizon_;
  std::size_t size_;
  std::vector<std::size_t> offsets_;  // first index of each prefix length
};

struct JacobianInfo {
  Matrix jacobian;  // |V| x |params|, row a = d z(a) / d theta
  double sigma_max = 0.0;
};

inline constexpr std::size_t kDefaultHiddenWidth = 16;
inline constexpr double kDefaultInitScale = 0.1;

class PolicyModel {
 public:
  static PolicyModel tabular(std::size_t vocab, std::size_t horizon);
  /// feature_table, when given, holds one feature vector per state index and
  /// replaces the canonical features.
  static PolicyModel linear(std::size_t vocab, std::size_t horizon,
                            std::optional<std::vector<std::vector<double>>> feature_table = std::nullopt);
  /// Weights drawn uniformly from [-init_scale, init_scale] with the given seed.
  static PolicyModel mlp1(std::size_t vocab, std::size_t horizon, std::size_t width, std::uint64_t seed,
                          double init_scale = kDefaultInitScale,
                          std::optional<std::vector<std::vector<double>>> feature_table = std::nullopt);

  ModelFamily family() const noexcept { return family_; }
  const StateSpace& states() const noexcept { return states_; }
  std::size_t vocab() const noexcept { return states_.vocab(); }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::size_t hidden_width() const noexcept { return width_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  const std::vector<double>& parameters() const noexcept { return params_; }
  void set_parameters(std::vector<double> theta);

  std::vector<double> features(const State& s) const;

  LogitVector forward(const State& s) const { return forward_with(params_, s); }
  LogitVector forward_with(std::span<const double> theta, const State& s) const;

  JacobianInfo jacobian(const State& s) const { return jacobian_with(params_, s); }
  JacobianInfo jacobian_with(std::span<const double> theta, const State& s) const;

  /// out += scale * J(s)^T g without materializing J.
  void accumulate_vjp(std::span<const double> theta, const State& s, std::span<const double> g, double scale,
                      std::vector<double>& out) const;
  /// Largest singular value of J(s); closed form for TABULAR and LINEAR.
  double jacobian_sigma_max(std::span<const double> theta, const State& s) const;

  /// Makes every state start from the given logits: the tabular rows, the
  /// weights on feature 0 for LINEAR (the constant feature of the canonical
  /// map; other weights are zeroed), or the output bias for MLP1.
  void set_initial_logits(std::span<const double> logits);

 private:
  PolicyModel(ModelFamily family, StateSpace states, std::size_t feature_dim, std::size_t width);

  ModelFamily family_;
  StateSpace states_;
  std::size_t feature_dim_ = 0;
  std::size_t width_ = 0;
  std::vector<double> params_;
  std::optional<std::vector<std::vector<double>>> feature_table_;
};

/// ||z(theta*) - z(theta) - J(theta)(theta* - theta)|| / max(||z(theta*) - z(theta)||, 1e-12).
double linearization_residual(const PolicyModel& model, std::span<const double> theta,
                              std::span<const double> theta_star, const State& s);

}  // namespace lco
