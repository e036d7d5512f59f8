#pragma once

// Probability primitives over a finite action vocabulary.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "lco/random.hpp"

namespace lco {

using ActionIndex = std::size_t;

inline constexpr double kProbSumTolerance = 1e-12;
inline constexpr double kStdFloor = 1e-8;

/// Per-timestep logits over the vocabulary. Always finite, length >= 2.
class LogitVector {
 public:
  LogitVector() = default;
  explicit LogitVector(std::vector<double> values);
  LogitVector(std::initializer_list<double> values) : LogitVector(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vec() const noexcept { return values_; }

  friend bool operator==(const LogitVector&, const LogitVector&) = default;

 private:
  std::vector<double> values_;
};

/// A distribution over the vocabulary: nonnegative, sums to one.
class ProbVector {
 public:
  ProbVector() = default;
  explicit ProbVector(std::vector<double> values);
  ProbVector(std::initializer_list<double> values) : ProbVector(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vec() const noexcept { return values_; }

  friend bool operator==(const ProbVector&, const ProbVector&) = default;

 private:
  std::vector<double> values_;
};

/// Advantage values over the vocabulary. With a sparse mask only the masked
/// coordinates carry signal and every other entry is exactly zero.
class AdvantageVector {
 public:
  AdvantageVector() = default;
  explicit AdvantageVector(std::vector<double> values,
                           std::optional<std::vector<ActionIndex>> sparse_mask = std::nullopt);
  AdvantageVector(std::initializer_list<double> values)
      : AdvantageVector(std::vector<double>(values)) {}

  static AdvantageVector zeros(std::size_t n) { return AdvantageVector(std::vector<double>(n, 0.0)); }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vec() const noexcept { return values_; }
  const std::optional<std::vector<ActionIndex>>& sparse_mask() const noexcept { return mask_; }

 private:
  std::vector<double> values_;
  std::optional<std::vector<ActionIndex>> mask_;
};

enum class NormalizeMode { kCenter, kStandardize };

ProbVector softmax(const LogitVector& z);
std::vector<double> log_softmax(const LogitVector& z);
double log_sum_exp(std::span<const double> x);

double entropy(const ProbVector& p);
double kl_divergence(const ProbVector& p, const ProbVector& q);

// e^t - 1 - t, accurate for small |t| where the direct form cancels. KL sums
// are written as sum p (e^t - 1 - t) with t = log q - log p so that nearly
// equal distributions give a tiny positive divergence instead of rounding noise.
double exp_excess(double t);
double total_variation(const ProbVector& p, const ProbVector& q);

// Mean computed as x0 + mean(x - x0) so a constant vector centers to exact zeros.
double stable_mean(std::span<const double> x);

AdvantageVector normalize_advantages(const AdvantageVector& a,
                                     NormalizeMode mode = NormalizeMode::kCenter,
                                     double std_floor = kStdFloor);

/// The distribution actually sampled from: temperature applied through
/// log p / T, then truncated to the smallest descending-probability prefix
/// whose mass reaches top_p (ties go to the lower index), renormalized.
ProbVector nucleus_distribution(const ProbVector& p, double temperature, double top_p);

ActionIndex sample_action(const ProbVector& p, double temperature, double top_p, Rng& rng);

}  // namespace lco
