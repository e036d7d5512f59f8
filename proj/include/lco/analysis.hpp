#pragma once

// Shape checks on training dynamics: smoothing, envelope violations, and the
// rise-then-clip pattern of the clipped surrogate.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lco/trainer.hpp"

namespace lco {

inline constexpr std::size_t kSmoothingWindow = 50;
inline constexpr double kEnvelopeSlack = 1e-9;

/// s[k] = mean of x over the trailing window ending at k (shorter at the start).
std::vector<double> trailing_mean(std::span<const double> x, std::size_t window = kSmoothingWindow);

std::vector<double> grad_norms(std::span<const DynamicsRecord> records);

/// Steps whose gradient norm exceeds the recorded bound by more than the slack.
int envelope_violations(std::span<const DynamicsRecord> records, double slack = kEnvelopeSlack);

/// Number of k in the last tail_fraction of the series with s[k] > s[k-1].
int smoothed_increases(std::span<const double> x, double tail_fraction = 1.0,
                       std::size_t window = kSmoothingWindow);

/// Mean of the first `window` values.
double smoothed_initial(std::span<const double> x, std::size_t window = kSmoothingWindow);

struct SpikeThenClip {
  double smoothed_initial = 0.0;
  std::optional<int> spike_step;  // 1-based steps
  std::optional<int> clip_step;
};

/// First step whose gradient norm exceeds factor times the smoothed initial
/// value and is later followed by an exactly-zero gradient step.
SpikeThenClip find_spike_then_clip(std::span<const DynamicsRecord> records, double factor = 2.0,
                                   std::size_t window = kSmoothingWindow);

struct DynamicsSummary {
  std::string objective;
  double max_grad_norm = 0.0;
  double final_entropy = 0.0;
  double final_sampled_prob = 0.0;
  int envelope_violations = 0;
  int smoothed_increases = 0;
};

DynamicsSummary summarize(const std::string& objective, std::span<const DynamicsRecord> records);

}  // namespace lco
