#include "lco/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "lco/errors.hpp"

namespace lco {

std::vector<double> trailing_mean(std::span<const double> x, std::size_t window) {
  if (window == 0) throw InvalidInputError("smoothing window must be positive");
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    // Summing each window afresh keeps rounding from accumulating along the series.
    const std::size_t lo = k + 1 >= window ? k + 1 - window : 0;
    double s = 0.0;
    for (std::size_t i = lo; i <= k; ++i) s += x[i];
    out[k] = s / static_cast<double>(k + 1 - lo);
  }
  return out;
}

std::vector<double> grad_norms(std::span<const DynamicsRecord> records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.grad_norm_param);
  return out;
}

int envelope_violations(std::span<const DynamicsRecord> records, double slack) {
  int n = 0;
  for (const auto& r : records)
    if (r.bound && r.grad_norm_param > *r.bound + slack) ++n;
  return n;
}

int smoothed_increases(std::span<const double> x, double tail_fraction, std::size_t window) {
  const std::vector<double> s = trailing_mean(x, window);
  const auto n = s.size();
  const auto start = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - tail_fraction)));
  int count = 0;
  for (std::size_t k = std::max<std::size_t>(start, 1); k < n; ++k)
    if (s[k] > s[k - 1]) ++count;
  return count;
}

double smoothed_initial(std::span<const double> x, std::size_t window) {
  if (x.empty()) return 0.0;
  const std::size_t m = std::min(window, x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += x[i];
  return s / static_cast<double>(m);
}

SpikeThenClip find_spike_then_clip(std::span<const DynamicsRecord> records, double factor, std::size_t window) {
  SpikeThenClip out;
  const std::vector<double> g = grad_norms(records);
  out.smoothed_initial = smoothed_initial(g, window);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!(g[k] > factor * out.smoothed_initial)) continue;
    for (std::size_t j = k + 1; j < g.size(); ++j) {
      if (g[j] == 0.0) {
        out.spike_step = records[k].step;
        out.clip_step = records[j].step;
        return out;
      }
    }
    break;  // no zero step after the first spike means none after later spikes either
  }
  return out;
}

DynamicsSummary summarize(const std::string& objective, std::span<const DynamicsRecord> records) {
  DynamicsSummary s;
  s.objective = objective;
  if (records.empty()) return s;
  const std::vector<double> g = grad_norms(records);
  s.max_grad_norm = *std::max_element(g.begin(), g.end());
  s.final_entropy = records.back().entropy;
  s.final_sampled_prob = records.back().sampled_prob;
  s.envelope_violations = envelope_violations(records);
  s.smoothed_increases = smoothed_increases(g);
  return s;
}

}  // namespace lco
