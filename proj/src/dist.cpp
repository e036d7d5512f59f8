#include "lco/dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lco/errors.hpp"

namespace lco {

namespace {

void require_finite(std::span<const double> x, const char* what) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw InvalidInputError(std::string(what) + ": non-finite entry at index " + std::to_string(i));
    }
  }
}

void require_same_size(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size()) {
    throw InvalidInputError("distribution length mismatch: " + std::to_string(p.size()) + " vs " +
                            std::to_string(q.size()));
  }
}

}  // namespace

LogitVector::LogitVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw InvalidInputError("logit vector needs at least two entries");
  require_finite(values_, "logits");
}

ProbVector::ProbVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw InvalidInputError("empty distribution");
  double sum = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double v = values_[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw InvalidInputError("probability entry " + std::to_string(i) + " outside [0, 1]");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    throw InvalidInputError("probabilities sum to " + std::to_string(sum) + ", not 1");
  }
}

AdvantageVector::AdvantageVector(std::vector<double> values,
                                 std::optional<std::vector<ActionIndex>> sparse_mask)
    : values_(std::move(values)), mask_(std::move(sparse_mask)) {
  require_finite(values_, "advantages");
  if (mask_) {
    std::sort(mask_->begin(), mask_->end());
    mask_->erase(std::unique(mask_->begin(), mask_->end()), mask_->end());
    std::vector<bool> in_mask(values_.size(), false);
    for (ActionIndex i : *mask_) {
      if (i >= values_.size()) throw InvalidInputError("sparse mask index out of range");
      in_mask[i] = true;
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!in_mask[i] && values_[i] != 0.0) {
        throw InvalidInputError("unmasked advantage entry " + std::to_string(i) + " is nonzero");
      }
    }
  }
}

double log_sum_exp(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

ProbVector softmax(const LogitVector& z) {
  const auto x = z.values();
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> p(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = std::exp(x[i] - m);
    s += p[i];
  }
  for (double& v : p) v /= s;
  return ProbVector(std::move(p));
}

std::vector<double> log_softmax(const LogitVector& z) {
  const auto x = z.values();
  const double lse = log_sum_exp(x);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
  return out;
}

double entropy(const ProbVector& p) {
  double h = 0.0;
  for (double v : p.values()) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return std::max(h, 0.0);
}

double exp_excess(double t) {
  if (std::abs(t) < 1e-2) {
    // Taylor tail past t^7 is below 1e-16 relative here.
    return t * t * (0.5 + t * (1.0 / 6 + t * (1.0 / 24 + t * (1.0 / 120 + t * (1.0 / 720 + t / 5040)))));
  }
  return std::expm1(t) - t;
}

double kl_divergence(const ProbVector& p, const ProbVector& q) {
  require_same_size(p, q);
  // sum_{p>0} p (q/p - 1 - log(q/p)) + sum_{p=0} q equals KL because both
  // distributions sum to one.
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) {
      kl += q[i];
      continue;
    }
    if (q[i] == 0.0) {
      throw DivergenceUndefinedError("KL undefined: q has zero mass at index " + std::to_string(i) +
                                     " where p is positive");
    }
    kl += p[i] * exp_excess(std::log(q[i]) - std::log(p[i]));
  }
  return kl;
}

double total_variation(const ProbVector& p, const ProbVector& q) {
  require_same_size(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return std::min(0.5 * s, 1.0);
}

double stable_mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double x0 = x[0];
  double s = 0.0;
  for (double v : x) s += v - x0;
  return x0 + s / static_cast<double>(x.size());
}

AdvantageVector normalize_advantages(const AdvantageVector& a, NormalizeMode mode, double std_floor) {
  std::vector<double> out = a.vec();
  std::vector<ActionIndex> idx;
  if (a.sparse_mask()) {
    idx = *a.sparse_mask();
  } else {
    idx.resize(out.size());
    std::iota(idx.begin(), idx.end(), ActionIndex{0});
  }
  if (idx.empty()) return a;

  std::vector<double> sel;
  sel.reserve(idx.size());
  for (ActionIndex i : idx) sel.push_back(out[i]);
  const double mean = stable_mean(sel);
  for (ActionIndex i : idx) out[i] -= mean;

  if (mode == NormalizeMode::kStandardize) {
    double var = 0.0;
    for (ActionIndex i : idx) var += out[i] * out[i];
    const double sd = std::sqrt(var / static_cast<double>(idx.size()));
    if (sd > std_floor) {
      for (ActionIndex i : idx) out[i] /= sd;
    }
  }
  return AdvantageVector(std::move(out), a.sparse_mask());
}

ProbVector nucleus_distribution(const ProbVector& p, double temperature, double top_p) {
  if (!(temperature > 0.0)) throw InvalidInputError("temperature must be positive");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw InvalidInputError("top_p must lie in (0, 1]");
  const std::size_t n = p.size();

  // Tempered weights p^(1/T), normalized in log space.
  std::vector<double> logw(n, -std::numeric_limits<double>::infinity());
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] > 0.0) {
      logw[i] = std::log(p[i]) / temperature;
      m = std::max(m, logw[i]);
    }
  }
  std::vector<double> w(n, 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] > 0.0) {
      w[i] = std::exp(logw[i] - m);
      s += w[i];
    }
  }
  for (double& v : w) v /= s;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });

  std::vector<double> out(n, 0.0);
  double mass = 0.0;
  for (std::size_t i : order) {
    if (w[i] <= 0.0) break;
    out[i] = w[i];
    mass += w[i];
    if (mass >= top_p - 1e-12) break;
  }
  for (double& v : out) v /= mass;
  // Guard against a last-ulp drift in the renormalized sum.
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& v : out) v /= total;
  return ProbVector(std::move(out));
}

ActionIndex sample_action(const ProbVector& p, double temperature, double top_p, Rng& rng) {
  const ProbVector q = nucleus_distribution(p, temperature, top_p);
  const double u = uniform01(rng);
  double c = 0.0;
  ActionIndex last = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0) continue;
    c += q[i];
    last = i;
    if (u < c) return i;
  }
  return last;
}

}  // namespace lco
