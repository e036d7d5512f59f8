#include "lco/convexity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lco/errors.hpp"
#include "lco/random.hpp"

namespace lco {

namespace {

template <class T>
const T& point_as(ObjectiveKind kind, const HessianPoint& point) {
  const T* p = std::get_if<T>(&point);
  if (p == nullptr) {
    throw InvalidInputError("point inputs do not match objective " + std::string(to_string(kind)));
  }
  return *p;
}

const LogitVector& point_logits(const HessianPoint& point) {
  return std::visit([](const auto& p) -> const LogitVector& { return p.z; }, point);
}

Matrix softmax_covariance(const ProbVector& pi) {
  const std::size_t n = pi.size();
  Matrix h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) = (i == j ? pi[i] : 0.0) - pi[i] * pi[j];
  return h;
}

// sech^2(x) = 4 e^{-2|x|} / (1 + e^{-2|x|})^2, finite for every x.
double sech2(double x) {
  const double t = std::exp(-2.0 * std::abs(x));
  return 4.0 * t / ((1.0 + t) * (1.0 + t));
}

HessianReport make_report(Matrix h) {
  const SymmetricEigen eig = jacobi_eigen(h);
  return HessianReport{std::move(h), eig.values.front(), eig.values.back(), std::nullopt};
}

LogitVector with_offsets(const LogitVector& z, std::size_t i, double di, std::size_t j, double dj) {
  std::vector<double> v = z.vec();
  v[i] += di;
  v[j] += dj;
  return LogitVector(std::move(v));
}

}  // namespace

LossEval evaluate_point(ObjectiveKind kind, const HessianPoint& point) {
  switch (kind) {
    case ObjectiveKind::kSft: {
      const auto& p = point_as<SftPoint>(kind, point);
      return sft_eval(p.z, p.target);
    }
    case ObjectiveKind::kPpo: {
      const auto& p = point_as<PolicyGradientPoint>(kind, point);
      return ppo_eval(p.context, p.z);
    }
    case ObjectiveKind::kReinforce: {
      const auto& p = point_as<PolicyGradientPoint>(kind, point);
      return reinforce_eval(p.context, p.z);
    }
    case ObjectiveKind::kLcoMse: {
      const auto& p = point_as<RegressionPoint>(kind, point);
      return lco_mse_eval(p.z, p.z_star);
    }
    case ObjectiveKind::kLcoLch: {
      const auto& p = point_as<RegressionPoint>(kind, point);
      return lco_lch_eval(p.z, p.z_star);
    }
    case ObjectiveKind::kLcoKld: {
      const auto& p = point_as<DistributionPoint>(kind, point);
      return lco_kld_eval(p.z, p.pi_star);
    }
  }
  throw InvalidInputError("unknown objective kind");
}

double loss_at(ObjectiveKind kind, const HessianPoint& point, const LogitVector& z) {
  HessianPoint moved = point;
  std::visit([&z](auto& p) { p.z = z; }, moved);
  return evaluate_point(kind, moved).value;
}

Matrix ppo_hessian(const ProbVector& pi, ActionIndex k, double pi_old_k, double advantage) {
  const std::size_t n = pi.size();
  if (k >= n) throw InvalidInputError("sampled index out of range");
  const double scale = -advantage / pi_old_k;
  Matrix h(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ei = (i == k ? 1.0 : 0.0) - pi[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double ej = (j == k ? 1.0 : 0.0) - pi[j];
      const double cov = (i == j ? 1.0 : 0.0) - pi[j];
      h(i, j) = scale * (pi[k] * ej * ei - pi[k] * pi[i] * cov);
    }
  }
  // The second term is symmetric only up to rounding; average it out.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) h(i, j) = h(j, i) = 0.5 * (h(i, j) + h(j, i));
  return h;
}

HessianReport hessian_analytic(ObjectiveKind kind, const HessianPoint& point) {
  switch (kind) {
    case ObjectiveKind::kSft: {
      const auto& p = point_as<SftPoint>(kind, point);
      if (p.target >= p.z.size()) throw InvalidInputError("target index out of range");
      return make_report(softmax_covariance(softmax(p.z)));
    }
    case ObjectiveKind::kReinforce: {
      const auto& p = point_as<PolicyGradientPoint>(kind, point);
      Matrix h = softmax_covariance(softmax(p.z));
      const double adv = p.context.sampled_advantage();
      for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = 0; j < h.cols(); ++j) h(i, j) *= adv;
      return make_report(std::move(h));
    }
    case ObjectiveKind::kPpo: {
      const auto& p = point_as<PolicyGradientPoint>(kind, point);
      if (!ppo_active(p.context, p.z)) {
        throw InactiveRegionError("PPO Hessian requested in the clipped (zero-gradient) region");
      }
      const ActionIndex k = p.context.sampled_action;
      return make_report(ppo_hessian(softmax(p.z), k, p.context.pi_old[k], p.context.sampled_advantage()));
    }
    case ObjectiveKind::kLcoMse: {
      const auto& p = point_as<RegressionPoint>(kind, point);
      if (p.z.size() != p.z_star.size()) throw InvalidInputError("logit length mismatch");
      const std::size_t n = p.z.size();
      std::vector<double> d(n, 2.0 / static_cast<double>(n));
      return make_report(Matrix::diagonal(d));
    }
    case ObjectiveKind::kLcoLch: {
      const auto& p = point_as<RegressionPoint>(kind, point);
      if (p.z.size() != p.z_star.size()) throw InvalidInputError("logit length mismatch");
      const std::size_t n = p.z.size();
      std::vector<double> d(n);
      for (std::size_t i = 0; i < n; ++i) d[i] = sech2(p.z[i] - p.z_star[i]) / static_cast<double>(n);
      return make_report(Matrix::diagonal(d));
    }
    case ObjectiveKind::kLcoKld: {
      const auto& p = point_as<DistributionPoint>(kind, point);
      if (p.z.size() != p.pi_star.size()) throw InvalidInputError("logit length mismatch");
      return make_report(softmax_covariance(softmax(p.z)));
    }
  }
  throw InvalidInputError("unknown objective kind");
}

HessianReport hessian_numeric(ObjectiveKind kind, const HessianPoint& point, double step) {
  if (!(step > 0.0)) throw InvalidInputError("finite-difference step must be positive");
  const LogitVector& z = point_logits(point);
  const std::size_t n = z.size();

  if (kind == ObjectiveKind::kPpo) {
    const auto& p = point_as<PolicyGradientPoint>(kind, point);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (double si : {-1.0, 1.0})
          for (double sj : {-1.0, 1.0}) {
            if (!ppo_active(p.context, with_offsets(z, i, si * step, j, sj * step))) {
              throw KinkError("finite-difference stencil crosses the PPO clip boundary");
            }
          }
  }

  auto f = [&](std::size_t i, double di, std::size_t j, double dj) {
    return loss_at(kind, point, with_offsets(z, i, di, j, dj));
  };
  const double h = step;
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = (f(i, h, j, h) - f(i, h, j, -h) - f(i, -h, j, h) + f(i, -h, j, -h)) / (4.0 * h * h);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return make_report(std::move(out));
}

double ppo_curvature_decomposition(const ProbVector& pi, ActionIndex k, std::span<const double> v) {
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    mean += pi[i] * v[i];
    second += pi[i] * v[i] * v[i];
  }
  const double var = second - mean * mean;
  const double dev = v[k] - mean;
  return var - dev * dev;
}

std::vector<double> ppo_witness(const ProbVector& pi, ActionIndex k, int advantage_sign, std::uint64_t seed) {
  const std::size_t n = pi.size();
  if (n < 2) throw InvalidInputError("witness search needs at least two actions");
  if (k >= n) throw InvalidInputError("sampled index out of range");
  if (advantage_sign != 1 && advantage_sign != -1) throw InvalidInputError("advantage sign must be +1 or -1");
  for (double p : pi.values()) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidInputError("witness search needs every probability in (0, 1)");
  }

  const Matrix h = ppo_hessian(pi, k, pi[k], static_cast<double>(advantage_sign));
  auto accept = [&](std::vector<double>& v) {
    const double nv = norm2(v);
    if (nv == 0.0 || !std::isfinite(nv)) return false;
    for (double& e : v) e /= nv;
    return quadratic_form(h, v) < -kWitnessTolerance;
  };

  std::vector<double> v(n, 0.0);
  v[k] = 1.0;
  if (accept(v)) return v;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == k) continue;
    std::fill(v.begin(), v.end(), 0.0);
    v[j] = 1.0;
    if (accept(v)) return v;
  }

  // Write v_k = m + delta with m the pi-weighted mean of the other entries.
  // Then v_k - E(v) = (1 - pi_k) delta, so a large |delta| pushes v_k outside
  // E +/- sqrt(D) (what a positive advantage needs) and delta = 0 puts v_k at
  // E(v) (what a negative advantage needs).
  Rng rng(seed);
  for (int trial = 0; trial < kWitnessTrials; ++trial) {
    double weighted = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k) continue;
      v[i] = standard_normal(rng);
      weighted += pi[i] * v[i];
    }
    const double m = weighted / (1.0 - pi[k]);
    double delta = 0.0;
    if (advantage_sign > 0) {
      delta = std::exp(uniform(rng, -2.0, 6.0)) * (uniform01(rng) < 0.5 ? -1.0 : 1.0);
    } else {
      delta = 0.1 * standard_normal(rng) * std::exp(uniform(rng, -6.0, 0.0));
    }
    v[k] = m + delta;
    if (accept(v)) return v;
  }
  throw WitnessSearchFailedError("no negative-curvature direction found in " + std::to_string(kWitnessTrials) +
                                 " trials");
}

double directionality(ObjectiveKind kind, const LogitVector& z, const LogitVector& z_star) {
  LossEval e;
  switch (kind) {
    case ObjectiveKind::kLcoMse: e = lco_mse_eval(z, z_star); break;
    case ObjectiveKind::kLcoLch: e = lco_lch_eval(z, z_star); break;
    case ObjectiveKind::kLcoKld: e = lco_kld_eval(z, softmax(z_star)); break;
    default: throw InvalidInputError("directionality is defined for the LCO objectives only");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += e.logit_gradient[i] * (z[i] - z_star[i]);
  return s;
}

double gradient_norm_bound(ObjectiveKind kind, double loss_value, double sigma_max, std::size_t vocab) {
  if (!(loss_value >= 0.0)) throw InvalidInputError("loss value must be nonnegative");
  if (!(sigma_max >= 0.0)) throw InvalidInputError("sigma_max must be nonnegative");
  if (vocab == 0) throw InvalidInputError("vocabulary must be nonempty");
  const double v = static_cast<double>(vocab);
  switch (kind) {
    case ObjectiveKind::kLcoMse: return 2.0 / v * sigma_max * std::sqrt(v * loss_value);
    case ObjectiveKind::kLcoLch: return 1.0 / v * sigma_max * std::sqrt(-v * std::expm1(-2.0 * loss_value));
    case ObjectiveKind::kLcoKld: return sigma_max * std::sqrt(2.0 * loss_value);
    default: throw InvalidInputError("gradient-norm bounds are defined for the LCO objectives only");
  }
}

BoundCheck check_gradient_norm_bound(ObjectiveKind kind, const Matrix& jacobian, double sigma_max,
                                     const LossEval& eval) {
  BoundCheck out;
  out.objective = kind;
  out.sigma_max = sigma_max;
  out.actual_gradient_norm = norm2(transpose_times(jacobian, eval.logit_gradient));
  out.bound_value = gradient_norm_bound(kind, eval.value, sigma_max, eval.logit_gradient.size());
  out.satisfied = out.actual_gradient_norm <= out.bound_value + kBoundSlack;
  return out;
}

}  // namespace lco
