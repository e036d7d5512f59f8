#include "lco/optimal_target.hpp"

#include <cmath>
#include <string>

#include "lco/errors.hpp"

namespace lco {

namespace {

void require_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidInputError("beta must be positive and finite");
}

void require_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw InvalidInputError(std::string(what) + ": length " + std::to_string(got) + ", expected " +
                            std::to_string(want));
  }
}

void require_log_probs(const std::vector<double>& lp, const char* what) {
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (std::isnan(lp[i]) || std::isinf(lp[i])) {
      throw EstimatorDomainError(std::string(what) + ": log of zero (or invalid) probability at index " +
                                 std::to_string(i));
    }
    if (lp[i] > 1e-12) {
      throw EstimatorDomainError(std::string(what) + ": log-probability above zero at index " +
                                 std::to_string(i));
    }
  }
}

}  // namespace

ProbVector optimal_policy(const ProbVector& pi_old, const AdvantageVector& a, double beta) {
  require_beta(beta);
  require_length(a.size(), pi_old.size(), "advantages");
  const std::size_t n = pi_old.size();
  std::vector<double> logits(n);
  std::vector<double> finite;
  finite.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (pi_old[i] > 0.0) {
      logits[i] = std::log(pi_old[i]) + a[i] / beta;
      finite.push_back(logits[i]);
    }
  }
  const double lse = log_sum_exp(finite);
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (pi_old[i] > 0.0) out[i] = std::exp(logits[i] - lse);
  }
  double s = 0.0;
  for (double v : out) s += v;
  for (double& v : out) v /= s;
  return ProbVector(std::move(out));
}

LogitVector optimal_logits(const LogitVector& z_old, const AdvantageVector& a, double beta) {
  require_beta(beta);
  require_length(a.size(), z_old.size(), "advantages");
  std::vector<double> z(z_old.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = z_old[i] + a[i] / beta;
  return LogitVector(std::move(z));
}

OptimalTarget optimal_target(const LogitVector& z_old, const AdvantageVector& a, double beta) {
  LogitVector z_star = optimal_logits(z_old, a, beta);
  ProbVector pi_star = softmax(z_star);
  return {std::move(pi_star), std::move(z_star)};
}

double kl_regularized_objective(const ProbVector& pi, const ProbVector& pi_old, const AdvantageVector& a,
                                double beta) {
  require_beta(beta);
  require_length(a.size(), pi.size(), "advantages");
  double expected = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) expected += pi[i] * a[i];
  return expected - beta * kl_divergence(pi, pi_old);
}

AdvantageVector estimate_advantages(const AdvantageEstimator& estimator, std::size_t vocab) {
  if (vocab < 2) throw InvalidInputError("vocabulary must have at least two actions");
  return std::visit(
      [vocab](const auto& in) -> AdvantageVector {
        using T = std::decay_t<decltype(in)>;
        if constexpr (std::is_same_v<T, SparseSampled>) {
          if (in.action >= vocab) throw InvalidInputError("sampled action out of range");
          if (!std::isfinite(in.advantage)) throw EstimatorDomainError("sampled advantage is not finite");
          std::vector<double> v(vocab, 0.0);
          v[in.action] = in.advantage;
          return AdvantageVector(std::move(v), std::vector<ActionIndex>{in.action});
        } else if constexpr (std::is_same_v<T, DenseLogProb>) {
          require_length(in.log_phi.size(), vocab, "scorer log-probabilities");
          require_log_probs(in.log_phi, "scorer");
          return AdvantageVector(in.log_phi);
        } else {
          require_length(in.log_phi_dpo.size(), vocab, "DPO log-probabilities");
          require_length(in.log_phi_ref.size(), vocab, "reference log-probabilities");
          require_log_probs(in.log_phi_dpo, "DPO model");
          require_log_probs(in.log_phi_ref, "reference model");
          std::vector<double> v(vocab);
          for (std::size_t i = 0; i < vocab; ++i) v[i] = in.log_phi_dpo[i] - in.log_phi_ref[i];
          return AdvantageVector(std::move(v));
        }
      },
      estimator);
}

double optimal_shift(const AdvantageVector& a) {
  if (a.size() == 0) return 0.0;
  return -stable_mean(a.values());
}

}  // namespace lco
