#pragma once

// Closed-form maximizer of the KL-regularized expected advantage, its
// representative logits, and the advantage estimators that feed it.

#include <variant>
#include <vector>

#include "lco/dist.hpp"

namespace lco {

inline constexpr double kDefaultBeta = 1.0;

struct OptimalTarget {
  ProbVector pi_star;
  LogitVector z_star;
};

/// pi*(i) proportional to pi_old(i) * exp(A_i / beta), evaluated in log space.
ProbVector optimal_policy(const ProbVector& pi_old, const AdvantageVector& a, double beta);

/// z*_i = z_old_i + A_i / beta. This exact representative is used everywhere;
/// no shift is applied.
LogitVector optimal_logits(const LogitVector& z_old, const AdvantageVector& a, double beta);

OptimalTarget optimal_target(const LogitVector& z_old, const AdvantageVector& a, double beta);

/// E_pi[A] - beta * KL(pi || pi_old), the objective pi* maximizes.
double kl_regularized_objective(const ProbVector& pi, const ProbVector& pi_old, const AdvantageVector& a,
                                double beta);

// Advantage estimator inputs, one alternative per estimator kind.
struct SparseSampled {
  double advantage = 0.0;
  ActionIndex action = 0;
};

struct DenseLogProb {
  std::vector<double> log_phi;  // log-probabilities of the scorer model
};

struct DenseDpoRatio {
  std::vector<double> log_phi_dpo;
  std::vector<double> log_phi_ref;
};

using AdvantageEstimator = std::variant<SparseSampled, DenseLogProb, DenseDpoRatio>;

enum class AdvantageEstimatorKind { kSparseSampled, kDenseLogProb, kDenseDpoRatio };

AdvantageVector estimate_advantages(const AdvantageEstimator& estimator, std::size_t vocab);

/// argmin_C ||A + C 1||^2, i.e. -mean(A).
double optimal_shift(const AdvantageVector& a);

}  // namespace lco
