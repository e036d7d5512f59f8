#pragma once

// Logit-space curvature of each objective: analytic and finite-difference
// Hessians, PSD checks, a negative-curvature witness for the PPO surrogate,
// first-order directionality and gradient-norm bounds.

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "lco/dist.hpp"
#include "lco/linalg.hpp"
#include "lco/objectives.hpp"

namespace lco {

// Point inputs per objective family. The ObjectiveKind passed alongside picks
// the loss when a point type serves more than one objective.
struct SftPoint {  // SFT
  LogitVector z;
  ActionIndex target = 0;
};

struct PolicyGradientPoint {  // PPO, REINFORCE
  TimestepContext context;
  LogitVector z;
};

struct RegressionPoint {  // LCO_MSE, LCO_LCH
  LogitVector z;
  LogitVector z_star;
};

struct DistributionPoint {  // LCO_KLD
  LogitVector z;
  ProbVector pi_star;
};

using HessianPoint = std::variant<SftPoint, PolicyGradientPoint, RegressionPoint, DistributionPoint>;

struct HessianReport {
  Matrix matrix;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  std::optional<std::vector<double>> witness;
};

/// Loss value and logit gradient at the point's own logits.
LossEval evaluate_point(ObjectiveKind kind, const HessianPoint& point);
/// Scalar loss at the point's targets but with logits replaced by z.
double loss_at(ObjectiveKind kind, const HessianPoint& point, const LogitVector& z);

/// Hessian built entrywise from the closed-form second derivatives. For PPO
/// this is the per-entry formula, which carries the factor pi_theta(a).
/// Throws InactiveRegionError when PPO is requested at a clipped point.
HessianReport hessian_analytic(ObjectiveKind kind, const HessianPoint& point);

/// Central second differences of the scalar loss, symmetrized. For PPO every
/// stencil point must stay strictly inside the active region (else KinkError).
HessianReport hessian_numeric(ObjectiveKind kind, const HessianPoint& point, double step = 1e-4);

/// PPO loss Hessian for given pi_theta, sampled index k, behavioral
/// probability of k and sampled advantage.
Matrix ppo_hessian(const ProbVector& pi, ActionIndex k, double pi_old_k, double advantage);

/// D(v) - (v_k - E(v))^2, with E and D the pi-weighted mean and variance of v.
/// v^T H_PPO v equals (A / pi_old(k)) * pi(k) times this quantity.
double ppo_curvature_decomposition(const ProbVector& pi, ActionIndex k, std::span<const double> v);

inline constexpr double kWitnessTolerance = 1e-8;
inline constexpr int kWitnessTrials = 100000;

/// A unit vector v with v^T H_PPO v < -1e-8, where H_PPO is the loss Hessian
/// on-policy (pi_old = pi) with advantage +1 or -1. Tries e^(k), the other
/// basis vectors, then a seeded random search steering v_k relative to
/// E(v) +/- sqrt(D(v)). Throws WitnessSearchFailedError after kWitnessTrials.
std::vector<double> ppo_witness(const ProbVector& pi, ActionIndex k, int advantage_sign,
                                std::uint64_t seed = 0x5eed);

/// <grad_z L, z - z*>. For LCO_KLD the target distribution is softmax(z_star).
double directionality(ObjectiveKind kind, const LogitVector& z, const LogitVector& z_star);

/// Upper bound on ||J^T grad_z L|| as a function of the loss value.
double gradient_norm_bound(ObjectiveKind kind, double loss_value, double sigma_max, std::size_t vocab);

struct BoundCheck {
  double actual_gradient_norm = 0.0;
  double bound_value = 0.0;
  bool satisfied = false;
  ObjectiveKind objective = ObjectiveKind::kLcoMse;
  double sigma_max = 0.0;
};

inline constexpr double kBoundSlack = 1e-9;

/// Compares ||J^T grad|| against the bound for the given loss evaluation.
BoundCheck check_gradient_norm_bound(ObjectiveKind kind, const Matrix& jacobian, double sigma_max,
                                     const LossEval& eval);

}  // namespace lco
