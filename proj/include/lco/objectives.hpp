#pragma once

// Per-timestep losses and their analytic gradients with respect to logits.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lco/dist.hpp"
#include "lco/optimal_target.hpp"

namespace lco {

inline constexpr double kDefaultClipEpsilon = 0.2;
inline constexpr double kMinBehaviorProb = 1e-300;

enum class ObjectiveKind { kSft, kPpo, kReinforce, kLcoMse, kLcoLch, kLcoKld };

inline constexpr ObjectiveKind kAllObjectives[] = {ObjectiveKind::kSft,    ObjectiveKind::kPpo,
                                                   ObjectiveKind::kReinforce, ObjectiveKind::kLcoMse,
                                                   ObjectiveKind::kLcoLch, ObjectiveKind::kLcoKld};

std::string_view to_string(ObjectiveKind kind);
// Accepts the canonical names (SFT, PPO, REINFORCE, LCO_MSE, LCO_LCH, LCO_KLD),
// case-insensitively, with '-' accepted for '_'.
ObjectiveKind parse_objective(std::string_view name);
bool is_lco(ObjectiveKind kind);

struct LossEval {
  double value = 0.0;
  std::vector<double> logit_gradient;
};

/// Everything a per-timestep loss needs from the behavioral snapshot.
struct TimestepContext {
  LogitVector z_old;
  ProbVector pi_old;
  ActionIndex sampled_action = 0;
  AdvantageVector advantages;
  double beta = kDefaultBeta;
  double clip_epsilon = kDefaultClipEpsilon;

  // Builds the context with pi_old = softmax(z_old) and checks every invariant.
  static TimestepContext make(LogitVector z_old, ActionIndex sampled_action, AdvantageVector advantages,
                              double beta = kDefaultBeta, double clip_epsilon = kDefaultClipEpsilon);

  double sampled_advantage() const { return advantages[sampled_action]; }
};

LossEval sft_eval(const LogitVector& z, ActionIndex target);

/// Probability ratio pi_theta(a) / pi_old(a) at the sampled action.
double ppo_ratio(const TimestepContext& ctx, const LogitVector& z);
bool ppo_active(const TimestepContext& ctx, const LogitVector& z);
LossEval ppo_eval(const TimestepContext& ctx, const LogitVector& z);

LossEval reinforce_eval(const TimestepContext& ctx, const LogitVector& z);

LossEval lco_mse_eval(const LogitVector& z, const LogitVector& z_star);
LossEval lco_lch_eval(const LogitVector& z, const LogitVector& z_star);
LossEval lco_kld_eval(const LogitVector& z, const ProbVector& pi_star);

/// log cosh(x) without overflow.
double log_cosh(double x);

/// Dispatches on kind. Targets are derived from the context: the sampled
/// action for SFT, z* = z_old + A / beta for the regression losses, and
/// pi* = softmax(z*) for LCO-KLD.
LossEval evaluate(ObjectiveKind kind, const TimestepContext& ctx, const LogitVector& z);

struct TimestepInput {
  TimestepContext context;
  LogitVector logits;
};

struct BatchEval {
  double value = 0.0;
  // Gradient of the batch mean with respect to each timestep's logits
  // (per-timestep gradient divided by the batch size).
  std::vector<std::vector<double>> logit_gradients;
};

BatchEval batch_eval(ObjectiveKind kind, std::span<const TimestepInput> batch);

}  // namespace lco
