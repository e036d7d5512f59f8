#include "lco/objectives.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "lco/errors.hpp"

namespace lco {

namespace {

void require_action(ActionIndex a, std::size_t n) {
  if (a >= n) {
    throw InvalidInputError("action index " + std::to_string(a) + " out of range for vocabulary of " +
                            std::to_string(n));
  }
}

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    throw InvalidInputError("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

double behavior_prob(const TimestepContext& ctx) {
  const double p = ctx.pi_old[ctx.sampled_action];
  if (p < kMinBehaviorProb) {
    throw DegenerateRatioError("behavioral probability of the sampled action is below 1e-300");
  }
  return p;
}

}  // namespace

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::kSft: return "SFT";
    case ObjectiveKind::kPpo: return "PPO";
    case ObjectiveKind::kReinforce: return "REINFORCE";
    case ObjectiveKind::kLcoMse: return "LCO_MSE";
    case ObjectiveKind::kLcoLch: return "LCO_LCH";
    case ObjectiveKind::kLcoKld: return "LCO_KLD";
  }
  return "?";
}

ObjectiveKind parse_objective(std::string_view name) {
  std::string key;
  for (char c : name) key.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  for (ObjectiveKind k : kAllObjectives) {
    if (key == to_string(k)) return k;
  }
  throw InvalidInputError("unknown objective '" + std::string(name) + "'");
}

bool is_lco(ObjectiveKind kind) {
  return kind == ObjectiveKind::kLcoMse || kind == ObjectiveKind::kLcoLch || kind == ObjectiveKind::kLcoKld;
}

TimestepContext TimestepContext::make(LogitVector z_old, ActionIndex sampled_action, AdvantageVector advantages,
                                      double beta, double clip_epsilon) {
  require_action(sampled_action, z_old.size());
  require_same_length(advantages.size(), z_old.size());
  if (!(beta > 0.0)) throw InvalidInputError("beta must be positive");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw InvalidInputError("clip epsilon must lie in (0, 1)");
  ProbVector pi_old = softmax(z_old);
  return TimestepContext{std::move(z_old), std::move(pi_old), sampled_action, std::move(advantages), beta,
                         clip_epsilon};
}

LossEval sft_eval(const LogitVector& z, ActionIndex target) {
  require_action(target, z.size());
  const ProbVector pi = softmax(z);
  const std::vector<double> logp = log_softmax(z);
  LossEval out{-logp[target], pi.vec()};
  out.logit_gradient[target] -= 1.0;
  return out;
}

double ppo_ratio(const TimestepContext& ctx, const LogitVector& z) {
  require_same_length(z.size(), ctx.pi_old.size());
  const double old = behavior_prob(ctx);
  const std::vector<double> logp = log_softmax(z);
  return std::exp(logp[ctx.sampled_action] - std::log(old));
}

bool ppo_active(const TimestepContext& ctx, const LogitVector& z) {
  const double r = ppo_ratio(ctx, z);
  const double adv = ctx.sampled_advantage();
  return (adv > 0.0 && r < 1.0 + ctx.clip_epsilon) || (adv < 0.0 && r > 1.0 - ctx.clip_epsilon);
}

LossEval ppo_eval(const TimestepContext& ctx, const LogitVector& z) {
  const double old = behavior_prob(ctx);
  const double r = ppo_ratio(ctx, z);
  const double adv = ctx.sampled_advantage();
  const std::size_t n = z.size();
  LossEval out{0.0, std::vector<double>(n, 0.0)};
  if (!ppo_active(ctx, z)) {
    const double clipped = std::clamp(r, 1.0 - ctx.clip_epsilon, 1.0 + ctx.clip_epsilon);
    out.value = adv == 0.0 ? 0.0 : -clipped * adv;
    return out;
  }
  out.value = -r * adv;
  const ProbVector pi = softmax(z);
  const ActionIndex a = ctx.sampled_action;
  const double scale = adv / old * pi[a];
  for (std::size_t i = 0; i < n; ++i) out.logit_gradient[i] = scale * (pi[i] - (i == a ? 1.0 : 0.0));
  return out;
}

LossEval reinforce_eval(const TimestepContext& ctx, const LogitVector& z) {
  require_same_length(z.size(), ctx.pi_old.size());
  const double adv = ctx.sampled_advantage();
  const ActionIndex a = ctx.sampled_action;
  const ProbVector pi = softmax(z);
  const std::vector<double> logp = log_softmax(z);
  LossEval out{-adv * logp[a], std::vector<double>(z.size())};
  for (std::size_t i = 0; i < z.size(); ++i) out.logit_gradient[i] = adv * (pi[i] - (i == a ? 1.0 : 0.0));
  if (adv == 0.0) out.value = 0.0;
  return out;
}

LossEval lco_mse_eval(const LogitVector& z, const LogitVector& z_star) {
  require_same_length(z.size(), z_star.size());
  const double n = static_cast<double>(z.size());
  LossEval out{0.0, std::vector<double>(z.size())};
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = z[i] - z_star[i];
    out.value += d * d;
    out.logit_gradient[i] = 2.0 / n * d;
  }
  out.value /= n;
  return out;
}

double log_cosh(double x) {
  const double ax = std::abs(x);
  if (ax > 20.0) return ax + std::log1p(std::exp(-2.0 * ax)) - std::numbers::ln2;
  const double s = std::sinh(0.5 * x);
  return std::log1p(2.0 * s * s);
}

LossEval lco_lch_eval(const LogitVector& z, const LogitVector& z_star) {
  require_same_length(z.size(), z_star.size());
  const double n = static_cast<double>(z.size());
  LossEval out{0.0, std::vector<double>(z.size())};
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = z[i] - z_star[i];
    out.value += log_cosh(d);
    out.logit_gradient[i] = std::tanh(d) / n;
  }
  out.value /= n;
  return out;
}

LossEval lco_kld_eval(const LogitVector& z, const ProbVector& pi_star) {
  require_same_length(z.size(), pi_star.size());
  const ProbVector pi = softmax(z);
  const std::vector<double> logp = log_softmax(z);
  LossEval out{0.0, std::vector<double>(z.size())};
  for (std::size_t i = 0; i < z.size(); ++i) {
    // Same nonnegative form as kl_divergence, with log pi taken from logits so
    // an underflowed probability still gives a finite term.
    if (pi_star[i] > 0.0) out.value += pi_star[i] * exp_excess(logp[i] - std::log(pi_star[i]));
    else out.value += pi[i];
    out.logit_gradient[i] = pi[i] - pi_star[i];
  }
  return out;
}

LossEval evaluate(ObjectiveKind kind, const TimestepContext& ctx, const LogitVector& z) {
  switch (kind) {
    case ObjectiveKind::kSft: return sft_eval(z, ctx.sampled_action);
    case ObjectiveKind::kPpo: return ppo_eval(ctx, z);
    case ObjectiveKind::kReinforce: return reinforce_eval(ctx, z);
    case ObjectiveKind::kLcoMse: return lco_mse_eval(z, optimal_logits(ctx.z_old, ctx.advantages, ctx.beta));
    case ObjectiveKind::kLcoLch: return lco_lch_eval(z, optimal_logits(ctx.z_old, ctx.advantages, ctx.beta));
    case ObjectiveKind::kLcoKld:
      return lco_kld_eval(z, optimal_policy(ctx.pi_old, ctx.advantages, ctx.beta));
  }
  throw InvalidInputError("unknown objective kind");
}

BatchEval batch_eval(ObjectiveKind kind, std::span<const TimestepInput> batch) {
  if (batch.empty()) throw InvalidInputError("batch_eval: empty batch");
  const double n = static_cast<double>(batch.size());
  BatchEval out;
  out.logit_gradients.reserve(batch.size());
  // Fixed left-to-right order keeps the reduction independent of how the
  // per-timestep evaluations were scheduled.
  double sum = 0.0;
  for (const TimestepInput& item : batch) {
    LossEval e = evaluate(kind, item.context, item.logits);
    sum += e.value;
    for (double& g : e.logit_gradient) g /= n;
    out.logit_gradients.push_back(std::move(e.logit_gradient));
  }
  out.value = sum / n;
  return out;
}

}  // namespace lco
