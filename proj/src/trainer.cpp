#include "lco/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <string>

#include "lco/convexity.hpp"
#include "lco/errors.hpp"
#include "lco/optimal_target.hpp"

namespace lco {

std::string_view to_string(AdvantageEstimatorKind kind) {
  switch (kind) {
    case AdvantageEstimatorKind::kSparseSampled: return "SPARSE";
    case AdvantageEstimatorKind::kDenseLogProb: return "DENSE_LOGPROB";
    case AdvantageEstimatorKind::kDenseDpoRatio: return "DENSE_DPO";
  }
  return "?";
}

AdvantageEstimatorKind parse_estimator(std::string_view name) {
  std::string key;
  for (char c : name) key.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  for (auto k : {AdvantageEstimatorKind::kSparseSampled, AdvantageEstimatorKind::kDenseLogProb,
                 AdvantageEstimatorKind::kDenseDpoRatio}) {
    if (key == to_string(k)) return k;
  }
  throw InvalidInputError("unknown advantage estimator '" + std::string(name) + "'");
}

std::string_view to_string(AdvantageBucket bucket) {
  return bucket == AdvantageBucket::kPositive ? "positive" : "negative";
}

void TrainerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidInputError("learning_rate must be > 0");
  if (steps < 1) throw InvalidInputError("steps must be >= 1");
  if (!(beta > 0.0)) throw InvalidInputError("beta must be > 0");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw InvalidInputError("clip_epsilon must lie in (0, 1)");
  if (snapshot_interval < 1) throw InvalidInputError("snapshot_interval must be >= 1");
  if (episodes_per_step < 1) throw InvalidInputError("episodes_per_step must be >= 1");
  if (grad_clip_norm && !(*grad_clip_norm > 0.0)) throw InvalidInputError("grad_clip_norm must be > 0");
  if (!(temperature > 0.0)) throw InvalidInputError("temperature must be > 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw InvalidInputError("top_p must lie in (0, 1]");
}

RolloutLoss rollout_loss(const PolicyModel& model, std::span<const double> theta, ObjectiveKind kind,
                         const Rollout& rollout) {
  if (rollout.steps.empty()) throw InvalidInputError("rollout has no timesteps");
  const double n = static_cast<double>(rollout.steps.size());
  RolloutLoss out;
  out.parameter_gradient.assign(theta.size(), 0.0);
  for (const RolloutStep& rs : rollout.steps) {
    LogitVector z = model.forward_with(theta, rs.state);
    LossEval e = evaluate(kind, rs.context, z);
    out.value += e.value / n;
    model.accumulate_vjp(theta, rs.state, e.logit_gradient, 1.0 / n, out.parameter_gradient);
    out.losses.push_back(e.value);
    out.logits.push_back(std::move(z));
    out.logit_gradients.push_back(std::move(e.logit_gradient));
  }
  return out;
}

double timestep_envelope(ObjectiveKind kind, const TimestepContext& ctx, const LogitVector& z, double loss,
                         double sigma_max) {
  switch (kind) {
    case ObjectiveKind::kLcoMse:
    case ObjectiveKind::kLcoLch:
    case ObjectiveKind::kLcoKld:
      return gradient_norm_bound(kind, std::max(loss, 0.0), sigma_max, z.size());
    case ObjectiveKind::kSft:
      return sigma_max * std::sqrt(2.0 * std::max(loss, 0.0));
    case ObjectiveKind::kPpo:
    case ObjectiveKind::kReinforce: {
      const ProbVector pi_star = optimal_policy(ctx.pi_old, ctx.advantages, ctx.beta);
      const double kl = kl_divergence(pi_star, softmax(z));
      return sigma_max * std::sqrt(2.0 * std::max(kl, 0.0));
    }
  }
  return 0.0;
}

Trainer::Trainer(PolicyModel model, ToyEnvironment env, TrainerConfig config)
    : model_(std::move(model)), env_(std::move(env)), config_(config), rng_(config.seed) {
  config_.validate();
  if (model_.vocab() != env_.vocab() || model_.states().horizon() != env_.horizon()) {
    throw InvalidInputError("model and environment disagree on vocabulary or horizon");
  }
  if (config_.objective == ObjectiveKind::kSft && !std::holds_alternative<TargetSequenceRule>(env_.rule())) {
    throw InvalidInputError("SFT needs a target-sequence environment to teacher-force");
  }
  if (config_.objective != ObjectiveKind::kSft) {
    if (config_.advantage_estimator != AdvantageEstimatorKind::kSparseSampled && !env_.scorer_log_probs()) {
      throw InvalidInputError("dense advantage estimators need a scorer log-probability table");
    }
    if (config_.advantage_estimator == AdvantageEstimatorKind::kDenseDpoRatio && !env_.reference_log_probs()) {
      throw InvalidInputError("DENSE_DPO needs a reference log-probability table");
    }
  }
  snapshot_ = model_.parameters();
}

std::vector<AdvantageVector> Trainer::advantages_for(const std::vector<State>& states,
                                                     const std::vector<ActionIndex>& actions) const {
  const std::size_t v = env_.vocab();
  std::vector<AdvantageVector> out;
  out.reserve(states.size());
  if (config_.objective == ObjectiveKind::kSft) {
    for (std::size_t t = 0; t < states.size(); ++t) out.push_back(AdvantageVector::zeros(v));
    return out;
  }
  switch (config_.advantage_estimator) {
    case AdvantageEstimatorKind::kSparseSampled: {
      const std::size_t horizon = env_.horizon();
      std::vector<double> raw;
      raw.reserve(actions.size());
      for (std::size_t start = 0; start < actions.size(); start += horizon) {
        const std::vector<ActionIndex> episode(actions.begin() + static_cast<std::ptrdiff_t>(start),
                                               actions.begin() + static_cast<std::ptrdiff_t>(start + horizon));
        const std::vector<double> r = env_.sampled_advantages(episode);
        raw.insert(raw.end(), r.begin(), r.end());
      }
      if (config_.normalize) {
        // Centering a one-hot vector would leak signal onto unsampled tokens,
        // so sparse scalars are normalized across every timestep of the
        // update instead. A single episode with a sequence-level verdict
        // therefore centers to zero; use several episodes per step.
        const double mean = stable_mean(raw);
        double var = 0.0;
        for (double& x : raw) {
          x -= mean;
          var += x * x;
        }
        const double sd = std::sqrt(var / static_cast<double>(raw.size()));
        if (config_.normalize_mode == NormalizeMode::kStandardize && sd > kStdFloor) {
          for (double& x : raw) x /= sd;
        }
      }
      for (std::size_t t = 0; t < actions.size(); ++t) {
        out.push_back(estimate_advantages(SparseSampled{raw[t], actions[t]}, v));
      }
      break;
    }
    case AdvantageEstimatorKind::kDenseLogProb:
    case AdvantageEstimatorKind::kDenseDpoRatio: {
      for (std::size_t t = 0; t < states.size(); ++t) {
        const std::size_t row = states[t].prefix.size();
        AdvantageVector a =
            config_.advantage_estimator == AdvantageEstimatorKind::kDenseLogProb
                ? estimate_advantages(DenseLogProb{(*env_.scorer_log_probs())[row]}, v)
                : estimate_advantages(
                      DenseDpoRatio{(*env_.scorer_log_probs())[row], (*env_.reference_log_probs())[row]}, v);
        out.push_back(config_.normalize ? normalize_advantages(a, config_.normalize_mode) : std::move(a));
      }
      break;
    }
  }
  return out;
}

Rollout Trainer::collect_rollout() {
  Rollout rollout;
  const std::size_t horizon = env_.horizon();
  std::vector<State> states;
  std::vector<ActionIndex> actions;
  std::vector<LogitVector> z_olds;
  for (int e = 0; e < config_.episodes_per_step; ++e) {
    State s;
    for (std::size_t t = 0; t < horizon; ++t) {
      LogitVector z_old = model_.forward_with(snapshot_, s);
      ActionIndex a = 0;
      if (config_.objective == ObjectiveKind::kSft) {
        a = std::get<TargetSequenceRule>(env_.rule()).target[t];
      } else {
        a = sample_action(softmax(z_old), config_.temperature, config_.top_p, rng_);
      }
      states.push_back(s);
      actions.push_back(a);
      z_olds.push_back(std::move(z_old));
      s.prefix.push_back(a);
    }
  }
  std::vector<AdvantageVector> adv = advantages_for(states, actions);
  for (std::size_t i = 0; i < states.size(); ++i) {
    rollout.steps.push_back(RolloutStep{
        states[i], TimestepContext::make(std::move(z_olds[i]), actions[i], std::move(adv[i]), config_.beta,
                                         config_.clip_epsilon)});
  }
  return rollout;
}

DynamicsRecord Trainer::step() {
  if (steps_done_ % config_.snapshot_interval == 0) snapshot_ = model_.parameters();
  const Rollout rollout = collect_rollout();
  const std::vector<double>& theta = model_.parameters();
  RolloutLoss rl = rollout_loss(model_, theta, config_.objective, rollout);

  DynamicsRecord rec;
  rec.step = steps_done_ + 1;
  rec.loss = rl.value;
  rec.grad_norm_param = norm2(rl.parameter_gradient);
  if (!std::isfinite(rec.grad_norm_param) || !std::isfinite(rl.value)) {
    std::ostringstream msg;
    msg << "non-finite gradient at step " << rec.step << " (loss " << rl.value << ", gradient norm "
        << rec.grad_norm_param << ", objective " << to_string(config_.objective) << ")";
    throw NonFiniteGradientError(msg.str());
  }

  const double n = static_cast<double>(rollout.steps.size());
  const std::size_t v = model_.vocab();
  double adv_sum = 0.0, bound = 0.0;
  for (std::size_t i = 0; i < rollout.steps.size(); ++i) {
    const RolloutStep& rs = rollout.steps[i];
    const ActionIndex a = rs.context.sampled_action;
    const ProbVector pi = softmax(rl.logits[i]);
    double other = 0.0;
    for (std::size_t j = 0; j < v; ++j)
      if (j != a) other += std::abs(rl.logit_gradients[i][j]);
    rec.grad_sampled_logit += std::abs(rl.logit_gradients[i][a]) / n;
    rec.grad_nonsampled_logit += other / static_cast<double>(v - 1) / n;
    rec.entropy += entropy(pi) / n;
    rec.sampled_prob += pi[a] / n;
    adv_sum += rs.context.sampled_advantage();
    const double sigma = model_.jacobian_sigma_max(theta, rs.state);
    bound += timestep_envelope(config_.objective, rs.context, rl.logits[i], rl.losses[i], sigma) / n;
  }
  rec.adv_bucket = adv_sum >= 0.0 ? AdvantageBucket::kPositive : AdvantageBucket::kNegative;
  rec.bound = bound;

  double scale = config_.learning_rate;
  if (config_.grad_clip_norm && rec.grad_norm_param > *config_.grad_clip_norm) {
    scale *= *config_.grad_clip_norm / rec.grad_norm_param;
  }
  std::vector<double> next = theta;
  for (std::size_t i = 0; i < next.size(); ++i) next[i] -= scale * rl.parameter_gradient[i];
  model_.set_parameters(std::move(next));
  ++steps_done_;
  return rec;
}

std::vector<DynamicsRecord> Trainer::run() {
  std::vector<DynamicsRecord> records;
  records.reserve(static_cast<std::size_t>(config_.steps));
  for (int i = 0; i < config_.steps; ++i) records.push_back(step());
  return records;
}

double spectral_radius(const Matrix& jacobian, double eta, double c) {
  for (double x : jacobian.data())
    if (!std::isfinite(x)) throw InvalidInputError("Jacobian has non-finite entries");
  const SymmetricEigen eig = jacobi_eigen(gram_rows(jacobian));
  double rho = 0.0;
  for (double lambda : eig.values) rho = std::max(rho, std::abs(1.0 - eta * c * lambda));
  return rho;
}

namespace {

std::vector<double> draw_normal(Rng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * standard_normal(rng);
  return v;
}

}  // namespace

ConvergeResult converge_experiment(const ConvergeConfig& config) {
  if (config.objective != ObjectiveKind::kLcoMse && config.objective != ObjectiveKind::kLcoLch) {
    throw InvalidInputError("convergence experiments cover LCO_MSE and LCO_LCH only");
  }
  if (config.family == ModelFamily::kMlp1) throw InvalidInputError("convergence experiments need TABULAR or LINEAR");
  if (config.steps < 0) throw InvalidInputError("steps must be >= 0");
  if (!(config.learning_rate >= 0.0)) throw InvalidInputError("learning rate must be >= 0");
  if (!(config.beta > 0.0)) throw InvalidInputError("beta must be > 0");
  const std::size_t v = config.vocab;

  Rng rng(config.seed);
  const std::vector<double> z_old_values = config.z_old ? *config.z_old : draw_normal(rng, v, 1.0);
  std::vector<double> adv_values = config.advantages ? *config.advantages : draw_normal(rng, v, config.advantage_scale);
  if (z_old_values.size() != v || adv_values.size() != v) throw InvalidInputError("inputs must have vocab entries");
  AdvantageVector adv(std::move(adv_values));
  if (config.normalize) adv = normalize_advantages(adv);
  // z_old only fixes where the iterate starts; the residual z - z* depends on
  // it through delta_0 = -A / beta alone.

  State state;
  std::optional<PolicyModel> model;
  // Both families are exactly linear, z_theta = J theta, so a descent step
  // moves the logits by -eta J J^T g. The iterate is carried as the residual
  // r = z - z* directly; forming z and subtracting z* cancels nearly equal
  // numbers and floors the residual at the rounding level of z*.
  if (config.family == ModelFamily::kTabular) {
    model = PolicyModel::tabular(v, 1);
  } else {
    std::vector<double> phi = config.features ? *config.features : draw_normal(rng, config.feature_dim, 1.0);
    if (!(dot(phi, phi) > 0.0)) throw InvalidInputError("feature vector must be nonzero");
    model = PolicyModel::linear(v, 1, std::vector<std::vector<double>>{phi});
  }
  // Starting at z_old means r_0 = -A / beta. The minimum-norm LINEAR start
  // W = z_old phi^T / ||phi||^2 reproduces z_old, so the same holds there.
  std::vector<double> residual(v);
  for (std::size_t a = 0; a < v; ++a) residual[a] = -adv[a] / config.beta;

  const double vd = static_cast<double>(v);
  const bool mse = config.objective == ObjectiveKind::kLcoMse;
  const double c = mse ? 2.0 / vd : 1.0 / vd;
  const Matrix j = model->jacobian(state).jacobian;
  ConvergeResult out;
  out.rho = spectral_radius(j, config.learning_rate, c);
  if (out.rho >= 1.0) {
    std::ostringstream msg;
    msg << "spectral radius " << out.rho << " >= 1; reduce the learning rate";
    throw StepSizeTooLargeError(msg.str(), out.rho);
  }

  const double a_norm_sq = dot(adv.values(), adv.values());
  const double scale = (mse ? 1.0 / vd : 1.0 / (2.0 * vd)) * a_norm_sq / (config.beta * config.beta);
  const LogitVector origin(std::vector<double>(v, 0.0));
  for (int k = 0; k <= config.steps; ++k) {
    const LogitVector r(residual);
    const LossEval e = mse ? lco_mse_eval(r, origin) : lco_lch_eval(r, origin);
    ConvergeRow row;
    row.k = k;
    row.loss = e.value;
    row.bound = scale * std::pow(out.rho, 2.0 * k);
    for (std::size_t a = 0; a < v; ++a) {
      row.residual_inf = std::max(row.residual_inf, std::abs(r[a]));
      row.residual_sq += r[a] * r[a];
    }
    row.asserted = mse || row.residual_inf <= kLchNeighborhood;
    row.holds = !row.asserted || row.loss <= row.bound * (1.0 + kConvergeRelativeSlack);
    if (!row.holds) ++out.violations;
    if (!out.rows.empty() && (mse || out.rows.back().asserted) && row.loss > out.rows.back().loss) {
      ++out.monotone_breaks;
    }
    out.rows.push_back(row);
    if (k == config.steps) break;
    const std::vector<double> step = j * transpose_times(j, e.logit_gradient);
    for (std::size_t a = 0; a < v; ++a) residual[a] -= config.learning_rate * step[a];
  }
  return out;
}

}  // namespace lco
