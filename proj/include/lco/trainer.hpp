#pragma once

// Training loop: rollouts under a behavioral snapshot, advantage estimation,
// per-timestep losses chained through the model Jacobian, gradient descent.
// Also the exact-gradient convergence experiment for the regression losses.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lco/env.hpp"
#include "lco/objectives.hpp"
#include "lco/policy.hpp"
#include "lco/random.hpp"

namespace lco {

inline constexpr double kDefaultTemperature = 0.6;
inline constexpr double kDefaultTopP = 0.95;

std::string_view to_string(AdvantageEstimatorKind kind);
// SPARSE, DENSE_LOGPROB, DENSE_DPO (case-insensitive, '-' accepted for '_').
AdvantageEstimatorKind parse_estimator(std::string_view name);

struct TrainerConfig {
  ObjectiveKind objective = ObjectiveKind::kLcoKld;
  double learning_rate = 0.1;
  int steps = 100;
  double beta = kDefaultBeta;
  double clip_epsilon = kDefaultClipEpsilon;
  AdvantageEstimatorKind advantage_estimator = AdvantageEstimatorKind::kSparseSampled;
  bool normalize = false;
  NormalizeMode normalize_mode = NormalizeMode::kCenter;
  std::optional<double> grad_clip_norm;
  std::uint64_t seed = 0;
  int snapshot_interval = 1;
  int episodes_per_step = 1;
  double temperature = kDefaultTemperature;
  double top_p = kDefaultTopP;

  /// Throws InvalidInputError on the first violated constraint.
  void validate() const;
};

/// One timestep of a rollout: where the policy was and what the snapshot saw.
struct RolloutStep {
  State state;
  TimestepContext context;
};

/// Every timestep of the episodes collected for a single update.
struct Rollout {
  std::vector<RolloutStep> steps;
};

/// Mean per-timestep loss of a fixed rollout at parameters theta and its
/// parameter gradient sum_t J(s_t)^T grad_z L_t / N.
struct RolloutLoss {
  double value = 0.0;
  std::vector<double> parameter_gradient;
  std::vector<LogitVector> logits;                   // z_theta(s_t)
  std::vector<std::vector<double>> logit_gradients;  // grad_z L_t (not divided by N)
  std::vector<double> losses;                        // L_t
};

RolloutLoss rollout_loss(const PolicyModel& model, std::span<const double> theta, ObjectiveKind kind,
                         const Rollout& rollout);

enum class AdvantageBucket { kPositive, kNegative };
std::string_view to_string(AdvantageBucket bucket);

struct DynamicsRecord {
  int step = 0;
  double loss = 0.0;
  double grad_norm_param = 0.0;        // before clipping
  double grad_sampled_logit = 0.0;     // mean |grad_z L_t| at the sampled token
  double grad_nonsampled_logit = 0.0;  // mean |grad_z L_t| over the other tokens
  double entropy = 0.0;                // nats, mean over timesteps
  double sampled_prob = 0.0;           // mean pi_theta(a_t | s_t)
  AdvantageBucket adv_bucket = AdvantageBucket::kPositive;
  std::optional<double> bound;
};

/// Gradient-norm envelope for one timestep given its loss and sigma_max. The
/// regression and KL losses use their own bound; SFT uses sigma * sqrt(2 L)
/// against the one-hot target; PPO and REINFORCE are held to the KL-form
/// envelope sigma * sqrt(2 KL(pi* || pi_theta)) toward the optimal target.
double timestep_envelope(ObjectiveKind kind, const TimestepContext& ctx, const LogitVector& z, double loss,
                         double sigma_max);

class Trainer {
 public:
  Trainer(PolicyModel model, ToyEnvironment env, TrainerConfig config);

  /// Samples episodes under the current snapshot; advances the generator.
  Rollout collect_rollout();

  /// Refreshes the snapshot when due, rolls out, updates theta.
  DynamicsRecord step();
  std::vector<DynamicsRecord> run();

  const PolicyModel& model() const noexcept { return model_; }
  const ToyEnvironment& environment() const noexcept { return env_; }
  const TrainerConfig& config() const noexcept { return config_; }
  const std::vector<double>& snapshot() const noexcept { return snapshot_; }
  int steps_done() const noexcept { return steps_done_; }

 private:
  // states and actions are every timestep of the update, episode after
  // episode; each episode spans horizon entries.
  std::vector<AdvantageVector> advantages_for(const std::vector<State>& states,
                                              const std::vector<ActionIndex>& actions) const;

  PolicyModel model_;
  ToyEnvironment env_;
  TrainerConfig config_;
  Rng rng_;
  std::vector<double> snapshot_;
  int steps_done_ = 0;
};

/// max_i |1 - eta * c * lambda_i(J J^T)|.
double spectral_radius(const Matrix& jacobian, double eta, double c);

struct ConvergeConfig {
  ModelFamily family = ModelFamily::kTabular;
  ObjectiveKind objective = ObjectiveKind::kLcoMse;
  std::size_t vocab = 4;
  std::size_t feature_dim = 3;  // LINEAR only
  double learning_rate = 0.1;
  int steps = 500;
  double beta = kDefaultBeta;
  double advantage_scale = 1.0;
  bool normalize = false;
  std::uint64_t seed = 1;
  // Optional fixed inputs; drawn from the seed when absent.
  std::optional<std::vector<double>> z_old;
  std::optional<std::vector<double>> advantages;
  std::optional<std::vector<double>> features;
};

struct ConvergeRow {
  int k = 0;
  double loss = 0.0;
  double bound = 0.0;
  double residual_inf = 0.0;  // ||z_k - z*||_inf
  double residual_sq = 0.0;   // ||z_k - z*||^2
  bool asserted = false;
  bool holds = true;
};

struct ConvergeResult {
  double rho = 0.0;
  std::vector<ConvergeRow> rows;
  int violations = 0;         // asserted rows with loss > bound (1 + 1e-6)
  int monotone_breaks = 0;    // k with L_{k+1} > L_k among rows where monotonicity is expected
};

inline constexpr double kLchNeighborhood = 0.5;
inline constexpr double kConvergeRelativeSlack = 1e-6;

/// Exact gradient descent on a single state from z_old toward z* = z_old + A / beta.
/// Throws StepSizeTooLargeError when rho >= 1.
ConvergeResult converge_experiment(const ConvergeConfig& config);

}  // namespace lco
