#include "lco/policy.hpp"

#include <cctype>
#include <cmath>
#include <string>

#include "lco/errors.hpp"

namespace lco {

namespace {

constexpr std::size_t kMaxStates = 1'000'000;
constexpr std::size_t kMaxParameters = 5'000'000;

}  // namespace

std::string_view to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::kTabular: return "TABULAR";
    case ModelFamily::kLinear: return "LINEAR";
    case ModelFamily::kMlp1: return "MLP1";
  }
  return "?";
}

ModelFamily parse_family(std::string_view name) {
  std::string key;
  for (char c : name) key.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  for (ModelFamily f : {ModelFamily::kTabular, ModelFamily::kLinear, ModelFamily::kMlp1}) {
    if (key == to_string(f)) return f;
  }
  throw InvalidInputError("unknown model family '" + std::string(name) + "'");
}

StateSpace::StateSpace(std::size_t vocab, std::size_t horizon) : vocab_(vocab), horizon_(horizon), size_(0) {
  if (vocab < 2) throw InvalidInputError("vocabulary must have at least two tokens");
  if (horizon < 1) throw InvalidInputError("horizon must be at least one");
  std::size_t count = 1;
  for (std::size_t len = 0; len < horizon; ++len) {
    offsets_.push_back(size_);
    size_ += count;
    if (size_ > kMaxStates) throw InvalidInputError("state space too large (more than 1e6 prefixes)");
    count *= vocab;
  }
}

std::size_t StateSpace::index(const State& s) const {
  const std::size_t len = s.prefix.size();
  if (len >= horizon_) {
    throw InvalidStateError("prefix of length " + std::to_string(len) + " is outside a horizon of " +
                            std::to_string(horizon_));
  }
  std::size_t code = 0;
  for (ActionIndex a : s.prefix) {
    if (a >= vocab_) throw InvalidStateError("prefix token " + std::to_string(a) + " outside the vocabulary");
    code = code * vocab_ + a;
  }
  return offsets_[len] + code;
}

std::vector<double> StateSpace::canonical_features(const State& s) const {
  index(s);  // validates
  std::vector<double> phi(canonical_feature_dim(), 0.0);
  phi[0] = 1.0;
  phi[1 + s.prefix.size()] = 1.0;
  const std::size_t last = s.prefix.empty() ? vocab_ : s.prefix.back();
  phi[1 + horizon_ + last] = 1.0;
  return phi;
}

PolicyModel::PolicyModel(ModelFamily family, StateSpace states, std::size_t feature_dim, std::size_t width)
    : family_(family), states_(std::move(states)), feature_dim_(feature_dim), width_(width) {}

PolicyModel PolicyModel::tabular(std::size_t vocab, std::size_t horizon) {
  StateSpace states(vocab, horizon);
  if (states.size() * vocab > kMaxParameters) throw InvalidInputError("tabular model too large");
  PolicyModel m(ModelFamily::kTabular, states, 0, 0);
  m.params_.assign(states.size() * vocab, 0.0);
  return m;
}

PolicyModel PolicyModel::linear(std::size_t vocab, std::size_t horizon,
                                std::optional<std::vector<std::vector<double>>> feature_table) {
  StateSpace states(vocab, horizon);
  std::size_t dim = states.canonical_feature_dim();
  if (feature_table) {
    if (feature_table->size() != states.size() || feature_table->empty()) {
      throw InvalidInputError("feature table needs one row per state");
    }
    dim = feature_table->front().size();
    for (const auto& row : *feature_table) {
      if (row.size() != dim || dim == 0) throw InvalidInputError("feature rows must share a nonzero length");
    }
  }
  PolicyModel m(ModelFamily::kLinear, states, dim, 0);
  m.feature_table_ = std::move(feature_table);
  m.params_.assign(vocab * dim, 0.0);
  return m;
}

PolicyModel PolicyModel::mlp1(std::size_t vocab, std::size_t horizon, std::size_t width, std::uint64_t seed,
                              double init_scale, std::optional<std::vector<std::vector<double>>> feature_table) {
  if (width == 0) throw InvalidInputError("hidden width must be positive");
  PolicyModel lin = linear(vocab, horizon, std::move(feature_table));
  PolicyModel m(ModelFamily::kMlp1, lin.states_, lin.feature_dim_, width);
  m.feature_table_ = std::move(lin.feature_table_);
  const std::size_t d = m.feature_dim_;
  m.params_.resize(width * d + width + vocab * width + vocab);
  Rng rng(seed);
  for (double& p : m.params_) p = uniform(rng, -init_scale, init_scale);
  return m;
}

void PolicyModel::set_parameters(std::vector<double> theta) {
  if (theta.size() != params_.size()) {
    throw InvalidInputError("parameter count " + std::to_string(theta.size()) + " does not match model (" +
                            std::to_string(params_.size()) + ")");
  }
  params_ = std::move(theta);
}

std::vector<double> PolicyModel::features(const State& s) const {
  if (feature_table_) return (*feature_table_)[states_.index(s)];
  return states_.canonical_features(s);
}

LogitVector PolicyModel::forward_with(std::span<const double> theta, const State& s) const {
  const std::size_t v = vocab();
  if (theta.size() != params_.size()) throw InvalidInputError("parameter vector has the wrong length");
  std::vector<double> z(v, 0.0);
  switch (family_) {
    case ModelFamily::kTabular: {
      const std::size_t base = states_.index(s) * v;
      for (std::size_t a = 0; a < v; ++a) z[a] = theta[base + a];
      break;
    }
    case ModelFamily::kLinear: {
      const std::vector<double> phi = features(s);
      for (std::size_t a = 0; a < v; ++a) z[a] = dot(theta.subspan(a * feature_dim_, feature_dim_), phi);
      break;
    }
    case ModelFamily::kMlp1: {
      const std::vector<double> phi = features(s);
      const std::size_t d = feature_dim_, h = width_;
      const auto w1 = theta.subspan(0, h * d);
      const auto b1 = theta.subspan(h * d, h);
      const auto w2 = theta.subspan(h * d + h, v * h);
      const auto b2 = theta.subspan(h * d + h + v * h, v);
      std::vector<double> hidden(h);
      for (std::size_t i = 0; i < h; ++i) hidden[i] = std::tanh(dot(w1.subspan(i * d, d), phi) + b1[i]);
      for (std::size_t a = 0; a < v; ++a) z[a] = dot(w2.subspan(a * h, h), hidden) + b2[a];
      break;
    }
  }
  return LogitVector(std::move(z));
}

JacobianInfo PolicyModel::jacobian_with(std::span<const double> theta, const State& s) const {
  const std::size_t v = vocab();
  if (theta.size() != params_.size()) throw InvalidInputError("parameter vector has the wrong length");
  Matrix j(v, params_.size());
  switch (family_) {
    case ModelFamily::kTabular: {
      const std::size_t base = states_.index(s) * v;
      for (std::size_t a = 0; a < v; ++a) j(a, base + a) = 1.0;
      break;
    }
    case ModelFamily::kLinear: {
      const std::vector<double> phi = features(s);
      for (std::size_t a = 0; a < v; ++a)
        for (std::size_t k = 0; k < feature_dim_; ++k) j(a, a * feature_dim_ + k) = phi[k];
      break;
    }
    case ModelFamily::kMlp1: {
      const std::vector<double> phi = features(s);
      const std::size_t d = feature_dim_, h = width_;
      const auto w1 = theta.subspan(0, h * d);
      const auto b1 = theta.subspan(h * d, h);
      const auto w2 = theta.subspan(h * d + h, v * h);
      std::vector<double> hidden(h), dtanh(h);
      for (std::size_t i = 0; i < h; ++i) {
        hidden[i] = std::tanh(dot(w1.subspan(i * d, d), phi) + b1[i]);
        dtanh[i] = 1.0 - hidden[i] * hidden[i];
      }
      const std::size_t off_b1 = h * d, off_w2 = h * d + h, off_b2 = h * d + h + v * h;
      // Backpropagate one output logit at a time.
      for (std::size_t a = 0; a < v; ++a) {
        for (std::size_t i = 0; i < h; ++i) {
          const double upstream = w2[a * h + i] * dtanh[i];
          for (std::size_t k = 0; k < d; ++k) j(a, i * d + k) = upstream * phi[k];
          j(a, off_b1 + i) = upstream;
          j(a, off_w2 + a * h + i) = hidden[i];
        }
        j(a, off_b2 + a) = 1.0;
      }
      break;
    }
  }
  const double sigma = largest_singular_value(j);
  return JacobianInfo{std::move(j), sigma};
}

void PolicyModel::accumulate_vjp(std::span<const double> theta, const State& s, std::span<const double> g,
                                 double scale, std::vector<double>& out) const {
  const std::size_t v = vocab();
  if (g.size() != v || out.size() != params_.size()) throw InvalidInputError("vjp shape mismatch");
  switch (family_) {
    case ModelFamily::kTabular: {
      const std::size_t base = states_.index(s) * v;
      for (std::size_t a = 0; a < v; ++a) out[base + a] += scale * g[a];
      break;
    }
    case ModelFamily::kLinear: {
      const std::vector<double> phi = features(s);
      for (std::size_t a = 0; a < v; ++a)
        for (std::size_t k = 0; k < feature_dim_; ++k) out[a * feature_dim_ + k] += scale * g[a] * phi[k];
      break;
    }
    case ModelFamily::kMlp1: {
      const std::vector<double> jtg = transpose_times(jacobian_with(theta, s).jacobian, g);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * jtg[i];
      break;
    }
  }
}

double PolicyModel::jacobian_sigma_max(std::span<const double> theta, const State& s) const {
  switch (family_) {
    case ModelFamily::kTabular: states_.index(s); return 1.0;
    case ModelFamily::kLinear: return norm2(features(s));
    case ModelFamily::kMlp1: return jacobian_with(theta, s).sigma_max;
  }
  return 0.0;
}

void PolicyModel::set_initial_logits(std::span<const double> logits) {
  const std::size_t v = vocab();
  if (logits.size() != v) throw InvalidInputError("initial logits must have one entry per token");
  switch (family_) {
    case ModelFamily::kTabular:
      for (std::size_t s = 0; s < states_.size(); ++s)
        for (std::size_t a = 0; a < v; ++a) params_[s * v + a] = logits[a];
      break;
    case ModelFamily::kLinear:
      std::fill(params_.begin(), params_.end(), 0.0);
      for (std::size_t a = 0; a < v; ++a) params_[a * feature_dim_] = logits[a];
      break;
    case ModelFamily::kMlp1: {
      const std::size_t off_b2 = width_ * feature_dim_ + width_ + v * width_;
      for (std::size_t a = 0; a < v; ++a) params_[off_b2 + a] = logits[a];
      break;
    }
  }
}

double linearization_residual(const PolicyModel& model, std::span<const double> theta,
                              std::span<const double> theta_star, const State& s) {
  const LogitVector z = model.forward_with(theta, s);
  const LogitVector z_star = model.forward_with(theta_star, s);
  const JacobianInfo info = model.jacobian_with(theta, s);
  std::vector<double> delta(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) delta[i] = theta_star[i] - theta[i];
  const std::vector<double> predicted = info.jacobian * delta;
  double num = 0.0, den = 0.0;
  for (std::size_t a = 0; a < z.size(); ++a) {
    const double actual = z_star[a] - z[a];
    num += (actual - predicted[a]) * (actual - predicted[a]);
    den += actual * actual;
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

}  // namespace lco
