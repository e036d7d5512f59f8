#include "lco/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace lco {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Field access for one section. Every key must be consumed, so typos surface
// as errors instead of silently falling back to defaults.
class Section {
 public:
  Section(const IniFile& ini, std::string name) : source_(ini.source), name_(std::move(name)) {
    if (auto it = ini.sections.find(name_); it != ini.sections.end()) entries_ = &it->second;
  }

  bool present() const { return entries_ != nullptr; }
  bool has(const std::string& key) const { return entries_ && entries_->count(key); }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    int line = 0;
    if (entries_) {
      if (auto it = entries_->find(key); it != entries_->end()) line = it->second.line;
    }
    throw ConfigError(source_, line, name_ + "." + key, message);
  }

  std::optional<std::string> text(const std::string& key) {
    if (!has(key)) return std::nullopt;
    used_.insert(key);
    return entries_->at(key).value;
  }

  std::optional<double> number(const std::string& key) {
    auto t = text(key);
    if (!t) return std::nullopt;
    try {
      std::size_t used = 0;
      const double v = std::stod(*t, &used);
      if (used == t->size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    fail(key, "expected a finite number, got '" + *t + "'");
  }

  std::optional<long long> integer(const std::string& key) {
    auto t = text(key);
    if (!t) return std::nullopt;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(*t, &used);
      if (used == t->size()) return v;
    } catch (const std::exception&) {
    }
    fail(key, "expected an integer, got '" + *t + "'");
  }

  std::optional<std::size_t> count(const std::string& key) {
    auto v = integer(key);
    if (!v) return std::nullopt;
    if (*v < 0) fail(key, "must be nonnegative");
    return static_cast<std::size_t>(*v);
  }

  std::optional<bool> boolean(const std::string& key) {
    auto t = text(key);
    if (!t) return std::nullopt;
    const std::string v = lower(*t);
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    fail(key, "expected true or false, got '" + *t + "'");
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    auto t = text(key);
    if (!t) return std::nullopt;
    std::string s = *t;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
      try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
        out.push_back(v);
      } catch (const std::exception&) {
        fail(key, "bad list element '" + tok + "'");
      }
    }
    if (out.empty()) fail(key, "expected at least one value");
    return out;
  }

  template <typename Fn>
  auto parsed(const std::string& key, Fn fn) -> std::optional<decltype(fn(std::string{}))> {
    auto t = text(key);
    if (!t) return std::nullopt;
    try {
      return fn(*t);
    } catch (const Error& e) {
      fail(key, e.what());
    }
  }

  void finish() const {
    if (!entries_) return;
    for (const auto& [key, entry] : *entries_) {
      if (!used_.count(key)) throw ConfigError(source_, entry.line, name_ + "." + key, "unknown key");
    }
  }

 private:
  std::string source_;
  std::string name_;
  const std::map<std::string, IniEntry>* entries_ = nullptr;
  std::set<std::string> used_;
};

std::vector<ActionIndex> to_tokens(const std::vector<double>& values) {
  std::vector<ActionIndex> out;
  for (double v : values) {
    if (v < 0 || v != std::floor(v)) throw InvalidInputError("tokens must be nonnegative integers");
    out.push_back(static_cast<ActionIndex>(v));
  }
  return out;
}

const std::set<std::string> kSections = {"", "environment", "model", "trainer", "output", "dynamics", "converge"};

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& field, const std::string& message)
    : Error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " +
            (field.empty() ? std::string() : "field '" + field + "': ") + message),
      line_(line),
      field_(field) {}

IniFile parse_ini(const std::string& text, const std::string& source) {
  IniFile ini;
  ini.source = source;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source, line_no, "", "unterminated section header");
      section = lower(trim(line.substr(1, line.size() - 2)));
      if (!kSections.count(section)) throw ConfigError(source, line_no, section, "unknown section");
      ini.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line_no, "", "expected 'key = value'");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(source, line_no, "", "empty key");
    auto& entries = ini.sections[section];
    if (entries.count(key)) throw ConfigError(source, line_no, section + "." + key, "duplicate key");
    entries[key] = IniEntry{value, line_no};
  }
  return ini;
}

IniFile load_ini(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot read config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ini(buf.str(), path.string());
}

ExperimentConfig experiment_config_from_ini(const IniFile& ini, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  if (auto it = ini.sections.find(""); it != ini.sections.end() && !it->second.empty()) {
    const auto& [key, entry] = *it->second.begin();
    throw ConfigError(ini.source, entry.line, key, "key outside any section");
  }

  {
    Section s(ini, "environment");
    auto& env = cfg.environment;
    if (auto v = s.count("vocab")) env.vocab = *v;
    if (auto v = s.count("horizon")) env.horizon = *v;
    if (env.vocab < 2 || env.vocab > kMaxToyVocab) s.fail("vocab", "must lie in [2, 64]");
    if (env.horizon < 1 || env.horizon > kMaxToyHorizon) s.fail("horizon", "must lie in [1, 16]");
    const std::string reward = lower(s.text("reward").value_or("target"));
    if (reward == "target") {
      std::vector<ActionIndex> tokens(env.horizon, 0);
      if (auto values = s.numbers("target")) {
        try {
          tokens = to_tokens(*values);
        } catch (const Error& e) {
          s.fail("target", e.what());
        }
      }
      if (tokens.size() != env.horizon) s.fail("target", "needs exactly horizon tokens");
      for (ActionIndex a : tokens)
        if (a >= env.vocab) s.fail("target", "token outside the vocabulary");
      env.rule = TargetSequenceRule{tokens};
    } else if (reward == "table") {
      auto table = s.parsed("reward_table", [&](const std::string& p) { return read_table(resolve(p), env.vocab); });
      if (!table) s.fail("reward_table", "reward = table needs a reward_table file");
      if (table->size() < env.horizon) s.fail("reward_table", "fewer rows than the horizon");
      env.rule = ScorerTableRule{*table};
    } else {
      s.fail("reward", "expected 'target' or 'table'");
    }
    env.scorer_log_probs =
        s.parsed("scorer_table", [&](const std::string& p) { return read_table(resolve(p), env.vocab); });
    env.reference_log_probs =
        s.parsed("reference_table", [&](const std::string& p) { return read_table(resolve(p), env.vocab); });
    if (env.scorer_log_probs && env.scorer_log_probs->size() < env.horizon)
      s.fail("scorer_table", "fewer rows than the horizon");
    if (env.reference_log_probs && env.reference_log_probs->size() < env.horizon)
      s.fail("reference_table", "fewer rows than the horizon");
    s.finish();
  }

  {
    Section s(ini, "model");
    auto& m = cfg.model;
    if (auto f = s.parsed("family", [](const std::string& t) { return parse_family(t); })) m.family = *f;
    if (auto v = s.count("hidden")) {
      if (*v == 0) s.fail("hidden", "must be positive");
      m.hidden = *v;
    }
    if (auto init = s.text("init")) {
      const std::string v = lower(*init);
      if (v == "uniform") m.uniform_init = true;
      else if (v == "zero") m.uniform_init = false;
      else s.fail("init", "expected 'zero' or 'uniform'");
    }
    if (auto v = s.number("init_scale")) {
      if (*v < 0) s.fail("init_scale", "must be nonnegative");
      m.init_scale = *v;
    }
    if (auto v = s.numbers("init_logits")) {
      if (v->size() != cfg.environment.vocab) s.fail("init_logits", "needs one value per token");
      m.init_logits = *v;
    }
    if (auto v = s.integer("seed")) m.seed = static_cast<std::uint64_t>(*v);
    s.finish();
  }

  {
    Section s(ini, "trainer");
    auto& t = cfg.trainer;
    if (auto v = s.parsed("objective", [](const std::string& x) { return parse_objective(x); })) t.objective = *v;
    if (auto v = s.number("learning_rate")) {
      if (!(*v > 0)) s.fail("learning_rate", "must be > 0");
      t.learning_rate = *v;
    }
    if (auto v = s.integer("steps")) {
      if (*v < 1) s.fail("steps", "must be >= 1");
      t.steps = static_cast<int>(*v);
    }
    if (auto v = s.number("beta")) {
      if (!(*v > 0)) s.fail("beta", "must be > 0");
      t.beta = *v;
    }
    if (auto v = s.number("clip_epsilon")) {
      if (!(*v > 0 && *v < 1)) s.fail("clip_epsilon", "must lie in (0, 1)");
      t.clip_epsilon = *v;
    }
    if (auto v = s.parsed("estimator", [](const std::string& x) { return parse_estimator(x); })) {
      t.advantage_estimator = *v;
    }
    if (auto v = s.boolean("normalize")) t.normalize = *v;
    if (auto mode = s.text("normalize_mode")) {
      const std::string v = lower(*mode);
      if (v == "center") t.normalize_mode = NormalizeMode::kCenter;
      else if (v == "standardize") t.normalize_mode = NormalizeMode::kStandardize;
      else s.fail("normalize_mode", "expected 'center' or 'standardize'");
    }
    if (auto v = s.number("grad_clip_norm")) {
      if (!(*v > 0)) s.fail("grad_clip_norm", "must be > 0");
      t.grad_clip_norm = *v;
    }
    if (auto v = s.integer("seed")) t.seed = static_cast<std::uint64_t>(*v);
    if (auto v = s.integer("snapshot_interval")) {
      if (*v < 1) s.fail("snapshot_interval", "must be >= 1");
      t.snapshot_interval = static_cast<int>(std::min<long long>(*v, 1'000'000'000));
    }
    if (auto v = s.integer("episodes")) {
      if (*v < 1) s.fail("episodes", "must be >= 1");
      t.episodes_per_step = static_cast<int>(*v);
    }
    if (auto v = s.number("temperature")) {
      if (!(*v > 0)) s.fail("temperature", "must be > 0");
      t.temperature = *v;
    }
    if (auto v = s.number("top_p")) {
      if (!(*v > 0 && *v <= 1)) s.fail("top_p", "must lie in (0, 1]");
      t.top_p = *v;
    }
    if (t.objective != ObjectiveKind::kSft) {
      if (t.advantage_estimator != AdvantageEstimatorKind::kSparseSampled && !cfg.environment.scorer_log_probs) {
        s.fail("estimator", "dense estimators need environment.scorer_table");
      }
      if (t.advantage_estimator == AdvantageEstimatorKind::kDenseDpoRatio && !cfg.environment.reference_log_probs) {
        s.fail("estimator", "DENSE_DPO needs environment.reference_table");
      }
    } else if (!std::holds_alternative<TargetSequenceRule>(cfg.environment.rule)) {
      s.fail("objective", "SFT needs reward = target");
    }
    s.finish();
  }

  {
    Section s(ini, "output");
    if (auto v = s.boolean("plot")) cfg.plot = *v;
    s.finish();
  }

  {
    Section s(ini, "dynamics");
    if (auto t = s.text("compare")) {
      std::string list = *t;
      std::replace(list.begin(), list.end(), ',', ' ');
      std::istringstream in(list);
      std::vector<std::string> names;
      for (std::string n; in >> n;) names.push_back(n);
      if (names.size() != 2) s.fail("compare", "expected two objectives, e.g. 'PPO, LCO_KLD'");
      try {
        cfg.compare = std::make_pair(parse_objective(names[0]), parse_objective(names[1]));
      } catch (const Error& e) {
        s.fail("compare", e.what());
      }
    }
    if (auto v = s.boolean("parallel")) cfg.parallel = *v;
    s.finish();
  }

  {
    Section s(ini, "converge");
    auto& c = cfg.converge;
    if (auto v = s.parsed("family", [](const std::string& x) { return parse_family(x); })) {
      if (*v == ModelFamily::kMlp1) s.fail("family", "convergence runs need TABULAR or LINEAR");
      c.family = *v;
    }
    if (auto v = s.parsed("objective", [](const std::string& x) { return parse_objective(x); })) {
      if (*v != ObjectiveKind::kLcoMse && *v != ObjectiveKind::kLcoLch) s.fail("objective", "expected LCO_MSE or LCO_LCH");
      c.objective = *v;
    }
    if (auto v = s.count("vocab")) {
      if (*v < 2) s.fail("vocab", "must be >= 2");
      c.vocab = *v;
    }
    if (auto v = s.count("feature_dim")) {
      if (*v < 1) s.fail("feature_dim", "must be >= 1");
      c.feature_dim = *v;
    }
    if (auto v = s.number("learning_rate")) {
      if (*v < 0) s.fail("learning_rate", "must be >= 0");
      c.learning_rate = *v;
    }
    if (auto v = s.integer("steps")) {
      if (*v < 0) s.fail("steps", "must be >= 0");
      c.steps = static_cast<int>(*v);
    }
    if (auto v = s.number("beta")) {
      if (!(*v > 0)) s.fail("beta", "must be > 0");
      c.beta = *v;
    }
    if (auto v = s.number("advantage_scale")) c.advantage_scale = *v;
    if (auto v = s.boolean("normalize")) c.normalize = *v;
    if (auto v = s.integer("seed")) c.seed = static_cast<std::uint64_t>(*v);
    if (auto v = s.numbers("z_old")) {
      if (v->size() != c.vocab) s.fail("z_old", "needs vocab values");
      c.z_old = *v;
    }
    if (auto v = s.numbers("advantages")) {
      if (v->size() != c.vocab) s.fail("advantages", "needs vocab values");
      c.advantages = *v;
    }
    if (auto v = s.numbers("features")) {
      c.features = *v;
      c.feature_dim = v->size();
    }
    s.finish();
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const IniFile ini = load_ini(path);
  return experiment_config_from_ini(ini, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

PolicyModel build_model(const ExperimentConfig& config) {
  const auto& env = config.environment;
  const auto& m = config.model;
  const std::uint64_t seed = m.seed.value_or(config.trainer.seed);
  PolicyModel model = [&] {
    switch (m.family) {
      case ModelFamily::kTabular: return PolicyModel::tabular(env.vocab, env.horizon);
      case ModelFamily::kLinear: return PolicyModel::linear(env.vocab, env.horizon);
      case ModelFamily::kMlp1: return PolicyModel::mlp1(env.vocab, env.horizon, m.hidden, seed, m.init_scale);
    }
    throw InvalidInputError("unknown model family");
  }();
  if (m.uniform_init && m.family != ModelFamily::kMlp1) {
    Rng rng(seed);
    std::vector<double> theta(model.parameter_count());
    for (double& x : theta) x = uniform(rng, -m.init_scale, m.init_scale);
    model.set_parameters(std::move(theta));
  }
  if (m.init_logits) model.set_initial_logits(*m.init_logits);
  return model;
}

ToyEnvironment build_environment(const ExperimentConfig& config) {
  const auto& e = config.environment;
  ToyEnvironment env(e.vocab, e.horizon, e.rule);
  if (e.scorer_log_probs) env.set_scorer_log_probs(*e.scorer_log_probs);
  if (e.reference_log_probs) env.set_reference_log_probs(*e.reference_log_probs);
  return env;
}

}  // namespace lco
