#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lco/config.hpp"
#include "lco/env.hpp"
#include "lco/errors.hpp"

using namespace lco;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lco_unit" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Line and field of the ConfigError thrown while loading text, or {-1, ""}.
std::pair<int, std::string> config_failure(const std::string& text) {
  try {
    experiment_config_from_ini(parse_ini(text, "test.ini"), ".");
  } catch (const ConfigError& e) {
    return {e.line(), e.field()};
  }
  return {-1, ""};
}

}  // namespace

TEST_SUITE("env") {
  TEST_CASE("sequence rewards and sampled advantages") {
    const ToyEnvironment env(3, 2, TargetSequenceRule{{2, 0}});
    CHECK(env.sequence_reward(std::vector<ActionIndex>{2, 0}) == 1.0);
    CHECK(env.sequence_reward(std::vector<ActionIndex>{2, 1}) == -1.0);
    CHECK(env.sampled_advantages(std::vector<ActionIndex>{0, 0}) == std::vector<double>{-1.0, -1.0});
    const ToyEnvironment table(2, 2, ScorerTableRule{{{0.5, -1.0}, {2.0, 3.0}}});
    CHECK(table.sampled_advantages(std::vector<ActionIndex>{1, 0}) == std::vector<double>{-1.0, 2.0});
    CHECK(table.sequence_reward(std::vector<ActionIndex>{0, 1}) == 3.5);
  }

  TEST_CASE("environment limits") {
    CHECK_THROWS_AS(ToyEnvironment(65, 1, TargetSequenceRule{{0}}), InvalidInputError);
    CHECK_THROWS_AS(ToyEnvironment(3, 17, TargetSequenceRule{std::vector<ActionIndex>(17, 0)}), InvalidInputError);
    CHECK_THROWS_AS(ToyEnvironment(3, 2, TargetSequenceRule{{0}}), InvalidInputError);
    CHECK_THROWS_AS(ToyEnvironment(3, 1, TargetSequenceRule{{3}}), InvalidInputError);
    ToyEnvironment env(3, 2, TargetSequenceRule{{0, 1}});
    CHECK_THROWS_AS(env.set_scorer_log_probs(Table{{0.0, 0.0, 0.0}}), InvalidInputError);
  }

  TEST_CASE("tables skip comments and name the offending line") {
    const fs::path dir = scratch("tables");
    write(dir / "ok.table", "# header\n-1 -2 -3\n\n-0.5 -inf -1  # trailing\n");
    const Table t = read_table(dir / "ok.table", 3);
    REQUIRE(t.size() == 2);
    CHECK(t[1][0] == -0.5);
    CHECK(std::isinf(t[1][1]));
    write(dir / "bad.table", "-1 -2 -3\n-1 x -3\n");
    try {
      read_table(dir / "bad.table", 3);
      FAIL("expected an error");
    } catch (const InvalidInputError& e) {
      CHECK(std::string(e.what()).find("bad.table:2") != std::string::npos);
    }
    write(dir / "short.table", "-1 -2\n");
    CHECK_THROWS_AS(read_table(dir / "short.table", 3), InvalidInputError);
  }
}

TEST_SUITE("config") {
  TEST_CASE("ini parsing") {
    const IniFile ini = parse_ini("# comment\n[trainer]\nsteps = 10 ; note\nobjective=PPO\n", "x.ini");
    CHECK(ini.sections.at("trainer").at("steps").value == "10");
    CHECK(ini.sections.at("trainer").at("steps").line == 3);
    CHECK(ini.sections.at("trainer").at("objective").value == "PPO");
    CHECK_THROWS_AS(parse_ini("[trainer]\nsteps = 1\nsteps = 2\n", "x.ini"), ConfigError);
    CHECK_THROWS_AS(parse_ini("[trainer\n", "x.ini"), ConfigError);
    CHECK_THROWS_AS(parse_ini("[trainer]\njust text\n", "x.ini"), ConfigError);
  }

  TEST_CASE("a full experiment file") {
    const fs::path dir = scratch("full");
    write(dir / "scorer.table", "-1 -2 -0.5\n-0.1 -3 -2\n");
    write(dir / "exp.ini",
          "[environment]\nvocab = 3\nhorizon = 2\ntarget = 2 1\nscorer_table = scorer.table\n"
          "[model]\nfamily = MLP1\nhidden = 4\n"
          "[trainer]\nobjective = LCO_LCH\nestimator = DENSE_LOGPROB\nlearning_rate = 0.25\nsteps = 12\n"
          "beta = 0.5\nseed = 9\ngrad_clip_norm = 2\nsnapshot_interval = 4\nepisodes = 3\n"
          "[output]\nplot = yes\n"
          "[dynamics]\ncompare = PPO, LCO_KLD\nparallel = false\n");
    const ExperimentConfig c = load_experiment_config(dir / "exp.ini");
    CHECK(c.environment.vocab == 3);
    CHECK(std::get<TargetSequenceRule>(c.environment.rule).target == std::vector<ActionIndex>{2, 1});
    REQUIRE(c.environment.scorer_log_probs);
    CHECK((*c.environment.scorer_log_probs)[1][0] == -0.1);
    CHECK(c.model.family == ModelFamily::kMlp1);
    CHECK(c.trainer.objective == ObjectiveKind::kLcoLch);
    CHECK(c.trainer.advantage_estimator == AdvantageEstimatorKind::kDenseLogProb);
    CHECK(c.trainer.learning_rate == 0.25);
    CHECK(c.trainer.steps == 12);
    CHECK(c.trainer.beta == 0.5);
    CHECK(c.trainer.grad_clip_norm == 2.0);
    CHECK(c.trainer.snapshot_interval == 4);
    CHECK(c.trainer.episodes_per_step == 3);
    CHECK(c.plot);
    CHECK_FALSE(c.parallel);
    REQUIRE(c.compare);
    CHECK(c.compare->first == ObjectiveKind::kPpo);
    CHECK(c.compare->second == ObjectiveKind::kLcoKld);
    const PolicyModel m = build_model(c);
    CHECK(m.hidden_width() == 4);
    CHECK(build_environment(c).scorer_log_probs().has_value());
  }

  TEST_CASE("errors carry the line and field") {
    CHECK(config_failure("[trainer]\nlearning_rate = -1\n") == std::pair<int, std::string>{2, "trainer.learning_rate"});
    CHECK(config_failure("[trainer]\n\nsteps = many\n") == std::pair<int, std::string>{3, "trainer.steps"});
    CHECK(config_failure("[trainer]\nstepz = 5\n") == std::pair<int, std::string>{2, "trainer.stepz"});
    CHECK(config_failure("[model]\nfamily = CNN\n") == std::pair<int, std::string>{2, "model.family"});
    CHECK(config_failure("[environment]\nvocab = 3\nhorizon = 2\ntarget = 1\n").second == "environment.target");
    CHECK(config_failure("[trainer]\nestimator = DENSE_LOGPROB\n").second == "trainer.estimator");
    CHECK(config_failure("[weird]\nx = 1\n").first == 1);
    CHECK(config_failure("[converge]\nfamily = MLP1\n").second == "converge.family");
    CHECK(config_failure("[trainer]\nsteps = 5\n").first == -1);
    try {
      experiment_config_from_ini(parse_ini("[trainer]\nbeta = 0\n", "exp.ini"), ".");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("exp.ini:2") != std::string::npos);
    }
  }

  TEST_CASE("initial logits and seeds") {
    const ExperimentConfig c = experiment_config_from_ini(
        parse_ini("[environment]\nvocab = 3\ntarget = 0\n[model]\nfamily = LINEAR\ninit_logits = 1 2 3\n", "x"), ".");
    const LogitVector z = build_model(c).forward(State{});
    CHECK(z[2] == doctest::Approx(3.0));
    const ExperimentConfig u = experiment_config_from_ini(
        parse_ini("[environment]\nvocab = 3\ntarget = 0\n[model]\ninit = uniform\nseed = 4\n", "x"), ".");
    CHECK(build_model(u).parameters() == build_model(u).parameters());
    CHECK(build_model(u).parameters() != std::vector<double>(build_model(u).parameter_count(), 0.0));
  }

  TEST_CASE("converge section") {
    const ExperimentConfig c = experiment_config_from_ini(
        parse_ini("[converge]\nfamily = LINEAR\nobjective = LCO_LCH\nvocab = 5\nlearning_rate = 0.2\n"
                  "advantages = 1 2 3 4 5\n",
                  "x"),
        ".");
    CHECK(c.converge.family == ModelFamily::kLinear);
    CHECK(c.converge.objective == ObjectiveKind::kLcoLch);
    CHECK(c.converge.vocab == 5);
    REQUIRE(c.converge.advantages);
    CHECK(c.converge.advantages->size() == 5);
  }
}
