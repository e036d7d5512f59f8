#include <cmath>
#include <set>

#include "doctest.h"
#include "lco/errors.hpp"
#include "lco/policy.hpp"
#include "support/oracles.hpp"

using namespace lco;

namespace {

std::vector<PolicyModel> sample_models() {
  PolicyModel tab = PolicyModel::tabular(3, 2);
  PolicyModel lin = PolicyModel::linear(3, 2);
  PolicyModel mlp = PolicyModel::mlp1(3, 2, 5, 17, 0.5);
  oracle::Draw d(61);
  tab.set_parameters(d.normals(tab.parameter_count()));
  lin.set_parameters(d.normals(lin.parameter_count()));
  return {tab, lin, mlp};
}

std::vector<State> all_states(const StateSpace& space) {
  std::vector<State> out{State{}};
  for (ActionIndex a = 0; a < space.vocab(); ++a) out.push_back(State{{a}});
  return out;
}

}  // namespace

TEST_SUITE("policy") {
  TEST_CASE("state space indexing is a bijection in length-then-lex order") {
    const StateSpace space(3, 3);
    CHECK(space.size() == 1 + 3 + 9);
    CHECK(space.index(State{}) == 0);
    CHECK(space.index(State{{0}}) == 1);
    CHECK(space.index(State{{2}}) == 3);
    CHECK(space.index(State{{0, 0}}) == 4);
    CHECK(space.index(State{{2, 2}}) == 12);
    std::set<std::size_t> seen;
    for (ActionIndex a = 0; a < 3; ++a)
      for (ActionIndex b = 0; b < 3; ++b) seen.insert(space.index(State{{a, b}}));
    CHECK(seen.size() == 9);
    CHECK_THROWS_AS(space.index(State{{0, 0, 0}}), InvalidStateError);
    CHECK_THROWS_AS(space.index(State{{3}}), InvalidStateError);
  }

  TEST_CASE("canonical features") {
    const StateSpace space(3, 2);
    CHECK(space.canonical_feature_dim() == 7);
    CHECK(space.canonical_features(State{}) == std::vector<double>{1, 1, 0, 0, 0, 0, 1});
    CHECK(space.canonical_features(State{{1}}) == std::vector<double>{1, 0, 1, 0, 1, 0, 0});
  }

  TEST_CASE("family names round-trip") {
    for (ModelFamily f : {ModelFamily::kTabular, ModelFamily::kLinear, ModelFamily::kMlp1})
      CHECK(parse_family(to_string(f)) == f);
    CHECK_THROWS_AS(parse_family("CNN"), InvalidInputError);
  }

  TEST_CASE("Jacobians match central differences of forward") {
    for (const PolicyModel& m : sample_models()) {
      const std::vector<double>& theta = m.parameters();
      for (const State& s : all_states(m.states())) {
        const Matrix j = m.jacobian(s).jacobian;
        REQUIRE(j.rows() == m.vocab());
        REQUIRE(j.cols() == m.parameter_count());
        for (std::size_t p = 0; p < theta.size(); ++p) {
          std::vector<double> up = theta, down = theta;
          up[p] += 1e-6;
          down[p] -= 1e-6;
          const LogitVector zu = m.forward_with(up, s), zd = m.forward_with(down, s);
          for (std::size_t a = 0; a < m.vocab(); ++a) CHECK(j(a, p) == doctest::Approx((zu[a] - zd[a]) / 2e-6).scale(1e-6));
        }
      }
    }
  }

  TEST_CASE("vector-Jacobian products and sigma_max agree with the dense Jacobian") {
    oracle::Draw d(62);
    for (const PolicyModel& m : sample_models()) {
      for (const State& s : all_states(m.states())) {
        const Matrix j = m.jacobian(s).jacobian;
        const std::vector<double> g = d.normals(m.vocab());
        std::vector<double> out(m.parameter_count(), 1.0);
        m.accumulate_vjp(m.parameters(), s, g, 0.5, out);
        const std::vector<double> ref = transpose_times(j, g);
        for (std::size_t p = 0; p < out.size(); ++p) CHECK(out[p] == doctest::Approx(1.0 + 0.5 * ref[p]));
        CHECK(m.jacobian_sigma_max(m.parameters(), s) == doctest::Approx(largest_singular_value(j)).epsilon(1e-7));
      }
    }
    const PolicyModel tab = PolicyModel::tabular(4, 1);
    CHECK(tab.jacobian_sigma_max(tab.parameters(), State{}) == 1.0);
  }

  TEST_CASE("linear families have zero linearization residual; MLP1 residual shrinks linearly") {
    oracle::Draw d(63);
    for (const PolicyModel& m : sample_models()) {
      const std::vector<double> dir = d.normals(m.parameter_count());
      auto moved = [&](double t) {
        std::vector<double> x = m.parameters();
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += t * dir[i];
        return x;
      };
      const double big = linearization_residual(m, m.parameters(), moved(1e-1), State{{1}});
      const double small = linearization_residual(m, m.parameters(), moved(1e-2), State{{1}});
      if (m.family() == ModelFamily::kMlp1) {
        CHECK(big > 0.0);
        CHECK(small / big == doctest::Approx(0.1).epsilon(0.2));
      } else {
        CHECK(big <= 1e-12);
      }
    }
  }

  TEST_CASE("initial logits apply to every state") {
    const std::vector<double> init{2.0, -1.0, 0.5};
    for (PolicyModel m : sample_models()) {
      if (m.family() == ModelFamily::kMlp1) m = PolicyModel::mlp1(3, 2, 5, 17, 0.0);
      m.set_initial_logits(init);
      for (const State& s : all_states(m.states())) {
        const LogitVector z = m.forward(s);
        for (std::size_t a = 0; a < 3; ++a) CHECK(z[a] == doctest::Approx(init[a]));
      }
    }
  }

  TEST_CASE("MLP1 initialization is seeded") {
    CHECK(PolicyModel::mlp1(4, 2, 8, 3).parameters() == PolicyModel::mlp1(4, 2, 8, 3).parameters());
    CHECK(PolicyModel::mlp1(4, 2, 8, 3).parameters() != PolicyModel::mlp1(4, 2, 8, 4).parameters());
    CHECK_THROWS_AS(PolicyModel::tabular(3, 2).set_parameters({1.0}), InvalidInputError);
  }
}
