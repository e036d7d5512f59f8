#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lco/analysis.hpp"
#include "lco/errors.hpp"
#include "lco/io.hpp"
#include "lco/plot.hpp"

using namespace lco;

namespace {

std::vector<DynamicsRecord> sample_records() {
  std::vector<DynamicsRecord> r(3);
  for (int i = 0; i < 3; ++i) {
    r[i].step = i + 1;
    r[i].loss = 1.0 / (i + 3);
    r[i].grad_norm_param = 0.1 * (i + 1);
    r[i].entropy = std::log(3.0);
    r[i].sampled_prob = 1.0 / 3;
    r[i].adv_bucket = i == 1 ? AdvantageBucket::kNegative : AdvantageBucket::kPositive;
    if (i != 2) r[i].bound = 0.7;
  }
  return r;
}

std::vector<DynamicsRecord> from_norms(const std::vector<double>& g, double bound) {
  std::vector<DynamicsRecord> r(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    r[i].step = static_cast<int>(i) + 1;
    r[i].grad_norm_param = g[i];
    r[i].bound = bound;
  }
  return r;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("dynamics CSV has the exact header and round-trips") {
    std::ostringstream s;
    const auto rec = sample_records();
    write_dynamics_csv(s, rec);
    const std::string text = s.str();
    CHECK(text.substr(0, text.find('\n')) == kDynamicsHeader);
    CHECK(text.find(",negative,") != std::string::npos);
    CHECK(text.substr(text.size() - 2) == ",\n");  // missing bound is an empty cell
    const auto back = dynamics_from_csv(parse_csv(text, "mem"));
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back[i].loss == rec[i].loss);
      CHECK(back[i].sampled_prob == rec[i].sampled_prob);
      CHECK(back[i].adv_bucket == rec[i].adv_bucket);
      CHECK(back[i].bound == rec[i].bound);
    }
  }

  TEST_CASE("reals use 17 significant digits") {
    CHECK(format_real(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_real(1.0 / 3)) == 1.0 / 3);
  }

  TEST_CASE("schema mismatches are reported") {
    CHECK_THROWS_AS(dynamics_from_csv(parse_csv("step,loss\n1,2\n", "mem")), SchemaError);
    const CsvTable t = parse_csv("a,b\n1,2\n", "mem");
    CHECK(t.column("b") == 1u);
    CHECK_FALSE(t.column("c"));
    CHECK_THROWS_AS(parse_csv("a,b\n1\n", "mem"), InvalidInputError);
  }

  TEST_CASE("model dumps read back") {
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "lco_unit" / "model";
    std::filesystem::create_directories(dir);
    PolicyModel m = PolicyModel::mlp1(3, 2, 4, 8);
    write_model(dir / "model.txt", m);
    std::ifstream in(dir / "model.txt");
    std::string first;
    std::getline(in, first);
    CHECK(first.rfind("# family=MLP1", 0) == 0);
    CHECK(read_model_parameters(dir / "model.txt") == m.parameters());
  }

  TEST_CASE("converge CSV") {
    ConvergeResult r;
    r.rho = 0.5;
    r.rows = {ConvergeRow{0, 1.0, 2.0, 0, 0, true, true}, ConvergeRow{1, 0.25, 0.5, 0, 0, true, true}};
    std::ostringstream s;
    write_converge_csv(s, r);
    CHECK(s.str() == "k,loss,bound,rho\n0,1,2,0.5\n1,0.25,0.5,0.5\n");
  }
}

TEST_SUITE("plot") {
  TEST_CASE("two points give one segment across the padded plot area") {
    const std::string svg = render_svg({PlotSeriesSource{"t", parse_csv("x,y\n0,0\n1,1\n", "t")}}, {});
    CHECK(svg.find("width=\"800\" height=\"500\"") != std::string::npos);
    CHECK(svg.find("points=\"95.00,431.36 595.00,58.64\"") != std::string::npos);
  }

  TEST_CASE("header-only CSV gives axes and no series") {
    const std::string svg = render_svg({PlotSeriesSource{"e", parse_csv("x,y\n", "e")}}, {});
    CHECK(svg.find("<polyline") == std::string::npos);
    CHECK(svg.find("<line") != std::string::npos);
  }

  TEST_CASE("rendering is byte-stable and names missing columns") {
    const CsvTable t = parse_csv("step,loss,bound\n1,3,4\n2,2,4\n3,1.5,4\n", "d");
    PlotOptions o;
    o.y = {"loss", "bound"};
    o.title = "loss";
    CHECK(render_svg({{"d", t}}, o) == render_svg({{"d", t}}, o));
    const std::string two = render_svg({{"a", t}, {"b", t}}, o);
    CHECK(two.find(">a:loss<") != std::string::npos);
    CHECK(two.find(">b:bound<") != std::string::npos);
    o.y = {"nope"};
    try {
      render_svg({{"d", t}}, o);
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(e.column() == "nope");
    }
  }
}

TEST_SUITE("analysis") {
  TEST_CASE("trailing mean") {
    const std::vector<double> x{1, 2, 3, 4};
    CHECK(trailing_mean(x, 2) == std::vector<double>{1, 1.5, 2.5, 3.5});
    CHECK(trailing_mean(x, 10) == std::vector<double>{1, 1.5, 2, 2.5});
    CHECK(smoothed_initial(x, 2) == 1.5);
  }

  TEST_CASE("smoothed increases only count the tail") {
    const std::vector<double> x{5, 6, 4, 3, 2, 1};
    CHECK(smoothed_increases(x, 1.0, 1) == 1);
    CHECK(smoothed_increases(x, 0.5, 1) == 0);
  }

  TEST_CASE("envelope violations respect the slack") {
    const auto r = from_norms({0.5, 1.0, 1.0 + 1e-12, 1.1}, 1.0);
    CHECK(envelope_violations(r) == 1);
    CHECK(envelope_violations(r, 0.2) == 0);
  }

  TEST_CASE("spike then clip") {
    std::vector<double> g(60, 0.1);
    g[55] = 0.5;
    g[57] = 0.0;
    const SpikeThenClip s = find_spike_then_clip(from_norms(g, 1.0));
    CHECK(s.smoothed_initial == doctest::Approx(0.1));
    CHECK(s.spike_step == 56);
    CHECK(s.clip_step == 58);
    g[57] = 0.1;
    CHECK_FALSE(find_spike_then_clip(from_norms(g, 1.0)).clip_step);
  }

  TEST_CASE("summary") {
    std::vector<double> g{0.3, 0.2, 0.4};
    auto r = from_norms(g, 0.35);
    r.back().entropy = 0.7;
    r.back().sampled_prob = 0.9;
    const DynamicsSummary s = summarize("PPO", r);
    CHECK(s.objective == "PPO");
    CHECK(s.max_grad_norm == 0.4);
    CHECK(s.final_entropy == 0.7);
    CHECK(s.final_sampled_prob == 0.9);
    CHECK(s.envelope_violations == 1);
  }
}
