// lco-lab: verification suites, training runs, convergence experiments and
// plots for logit-space policy objectives.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lco/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Logit-space policy optimization lab"};
  app.require_subcommand(1);

  std::optional<std::string> suite;
  auto* verify = app.add_subcommand("verify", "Run the property suites");
  verify->add_option("--suite", suite, "Run only suites with this name or name prefix (e.g. hessian)");

  std::string config, out;
  auto* train = app.add_subcommand("train", "Train one objective and write dynamics.csv");
  train->add_option("--config", config, "Experiment config file")->required();
  train->add_option("--out", out, "Output directory")->required();

  auto* dynamics = app.add_subcommand("dynamics", "Paired runs of two objectives");
  dynamics->add_option("--config", config, "Experiment config file")->required();
  dynamics->add_option("--out", out, "Output directory")->required();

  auto* converge = app.add_subcommand("converge", "Exact gradient descent against the linear-rate bound");
  converge->add_option("--config", config, "Experiment config file")->required();
  converge->add_option("--out", out, "Output directory")->required();

  lco::PlotRequest plot_req;
  std::vector<std::string> csvs;
  std::string svg_out;
  auto* plot = app.add_subcommand("plot", "Render CSV columns as an SVG line chart");
  plot->add_option("--csv", csvs, "CSV file (repeatable)")->required();
  plot->add_option("--out", svg_out, "Output SVG file")->required();
  plot->add_option("--x", plot_req.x, "X column (default: first column)");
  plot->add_option("--y", plot_req.y, "Y column (repeatable; default: every numeric column)");
  plot->add_option("--title", plot_req.title, "Chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lco::kExitConfig;
  }

  if (*verify) return lco::cmd_verify(suite, std::cout, std::cerr);
  if (*train) return lco::cmd_train(config, out, std::cout, std::cerr);
  if (*dynamics) return lco::cmd_dynamics(config, out, std::cout, std::cerr);
  if (*converge) return lco::cmd_converge(config, out, std::cout, std::cerr);
  if (*plot) {
    for (const auto& c : csvs) plot_req.csvs.emplace_back(c);
    plot_req.out = svg_out;
    return lco::cmd_plot(plot_req, std::cout, std::cerr);
  }
  return lco::kExitConfig;
}
