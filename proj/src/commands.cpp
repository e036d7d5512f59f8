#include "lco/commands.hpp"

#include <fstream>
#include <future>
#include <sstream>

#include "lco/analysis.hpp"
#include "lco/config.hpp"
#include "lco/io.hpp"
#include "lco/plot.hpp"
#include "lco/trainer.hpp"

namespace lco {

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InvalidInputError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot write " + path.string());
  out << text;
}

std::string csv_text(std::span<const DynamicsRecord> records) {
  std::ostringstream s;
  write_dynamics_csv(s, records);
  return s.str();
}

std::vector<DynamicsRecord> train_run(const ExperimentConfig& cfg, ObjectiveKind objective) {
  TrainerConfig tc = cfg.trainer;
  tc.objective = objective;
  Trainer trainer(build_model(cfg), build_environment(cfg), tc);
  return trainer.run();
}

void write_summary_block(std::ostream& out, const char* tag, const DynamicsSummary& s) {
  out << '[' << tag << "]\n"
      << "objective = " << s.objective << '\n'
      << "max_grad_norm = " << format_real(s.max_grad_norm) << '\n'
      << "final_entropy = " << format_real(s.final_entropy) << '\n'
      << "final_sampled_prob = " << format_real(s.final_sampled_prob) << '\n'
      << "envelope_violations = " << s.envelope_violations << '\n'
      << "smoothed_increases = " << s.smoothed_increases << '\n';
}

// Runs body, mapping library errors onto the exit-code contract.
template <class Body>
int guarded(std::ostream& err, Body body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const StepSizeTooLargeError& e) {
    err << "step size too large: " << e.what() << '\n';
    return kExitStepSize;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace

int cmd_verify(const std::optional<std::string>& suite, std::ostream& log, std::ostream& err,
               const ObjectiveTable& table) {
  const std::vector<std::string> names = select_suites(suite);
  if (names.empty()) {
    err << "unknown suite '" << suite.value_or("") << "'; available:";
    for (const auto& n : suite_names()) err << ' ' << n;
    err << '\n';
    return kExitConfig;
  }
  const std::vector<SuiteResult> results = run_suites(names, table);
  print_report(log, results);
  for (const auto& r : results)
    if (!r.ok()) return kExitFailure;
  return kExitOk;
}

int cmd_train(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& log,
              std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_experiment_config(config);
    ensure_dir(out_dir);
    Trainer trainer(build_model(cfg), build_environment(cfg), cfg.trainer);
    const std::vector<DynamicsRecord> records = trainer.run();
    write_dynamics_csv(out_dir / "dynamics.csv", records);
    write_model(out_dir / "model.txt", trainer.model());
    if (cfg.plot) {
      PlotOptions opts;
      opts.y = {"grad_norm_param", "bound"};
      opts.title = std::string(to_string(cfg.trainer.objective)) + " gradient norm";
      write_text(out_dir / "dynamics.svg",
                 render_svg({PlotSeriesSource{"dynamics", parse_csv(csv_text(records), "dynamics.csv")}}, opts));
    }
    log << "trained " << to_string(cfg.trainer.objective) << " for " << records.size() << " steps; final loss "
        << format_real(records.back().loss) << "\n";
    return kExitOk;
  });
}

int cmd_dynamics(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& log,
                 std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_experiment_config(config);
    if (!cfg.compare) throw ConfigError(config.string(), 0, "dynamics.compare", "required for the dynamics command");
    ensure_dir(out_dir);
    const auto [a, b] = *cfg.compare;
    std::vector<DynamicsRecord> ra, rb;
    if (cfg.parallel) {
      auto fa = std::async(std::launch::async, [&] { return train_run(cfg, a); });
      auto fb = std::async(std::launch::async, [&] { return train_run(cfg, b); });
      ra = fa.get();
      rb = fb.get();
    } else {
      ra = train_run(cfg, a);
      rb = train_run(cfg, b);
    }
    const std::string ta = csv_text(ra), tb = csv_text(rb);
    write_text(out_dir / "dynamics_a.csv", ta);
    write_text(out_dir / "dynamics_b.csv", tb);
    const DynamicsSummary sa = summarize(std::string(to_string(a)), ra);
    const DynamicsSummary sb = summarize(std::string(to_string(b)), rb);
    std::ostringstream summary;
    write_summary_block(summary, "a", sa);
    write_summary_block(summary, "b", sb);
    write_text(out_dir / "summary.txt", summary.str());
    if (cfg.plot) {
      PlotOptions opts;
      opts.y = {"grad_norm_param"};
      opts.title = "gradient norm";
      write_text(out_dir / "dynamics.svg",
                 render_svg({PlotSeriesSource{sa.objective + " (a)", parse_csv(ta, "dynamics_a.csv")},
                             PlotSeriesSource{sb.objective + " (b)", parse_csv(tb, "dynamics_b.csv")}},
                            opts));
    }
    log << summary.str();
    return kExitOk;
  });
}

int cmd_converge(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& log,
                 std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_experiment_config(config);
    const ConvergeResult res = converge_experiment(cfg.converge);
    ensure_dir(out_dir);
    write_converge_csv(out_dir / "converge.csv", res);
    if (cfg.plot) {
      std::ostringstream csv;
      write_converge_csv(csv, res);
      PlotOptions opts;
      opts.y = {"loss", "bound"};
      opts.title = std::string(to_string(cfg.converge.objective)) + " loss vs bound";
      write_text(out_dir / "converge.svg", render_svg({PlotSeriesSource{"converge", parse_csv(csv.str(), "converge.csv")}}, opts));
    }
    int asserted = 0;
    for (const auto& row : res.rows) asserted += row.asserted ? 1 : 0;
    log << "rho = " << format_real(res.rho) << "; asserted steps " << asserted << " of " << res.rows.size()
        << "; bound violations " << res.violations << "; loss increases " << res.monotone_breaks << '\n';
    return res.violations == 0 ? kExitOk : kExitFailure;
  });
}

int cmd_plot(const PlotRequest& request, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    if (request.csvs.empty()) throw ConfigError("plot", 0, "--csv", "at least one CSV is required");
    std::vector<PlotSeriesSource> sources;
    for (const auto& path : request.csvs) {
      CsvTable table;
      try {
        table = read_csv(path);
      } catch (const InvalidInputError& e) {
        throw ConfigError(path.string(), 0, "", e.what());
      }
      sources.push_back(PlotSeriesSource{path.stem().string(), std::move(table)});
    }
    PlotOptions opts;
    opts.x = request.x;
    opts.y = request.y;
    opts.title = request.title;
    const std::string svg = render_svg(sources, opts);
    if (request.out.has_parent_path()) ensure_dir(request.out.parent_path());
    write_text(request.out, svg);
    log << "wrote " << request.out.string() << '\n';
    return kExitOk;
  });
}

}  // namespace lco
