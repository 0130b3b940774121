#include "mswave/bench.hpp"
#include "mswave/errors.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

using namespace mswave;

namespace {

constexpr int kConfigExit = 2;
constexpr int kSolverExit = 3;

struct Sink {
  std::unique_ptr<std::ofstream> file;
  std::ostream* out = &std::cout;

  explicit Sink(const std::string& path) {
    if (path.empty()) return;
    file = std::make_unique<std::ofstream>(path);
    if (!*file) throw ConfigError("cannot open '" + path + "' for writing");
    out = file.get();
  }
};

std::string num(double v) {
  if (v != v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

int cmd_homogenize(const ExperimentConfig& cfg) {
  const CoefficientField field = build_field(cfg, cfg.eps);
  if (!field.has_unit_cell()) throw ConfigError("coeff.kind has no unit cell to homogenize");
  std::vector<Point> points;
  const int n = cfg.homog_n_sample_points;
  if (n <= 0) {
    points.push_back(Point::Constant(cfg.dim, 0.5));
  } else if (cfg.dim == 1) {
    for (int i = 0; i < n; ++i) points.push_back(Point::Constant(1, (i + 0.5) / n));
  } else {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) points.push_back(make_point((i + 0.5) / n, (j + 0.5) / n));
  }
  Sink sink(cfg.output_csv);
  std::ostream& out = *sink.out;
  out << (cfg.dim == 1 ? "x" : "x,y") << ",a0_11,a0_12,a0_22,b0\n";
  for (const Point& x : points) {
    const EffectiveTensors et = effective_tensors(field, x, cfg.homog_N_cell);
    for (int j = 0; j < cfg.dim; ++j) out << num(x(j)) << ',';
    if (cfg.dim == 1) {
      out << num(et.a0(0, 0)) << ",,," << num(et.b0) << '\n';
    } else {
      out << num(et.a0(0, 0)) << ',' << num(et.a0(0, 1)) << ',' << num(et.a0(1, 1)) << ",\n";
    }
  }
  return 0;
}

int cmd_solve(const ExperimentConfig& cfg) {
  const double eps = cfg.sweep_eps.front();
  const int N = static_cast<int>(std::lround(1.0 / cfg.sweep_H.front()));
  const TimeGrid grid = experiment_grid(cfg);
  const Mesh fine = Mesh::uniform(cfg.dim, fine_cells(cfg, eps), Box::unit(cfg.dim), cfg.periodic);
  MethodRun run = run_method(cfg, eps, N, fine, grid);
  if (!cfg.output_traj.empty()) write_trajectory(cfg.output_traj, run.traj, cfg.dim);

  RunRecord rec = run.record;
  if (cfg.raw.has("reference") && cfg.reference != ReferenceKind::none) {
    const Trajectory ref = reference_trajectory(cfg, eps, fine, grid);
    const ErrorReport err = error_norms(ref, run.traj, run.to_fine, assemble_mass(fine, cfg.bc()).matrix,
                                        assemble_laplacian(fine, cfg.bc()).matrix);
    rec.linf_l2 = err.linf_l2;
    rec.linf_h1 = err.linf_h1;
  } else {
    rec.linf_l2 = kNotApplicable;
    rec.linf_h1 = kNotApplicable;
  }
  Sink sink(cfg.output_csv);
  *sink.out << CsvAppender::header() << '\n' << CsvAppender::format(rec, cfg.record_timing) << '\n';
  return 0;
}

int cmd_convergence(const ExperimentConfig& cfg) {
  Sink sink(cfg.output_csv);
  const std::vector<RunRecord> records = run_experiment(cfg, sink.out, &std::cerr);
  const bool in_H = cfg.sweep_H.size() > 1;
  if (records.size() >= 2) {
    std::vector<double> x, e2, e1;
    for (const RunRecord& r : records) {
      x.push_back(in_H ? r.H : r.eps);
      e2.push_back(r.linf_l2);
      e1.push_back(r.linf_h1);
    }
    std::cerr << "least-squares rate in " << (in_H ? "H" : "eps") << ": L2 " << num(estimate_rate(x, e2).least_squares)
              << ", H1 " << num(estimate_rate(x, e1).least_squares) << '\n';
  }
  return 0;
}

int cmd_longtime(const ExperimentConfig& cfg) {
  const LongtimeTable table = longtime_compare(cfg, &std::cerr);
  Sink sink(cfg.output_csv);
  std::ostream& out = *sink.out;
  const bool hmm = !table.err_fehmm.empty();
  out << "t,err_vs_u0,err_vs_boussinesq" << (hmm ? ",err_fehmm,err_fehmm_l" : "") << '\n';
  for (std::size_t i = 0; i < table.t.size(); ++i) {
    out << num(table.t[i]) << ',' << num(table.err_vs_u0[i]) << ',' << num(table.err_vs_boussinesq[i]);
    if (hmm) out << ',' << num(table.err_fehmm[i]) << ',' << num(table.err_fehmm_l[i]);
    out << '\n';
  }
  std::cerr << "a0 = " << num(table.a0) << ", b0 = " << num(table.b0) << ", T_long = " << num(table.T_long) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale wave equation toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  struct Entry {
    const char* name;
    const char* help;
    int (*run)(const ExperimentConfig&);
  };
  const Entry entries[] = {
      {"homogenize", "effective tensor a0 (and b0 in 1D) at sample points", cmd_homogenize},
      {"solve", "one method run at the first sweep point", cmd_solve},
      {"convergence", "error and rate study over the sweep lists", cmd_convergence},
      {"longtime", "long-time comparison of effective models against a fine solve", cmd_longtime},
      {"verify", "invariant suite for the configured field and method",
       [](const ExperimentConfig& c) { return verify_invariants(c, std::cout) ? 0 : kSolverExit; }},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> subs;
  for (const Entry& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("--config", config_path, "experiment config file")->required();
    subs.emplace_back(sub, &e);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigExit;
  }

  try {
    const ExperimentConfig cfg = parse_experiment(Config::load(config_path));
    for (auto& [sub, entry] : subs) {
      if (sub->parsed()) return entry->run(cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverExit;
  }
  return 0;
}
