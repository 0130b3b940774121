#include "mswave/bench.hpp"

#include "mswave/errors.hpp"
#include "mswave/fdhmm.hpp"
#include "mswave/fehmm.hpp"
#include "mswave/lod.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>

namespace mswave {

std::string to_string(Method m) {
  switch (m) {
    case Method::fine: return "fine";
    case Method::homogenized: return "homogenized";
    case Method::fehmm: return "fehmm";
    case Method::fehmm_l: return "fehmm_l";
    case Method::fdhmm: return "fdhmm";
    case Method::lod: return "lod";
    case Method::boussinesq: return "boussinesq";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (auto m : {Method::fine, Method::homogenized, Method::fehmm, Method::fehmm_l, Method::fdhmm, Method::lod,
                 Method::boussinesq}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown method '" + name + "'");
}

std::string to_string(ReferenceKind r) {
  switch (r) {
    case ReferenceKind::fine: return "fine";
    case ReferenceKind::homogenized: return "homogenized";
    case ReferenceKind::boussinesq: return "boussinesq";
    case ReferenceKind::none: return "none";
  }
  return "unknown";
}

ReferenceKind reference_from_string(const std::string& name) {
  for (auto r : {ReferenceKind::fine, ReferenceKind::homogenized, ReferenceKind::boussinesq, ReferenceKind::none}) {
    if (to_string(r) == name) return r;
  }
  throw ConfigError("unknown reference '" + name + "'");
}

namespace {

const std::set<std::string> kKnownKeys = {
    "coeff.kind",         "coeff.eps",          "coeff.alpha",       "coeff.beta",          "coeff.params",
    "mesh.dim",           "mesh.N_coarse",      "mesh.N_fine",       "mesh.periodic",       "mesh.fine_per_eps",
    "time.T",             "time.scheme",        "time.safety",       "time.dt_override",    "time.snapshots",
    "method",             "reference",          "reference.cache",   "fehmm.delta_over_eps", "fehmm.n_micro",
    "fehmm.coupling",     "fehmm.longtime",     "fdhmm.tau_over_eps", "fdhmm.delta_over_eps", "fdhmm.n_micro",
    "lod.k",              "lod.init_mode",      "homog.n_sample_points", "homog.N_cell",    "data.g1",
    "data.g2",            "data.f",             "data.k",            "sweep.H",             "sweep.eps",
    "output.csv",         "output.traj",        "output.record_timing", "seed",             "longtime.T0",
    "longtime.checkpoints", "longtime.budget",  "longtime.N_macro",  "longtime.hmm"};

const std::set<std::string> kDataNames = {"zero", "one", "sin", "cos", "bump"};

int cells_for_width(double H, const std::string& what) {
  if (!(H > 0.0) || H > 1.0) throw ConfigError(what + ": mesh width must lie in (0, 1]");
  const double n = 1.0 / H;
  const int N = static_cast<int>(std::lround(n));
  if (std::abs(n - N) > 1e-9 * n || N < 2) throw ConfigError(what + ": 1/H must be an integer >= 2");
  return N;
}

ReferenceKind default_reference(Method m) {
  switch (m) {
    case Method::fine:
    case Method::lod: return ReferenceKind::fine;
    case Method::boussinesq: return ReferenceKind::boussinesq;
    default: return ReferenceKind::homogenized;
  }
}

}  // namespace

ExperimentConfig parse_experiment(const Config& cfg) {
  cfg.check_known(kKnownKeys);
  ExperimentConfig e;
  e.raw = cfg;
  e.coeff_kind = cfg.get_string("coeff.kind", e.coeff_kind);
  try {
    coeff_kind_from_string(e.coeff_kind);
  } catch (const ArgumentError& err) {
    throw ConfigError(std::string("coeff.kind: ") + err.what());
  }
  e.eps = cfg.get_double("coeff.eps", e.eps);
  e.alpha = cfg.get_double("coeff.alpha", 0.0);
  e.beta = cfg.get_double("coeff.beta", 0.0);
  e.coeff_params = cfg.get_list("coeff.params");

  e.dim = cfg.get_int("mesh.dim", e.dim);
  e.N_coarse = cfg.get_int("mesh.N_coarse", e.N_coarse);
  e.N_fine = cfg.get_int("mesh.N_fine", e.N_fine);
  e.periodic = cfg.get_bool("mesh.periodic", e.periodic);
  e.fine_per_eps = cfg.get_int("mesh.fine_per_eps", 0);

  e.T = cfg.get_double("time.T", e.T);
  try {
    e.scheme = scheme_from_string(cfg.get_string("time.scheme", "leapfrog"));
  } catch (const ArgumentError& err) {
    throw ConfigError(std::string("time.scheme: ") + err.what());
  }
  e.safety = cfg.get_double("time.safety", e.safety);
  e.dt_override = cfg.get_double("time.dt_override", 0.0);
  e.snapshots = cfg.get_int("time.snapshots", e.snapshots);

  e.method = method_from_string(cfg.get_string("method", "fine"));
  e.reference = cfg.has("reference") ? reference_from_string(cfg.get_string("reference", ""))
                                     : default_reference(e.method);
  e.cache = cfg.get_bool("reference.cache", true);

  e.fehmm_delta_over_eps = cfg.get_double("fehmm.delta_over_eps", 0.0);
  e.fehmm_n_micro = cfg.get_int("fehmm.n_micro", e.fehmm_n_micro);
  try {
    e.fehmm_coupling = micro_coupling_from_string(cfg.get_string("fehmm.coupling", "periodic"));
    e.lod_init_mode = to_string(lod_init_mode_from_string(cfg.get_string("lod.init_mode", e.lod_init_mode)));
  } catch (const ArgumentError& err) {
    throw ConfigError(err.what());
  }
  e.fehmm_longtime = cfg.get_bool("fehmm.longtime", false);
  e.fdhmm_tau_over_eps = cfg.get_double("fdhmm.tau_over_eps", e.fdhmm_tau_over_eps);
  e.fdhmm_delta_over_eps = cfg.get_double("fdhmm.delta_over_eps", e.fdhmm_delta_over_eps);
  e.fdhmm_n_micro = cfg.get_int("fdhmm.n_micro", e.fdhmm_n_micro);
  e.lod_k = cfg.get_int("lod.k", 0);
  e.homog_n_sample_points = cfg.get_int("homog.n_sample_points", 0);
  e.homog_N_cell = cfg.get_int("homog.N_cell", e.homog_N_cell);

  e.data_g1 = cfg.get_string("data.g1", e.data_g1);
  e.data_g2 = cfg.get_string("data.g2", e.data_g2);
  e.data_f = cfg.get_string("data.f", e.data_f);
  e.data_k = cfg.get_double("data.k", e.data_k);

  e.sweep_H = cfg.get_list("sweep.H");
  e.sweep_eps = cfg.get_list("sweep.eps");
  if (cfg.has("sweep.H") && e.sweep_H.empty()) throw ConfigError("sweep.H is empty");
  if (cfg.has("sweep.eps") && e.sweep_eps.empty()) throw ConfigError("sweep.eps is empty");
  if (e.sweep_H.empty()) e.sweep_H = {1.0 / e.N_coarse};
  if (e.sweep_eps.empty()) e.sweep_eps = {e.eps};

  e.output_csv = cfg.get_string("output.csv", "");
  e.output_traj = cfg.get_string("output.traj", "");
  e.record_timing = cfg.get_bool("output.record_timing", true);
  const double seed = cfg.get_double("seed", 1.0);
  if (seed < 0 || seed != std::floor(seed)) throw ConfigError("seed must be a nonnegative integer");
  e.seed = static_cast<std::uint64_t>(seed);

  e.longtime_T0 = cfg.get_double("longtime.T0", e.longtime_T0);
  e.longtime_checkpoints = cfg.get_int("longtime.checkpoints", e.longtime_checkpoints);
  e.longtime_budget = cfg.get_double("longtime.budget", 0.0);
  e.longtime_N_macro = cfg.get_int("longtime.N_macro", 0);
  e.longtime_hmm = cfg.get_bool("longtime.hmm", true);

  // Validation.
  if (e.dim != 1 && e.dim != 2) throw ConfigError("mesh.dim must be 1 or 2");
  if (e.N_coarse < 2 || e.N_fine < 2) throw ConfigError("mesh sizes must be at least 2");
  if (e.fine_per_eps < 0) throw ConfigError("mesh.fine_per_eps must be nonnegative");
  if (!(e.eps > 0.0)) throw ConfigError("coeff.eps must be positive");
  for (double eps : e.sweep_eps) {
    if (!(eps > 0.0)) throw ConfigError("sweep.eps entries must be positive");
  }
  std::vector<int> coarse_cells;
  for (double H : e.sweep_H) coarse_cells.push_back(cells_for_width(H, "sweep.H"));
  if (!(e.T > 0.0)) throw ConfigError("time.T must be positive");
  if (!(e.safety > 0.0 && e.safety <= 1.0)) throw ConfigError("time.safety must lie in (0, 1]");
  if (e.dt_override < 0.0) throw ConfigError("time.dt_override must be nonnegative");
  if (e.snapshots < 1) throw ConfigError("time.snapshots must be positive");
  if (e.fehmm_n_micro < 2 || e.fdhmm_n_micro < 4) throw ConfigError("micro meshes are too coarse");
  if (e.fehmm_delta_over_eps < 0.0 || !(e.fdhmm_delta_over_eps > 0.0) || !(e.fdhmm_tau_over_eps > 0.0)) {
    throw ConfigError("sampling domain and averaging window sizes must be positive");
  }
  if (e.lod_k < 0) throw ConfigError("lod.k must be nonnegative");
  if (e.homog_N_cell < 4 || e.homog_n_sample_points < 0) throw ConfigError("invalid homog.* settings");
  for (const auto* name : {&e.data_g1, &e.data_f}) {
    if (!kDataNames.count(*name)) throw ConfigError("unknown data function '" + *name + "'");
  }
  if (!kDataNames.count(e.data_g2) && e.data_g2 != "travel") {
    throw ConfigError("unknown data function '" + e.data_g2 + "'");
  }
  if (e.data_g2 == "travel" && (e.dim != 1 || e.data_g1 != "sin")) {
    throw ConfigError("data.g2 = travel needs dim 1 and data.g1 = sin");
  }
  if (e.coeff_kind == "periodic_1d" && e.dim != 1) throw ConfigError("periodic_1d needs mesh.dim = 1");
  if (e.coeff_kind == "laminate_2d" && e.dim != 2) throw ConfigError("laminate_2d needs mesh.dim = 2");
  if ((e.method == Method::fdhmm || e.method == Method::boussinesq) && e.dim != 1) {
    throw ConfigError(to_string(e.method) + " is one-dimensional");
  }
  if ((e.method == Method::boussinesq || e.reference == ReferenceKind::boussinesq) && !e.periodic) {
    throw ConfigError("the Boussinesq model needs mesh.periodic = true");
  }
  if (e.coeff_kind == "piecewise_constant_sample" &&
      (e.method == Method::homogenized || e.method == Method::fehmm || e.method == Method::fehmm_l ||
       e.method == Method::fdhmm || e.method == Method::boussinesq || e.reference != ReferenceKind::fine)) {
    throw ConfigError("the sample field has no unit cell; use method lod or fine with a fine reference");
  }
  for (double eps : e.sweep_eps) {
    const int Nf = fine_cells(e, eps);
    for (int N : coarse_cells) {
      if (Nf % N != 0) {
        throw ConfigError("fine mesh (" + std::to_string(Nf) + " cells) is not a refinement of the coarse mesh (" +
                          std::to_string(N) + " cells)");
      }
    }
  }
  // Build every field once so bad parameters surface before any solve.
  for (double eps : e.sweep_eps) build_field(e, eps);
  return e;
}

int fine_cells(const ExperimentConfig& cfg, double eps) {
  if (cfg.fine_per_eps <= 0) return cfg.N_fine;
  int n = static_cast<int>(std::ceil(cfg.fine_per_eps / eps - 1e-9));
  // Round up to a multiple of every coarse mesh of the sweep.
  int lcm = 1;
  for (double H : cfg.sweep_H) {
    const int N = static_cast<int>(std::lround(1.0 / H));
    lcm = std::lcm(lcm, std::max(1, N));
  }
  return ((n + lcm - 1) / lcm) * lcm;
}

CoefficientField build_field(const ExperimentConfig& cfg, double eps) {
  const Box domain = Box::unit(cfg.dim);
  const auto& p = cfg.coeff_params;
  auto param = [&](std::size_t i, double fallback) { return i < p.size() ? p[i] : fallback; };
  auto expect = [&](std::size_t max_count) {
    if (p.size() > max_count) {
      throw ConfigError("coeff.params: " + cfg.coeff_kind + " takes at most " + std::to_string(max_count) +
                        " values");
    }
  };
  try {
    const CoeffKind kind = coeff_kind_from_string(cfg.coeff_kind);
    std::optional<CoefficientField> field;
    switch (kind) {
      case CoeffKind::constant:
        expect(1);
        field = CoefficientField::constant(cfg.dim, param(0, 1.0), domain);
        break;
      case CoeffKind::periodic_1d:
        expect(2);
        field = CoefficientField::periodic_1d_sine(param(0, 2.0), param(1, 1.0), eps, domain);
        break;
      case CoeffKind::locally_periodic:
        expect(3);
        field = CoefficientField::locally_periodic_sine(cfg.dim, param(0, 2.0), param(1, 1.0), param(2, 0.5), eps,
                                                        domain);
        break;
      case CoeffKind::laminate_2d:
        expect(3);
        field = CoefficientField::laminate_2d(param(0, 1.0), param(1, 4.0), param(2, 0.5), eps, domain);
        break;
      case CoeffKind::piecewise_constant_sample: {
        expect(2);
        const int cells = static_cast<int>(std::lround(1.0 / eps));
        if (cells < 1 || std::abs(cells * eps - 1.0) > 1e-9) {
          throw ConfigError("sample field needs 1/eps to be an integer");
        }
        field = CoefficientField::random_sample(cfg.dim, cells, param(0, 1.0), param(1, 10.0), cfg.seed, domain);
        break;
      }
    }
    if (cfg.alpha > 0.0 || cfg.beta > 0.0) {
      const SpectralReport rep = verify_spectral_bounds(*field, 4096);
      const double lo = cfg.alpha > 0.0 ? cfg.alpha : field->alpha();
      const double hi = cfg.beta > 0.0 ? cfg.beta : field->beta();
      if (rep.min_eig < lo * (1.0 - 1e-12) || rep.max_eig > hi * (1.0 + 1e-12)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "declared bounds [%g, %g] do not contain the sampled range [%g, %g]", lo, hi,
                      rep.min_eig, rep.max_eig);
        throw ConfigError(buf);
      }
    }
    return *field;
  } catch (const ArgumentError& err) {
    throw ConfigError(std::string("coeff: ") + err.what());
  }
}

namespace {

struct CatalogFn {
  ScalarFn f;
  GradientFn grad;
};

CatalogFn catalog(const std::string& name, int dim, double k) {
  const double w = k * M_PI;
  if (name == "zero") return {};
  if (name == "one") {
    return {[](const Point&) { return 1.0; }, [dim](const Point&) -> Point { return Point::Zero(dim); }};
  }
  if (name == "sin" || name == "cos") {
    const bool s = name == "sin";
    auto f1 = [s, w](double x) { return s ? std::sin(w * x) : std::cos(w * x); };
    auto d1 = [s, w](double x) { return s ? w * std::cos(w * x) : -w * std::sin(w * x); };
    return {[=](const Point& x) {
              double v = 1.0;
              for (int i = 0; i < dim; ++i) v *= f1(x(i));
              return v;
            },
            [=](const Point& x) -> Point {
              Point g(dim);
              for (int i = 0; i < dim; ++i) {
                double v = d1(x(i));
                for (int j = 0; j < dim; ++j) {
                  if (j != i) v *= f1(x(j));
                }
                g(i) = v;
              }
              return g;
            }};
  }
  // bump: exp(1 - 1 / (1 - s^2)), s = |x - c| / R, centered in the domain.
  constexpr double R = 0.25;
  auto s2 = [dim](const Point& x) {
    double r2 = 0.0;
    for (int i = 0; i < dim; ++i) r2 += (x(i) - 0.5) * (x(i) - 0.5);
    return r2 / (R * R);
  };
  return {[=](const Point& x) {
            const double s = s2(x);
            return s < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s)) : 0.0;
          },
          [=](const Point& x) -> Point {
            const double s = s2(x);
            Point g = Point::Zero(dim);
            if (s >= 1.0) return g;
            const double v = std::exp(1.0 - 1.0 / (1.0 - s));
            for (int i = 0; i < dim; ++i) g(i) = -v * 2.0 * (x(i) - 0.5) / (R * R) / ((1.0 - s) * (1.0 - s));
            return g;
          }};
}

double scalar_a0(const ExperimentConfig& cfg, const CoefficientField& field) {
  const Point center = Point::Constant(cfg.dim, 0.5);
  return effective_tensors(field, center, cfg.homog_N_cell).a0(0, 0);
}

double travel_a0(const ExperimentConfig& cfg, const CoefficientField& field) {
  return cfg.data_g2 == "travel" ? scalar_a0(cfg, field) : 0.0;
}

void print_hex(std::uint64_t v, char* buf) { std::snprintf(buf, 17, "%016llx", static_cast<unsigned long long>(v)); }

}  // namespace

WaveData build_data(const ExperimentConfig& cfg, double a0_scalar) {
  WaveData d;
  const CatalogFn g1 = catalog(cfg.data_g1, cfg.dim, cfg.data_k);
  d.g1 = g1.f;
  d.g1_grad = g1.grad;
  if (cfg.data_g2 == "travel") {
    const double w = cfg.data_k * M_PI;
    const double c = std::sqrt(a0_scalar);
    d.g2 = [w, c](const Point& x) { return -w * c * std::cos(w * x(0)); };
  } else {
    d.g2 = catalog(cfg.data_g2, cfg.dim, cfg.data_k).f;
  }
  d.f = catalog(cfg.data_f, cfg.dim, cfg.data_k).f;
  return d;
}

RateEstimate estimate_rate(const std::vector<double>& x, const std::vector<double>& err) {
  if (x.size() != err.size()) throw ArgumentError("rate estimate needs matching sizes");
  if (x.size() < 2) throw ArgumentError("rate estimate needs at least two points");
  RateEstimate out;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (x[i] == x[i + 1] || !(x[i] > 0.0) || !(x[i + 1] > 0.0)) {
      throw ArgumentError("rate estimate needs distinct positive sweep values");
    }
    const bool bad = !(err[i] > 0.0) || !(err[i + 1] > 0.0);
    out.flagged.push_back(bad);
    out.pairwise.push_back(bad ? kNotApplicable : std::log(err[i] / err[i + 1]) / std::log(x[i] / x[i + 1]));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(err[i] > 0.0)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(err[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  const double den = n * sxx - sx * sx;
  if (n >= 2 && den > 0.0) out.least_squares = (n * sxy - sx * sy) / den;
  return out;
}

CsvAppender::CsvAppender(std::ostream* out, bool record_timing) : out_(out), record_timing_(record_timing) {
  if (out_) *out_ << header() << '\n' << std::flush;
}

std::string CsvAppender::header() {
  return "method,dim,eps,H,h,k,delta,tau,T,dofs,wall_time_s,linf_l2,linf_h1,rate_l2,rate_h1";
}

std::string CsvAppender::format(const RunRecord& r, bool record_timing) {
  auto num = [](double v) -> std::string {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
  };
  std::string line = r.method + "," + std::to_string(r.dim) + "," + num(r.eps) + "," + num(r.H) + "," + num(r.h) +
                     "," + (r.k >= 0 ? std::to_string(r.k) : "") + "," + num(r.delta) + "," + num(r.tau) + "," +
                     num(r.T) + "," + std::to_string(r.dofs) + "," +
                     (record_timing ? num(r.wall_time_s) : std::string()) + "," + num(r.linf_l2) + "," +
                     num(r.linf_h1) + "," + num(r.rate_l2) + "," + num(r.rate_h1);
  return line;
}

void CsvAppender::append(const RunRecord& r) {
  if (out_) *out_ << format(r, record_timing_) << '\n' << std::flush;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string cache_directory() {
  if (const char* env = std::getenv("MSWAVE_CACHE_DIR"); env && *env) return env;
  return (std::filesystem::temp_directory_path() / "mswave-cache").string();
}

TimeGrid experiment_grid(const ExperimentConfig& cfg) {
  double dt = cfg.dt_override;
  if (!(dt > 0.0)) {
    double h_min = 1.0;
    double beta = 0.0;
    for (double eps : cfg.sweep_eps) {
      const Mesh fine = Mesh::uniform(cfg.dim, fine_cells(cfg, eps), Box::unit(cfg.dim), cfg.periodic);
      h_min = std::min(h_min, fine.h());
      beta = std::max(beta, build_field(cfg, eps).beta());
    }
    dt = cfl_timestep(h_min, beta, cfg.safety);
  }
  const int n0 = std::max(1, static_cast<int>(std::ceil(cfg.T / dt - 1e-9)));
  const int save = std::max(1, n0 / cfg.snapshots);
  TimeGrid g;
  g.n_steps = ((n0 + save - 1) / save) * save;
  g.dt = cfg.T / g.n_steps;
  g.scheme = cfg.scheme;
  g.save_every = save;
  return g;
}

Trajectory reference_trajectory(const ExperimentConfig& cfg, double eps, const Mesh& fine, const TimeGrid& grid) {
  if (cfg.reference == ReferenceKind::none) throw ConfigError("no reference configured");
  const CoefficientField field = build_field(cfg, eps);
  const BoundaryCondition bc = cfg.bc();

  std::string path;
  if (cfg.cache) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "ref=%s eps=%.17g N=%d dt=%.17g n=%d save=%d scheme=%s\n",
                  to_string(cfg.reference).c_str(), eps, fine.cells_per_axis(), grid.dt, grid.n_steps,
                  grid.save_every, to_string(grid.scheme).c_str());
    const std::string key = std::string(buf) + cfg.raw.canonical({"coeff.", "data.", "homog.", "seed"}) +
                            "dim=" + std::to_string(cfg.dim) + " periodic=" + std::to_string(cfg.periodic) +
                            " format=1";
    char hex[17];
    print_hex(fnv1a(key), hex);
    path = (std::filesystem::path(cache_directory()) / (std::string("ref-") + hex + ".traj")).string();
    if (std::filesystem::exists(path)) {
      try {
        Trajectory t = read_trajectory(path);
        if (t.n_snapshots() > 0 && t.n_dofs() == DofMap(fine, bc).n_dofs()) return t;
      } catch (const std::exception&) {
        // Unreadable cache entries are recomputed and overwritten.
      }
    }
  }

  const WaveData data = build_data(cfg, travel_a0(cfg, field));
  Trajectory traj;
  switch (cfg.reference) {
    case ReferenceKind::fine: {
      const SparseOperator A = assemble_stiffness(fine, field, 2, bc);
      const SparseOperator M = assemble_mass(fine, bc);
      const TensorFn coeff = [&field](const Point& x) { return field.eval_extended(x); };
      const WaveState s0 = initial_state(fine, M, data, &A, coeff);
      traj = integrate(M.matrix, A.matrix, make_load(fine, M.dofs, data), s0, grid);
      break;
    }
    case ReferenceKind::homogenized:
      traj = solve_homogenized_wave(homogenized_coefficient(field, cfg.homog_N_cell, cfg.homog_n_sample_points),
                                    fine, bc, data, grid);
      break;
    case ReferenceKind::boussinesq: {
      const EffectiveTensors et = effective_tensors(field, Point::Constant(1, 0.5), cfg.homog_N_cell);
      traj = solve_boussinesq_1d(et.a0(0, 0), et.b0, eps, fine, data, grid);
      break;
    }
    case ReferenceKind::none: break;
  }
  if (!path.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cache_directory(), ec);
    const std::string tmp = path + ".tmp";
    try {
      write_trajectory(tmp, traj, cfg.dim);
      std::filesystem::rename(tmp, path, ec);
    } catch (const std::exception&) {
      // A read-only cache location only costs the reuse.
    }
    // Serve the same numbers a later cached run would read back.
    try {
      return read_trajectory(path);
    } catch (const std::exception&) {
    }
  }
  return traj;
}

MethodRun run_method(const ExperimentConfig& cfg, double eps, int N, const Mesh& fine, const TimeGrid& grid) {
  const CoefficientField field = build_field(cfg, eps);
  const BoundaryCondition bc = cfg.bc();
  const Mesh coarse = Mesh::uniform(cfg.dim, N, Box::unit(cfg.dim), cfg.periodic);
  const WaveData data = build_data(cfg, travel_a0(cfg, field));
  const DofMap cdofs(coarse, bc);
  const DofMap fdofs(fine, bc);

  MethodRun run;
  RunRecord& r = run.record;
  r.method = to_string(cfg.method);
  r.dim = cfg.dim;
  r.eps = eps;
  r.H = coarse.spacing(0);
  r.h = fine.spacing(0);
  r.T = grid.final_time();
  r.dofs = cdofs.n_dofs();
  if (fine.cells_per_axis() % N == 0) run.to_fine = prolongation(coarse, cdofs, fine, fdofs);

  const auto t0 = std::chrono::steady_clock::now();
  switch (cfg.method) {
    case Method::fine: {
      const SparseOperator A = assemble_stiffness(coarse, field, 2, bc);
      const SparseOperator M = assemble_mass(coarse, bc);
      const TensorFn coeff = [&field](const Point& x) { return field.eval_extended(x); };
      run.traj = integrate(M.matrix, A.matrix, make_load(coarse, M.dofs, data), initial_state(coarse, M, data, &A, coeff),
                           grid);
      break;
    }
    case Method::homogenized:
      run.traj = solve_homogenized_wave(
          homogenized_coefficient(field, cfg.homog_N_cell, cfg.homog_n_sample_points), coarse, bc, data, grid);
      break;
    case Method::fehmm:
    case Method::fehmm_l: {
      FehmmOptions opt;
      opt.delta = cfg.fehmm_delta_over_eps * eps;
      opt.n_micro = cfg.fehmm_n_micro;
      opt.coupling = cfg.fehmm_coupling;
      r.delta = resolved_delta(field, opt);
      const bool longtime = cfg.method == Method::fehmm_l || cfg.fehmm_longtime;
      run.traj = fehmm_solve(coarse, field, bc, data, grid, opt, longtime);
      break;
    }
    case Method::fdhmm: {
      r.delta = cfg.fdhmm_delta_over_eps * eps;
      r.tau = cfg.fdhmm_tau_over_eps * eps;
      const FluxBasis basis = precompute_flux_basis(field, coarse, r.delta, r.tau, cfg.fdhmm_n_micro);
      run.traj = fdhmm_run(coarse, basis, bc, data, grid);
      break;
    }
    case Method::lod: {
      const LodContext ctx(field, coarse, fine, bc);
      r.k = cfg.lod_k > 0 ? cfg.lod_k : default_localization(coarse);
      const MultiscaleBasis ms = build_ms_space(ctx, r.k);
      const LodInitMode mode = lod_init_mode_from_string(cfg.lod_init_mode);
      Vector g1_eps;
      if (mode == LodInitMode::wellprepared) {
        const Vector g1 = data.g1 ? fdofs.interpolate(fine, data.g1) : Vector::Zero(fdofs.n_dofs());
        g1_eps = wellprepared_initial(field, homogenized_coefficient(field, cfg.homog_N_cell, cfg.homog_n_sample_points),
                                      g1, fine, bc);
      }
      run.traj = reconstruct_fine(ms, lod_wave_solve(ctx, ms, data, grid, mode, &g1_eps));
      SparseMatrix id(fdofs.n_dofs(), fdofs.n_dofs());
      id.setIdentity();
      run.to_fine = id;
      break;
    }
    case Method::boussinesq: {
      const EffectiveTensors et = effective_tensors(field, Point::Constant(1, 0.5), cfg.homog_N_cell);
      run.traj = solve_boussinesq_1d(et.a0(0, 0), et.b0, eps, coarse, data, grid);
      break;
    }
  }
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, std::ostream* csv, std::ostream* log) {
  if (cfg.reference == ReferenceKind::none) throw ConfigError("convergence runs need a reference");
  const TimeGrid grid = experiment_grid(cfg);
  CsvAppender appender(csv, cfg.record_timing);
  std::vector<RunRecord> records;
  const bool sweep_in_H = cfg.sweep_H.size() > 1;
  const bool sweep_in_eps = !sweep_in_H && cfg.sweep_eps.size() > 1;
  std::vector<const RunRecord*> previous_for_H;

  for (double eps : cfg.sweep_eps) {
    const Mesh fine = Mesh::uniform(cfg.dim, fine_cells(cfg, eps), Box::unit(cfg.dim), cfg.periodic);
    if (log) *log << "eps=" << eps << ": reference (" << to_string(cfg.reference) << ", " << fine.cells_per_axis()
                  << " cells, " << grid.n_steps << " steps)\n";
    const Trajectory ref = reference_trajectory(cfg, eps, fine, grid);
    const SparseMatrix Mf = assemble_mass(fine, cfg.bc()).matrix;
    const SparseMatrix Lf = assemble_laplacian(fine, cfg.bc()).matrix;
    for (std::size_t i = 0; i < cfg.sweep_H.size(); ++i) {
      const int N = static_cast<int>(std::lround(1.0 / cfg.sweep_H[i]));
      if (log) *log << "  " << to_string(cfg.method) << " H=1/" << N << '\n';
      MethodRun run = run_method(cfg, eps, N, fine, grid);
      const ErrorReport err = error_norms(ref, run.traj, run.to_fine, Mf, Lf);
      RunRecord rec = run.record;
      rec.linf_l2 = err.linf_l2;
      rec.linf_h1 = err.linf_h1;
      const RunRecord* prev = nullptr;
      if (sweep_in_H && i > 0) prev = &records.back();
      if (sweep_in_eps && !records.empty()) prev = &records.back();
      if (prev) {
        const double x1 = sweep_in_H ? prev->H : prev->eps;
        const double x2 = sweep_in_H ? rec.H : rec.eps;
        const RateEstimate r2 = estimate_rate({x1, x2}, {prev->linf_l2, rec.linf_l2});
        const RateEstimate r1 = estimate_rate({x1, x2}, {prev->linf_h1, rec.linf_h1});
        rec.rate_l2 = r2.pairwise[0];
        rec.rate_h1 = r1.pairwise[0];
      }
      records.push_back(rec);
      appender.append(rec);
      if (!cfg.output_traj.empty() && records.size() == 1) write_trajectory(cfg.output_traj, run.traj, cfg.dim);
    }
  }
  return records;
}

LongtimeTable longtime_compare(const ExperimentConfig& cfg, std::ostream* log) {
  if (cfg.dim != 1 || !cfg.periodic) throw ConfigError("longtime comparison needs mesh.dim = 1 and mesh.periodic = true");
  if (cfg.longtime_checkpoints < 1) throw ConfigError("longtime.checkpoints must be positive");
  if (!(cfg.longtime_T0 > 0.0)) throw ConfigError("longtime.T0 must be positive");
  const double eps = cfg.eps;
  const CoefficientField field = build_field(cfg, eps);
  if (!field.has_unit_cell()) throw ConfigError("longtime comparison needs a field with a unit cell");

  LongtimeTable table;
  table.T_long = cfg.longtime_T0 / (eps * eps);
  const int Nf = fine_cells(cfg, eps);
  const int Nm = cfg.longtime_N_macro > 0 ? cfg.longtime_N_macro : Nf;
  if (Nm < 2 || Nf % Nm != 0) throw ConfigError("longtime.N_macro must divide the fine mesh size");

  const double dt_max = cfg.dt_override > 0.0 ? cfg.dt_override : cfl_timestep(1.0 / Nf, field.beta(), cfg.safety);
  const int C = cfg.longtime_checkpoints;
  const int per_window = std::max(1, cfg.snapshots / C);
  const long n0 = static_cast<long>(std::ceil(table.T_long / dt_max - 1e-9));
  const long chunk = static_cast<long>(C) * per_window;
  const long n_steps = std::max(1L, (n0 + chunk - 1) / chunk) * chunk;
  const double work = static_cast<double>(Nf) * static_cast<double>(n_steps);
  if (cfg.longtime_budget > 0.0 && work > cfg.longtime_budget) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "estimated work %.3g (fine dofs x steps = %d x %ld) exceeds longtime.budget %.3g",
                  work, Nf, n_steps, cfg.longtime_budget);
    throw ConfigError(buf);
  }
  if (n_steps > 2000000000L) throw ConfigError("longtime run needs too many steps");
  TimeGrid grid;
  grid.n_steps = static_cast<int>(n_steps);
  grid.dt = table.T_long / n_steps;
  grid.scheme = cfg.scheme;
  grid.save_every = static_cast<int>(n_steps / chunk);

  const Mesh fine = Mesh::uniform(1, Nf, Box::unit(1), true);
  const Mesh macro = Mesh::uniform(1, Nm, Box::unit(1), true);
  const BoundaryCondition bc = BoundaryCondition::periodic;
  const EffectiveTensors et = effective_tensors(field, Point::Constant(1, 0.5), cfg.homog_N_cell);
  table.a0 = et.a0(0, 0);
  table.b0 = et.b0;
  const WaveData data = build_data(cfg, table.a0);

  ExperimentConfig ref_cfg = cfg;
  ref_cfg.reference = ReferenceKind::fine;
  if (log) *log << "fine reference: " << Nf << " cells, " << n_steps << " steps to T=" << table.T_long << '\n';
  const Trajectory ref = reference_trajectory(ref_cfg, eps, fine, grid);

  const SparseMatrix P = prolongation(macro, DofMap(macro, bc), fine, DofMap(fine, bc));
  const SparseMatrix Mf = assemble_mass(fine, bc).matrix;
  const SparseMatrix Lf = assemble_laplacian(fine, bc).matrix;
  auto windows = [&](const Trajectory& traj) {
    const std::vector<double> series = error_norms(ref, traj, P, Mf, Lf).series;
    std::vector<double> out(C, 0.0);
    for (std::size_t i = 1; i < series.size(); ++i) {
      const int w = std::min(C - 1, static_cast<int>((i - 1) / per_window));
      out[w] = std::max(out[w], series[i]);
    }
    return out;
  };
  if (log) *log << "homogenized and Boussinesq models on " << Nm << " cells\n";
  table.err_vs_u0 = windows(solve_homogenized_wave(et.a0, macro, bc, data, grid));
  table.err_vs_boussinesq = windows(solve_boussinesq_1d(table.a0, table.b0, eps, macro, data, grid));
  if (cfg.longtime_hmm) {
    if (log) *log << "FE-HMM and FE-HMM-L\n";
    FehmmOptions opt;
    opt.delta = cfg.fehmm_delta_over_eps * eps;
    opt.n_micro = cfg.fehmm_n_micro;
    opt.coupling = cfg.fehmm_coupling;
    const MicroCache cache = build_micro_cache(macro, field, opt);
    table.err_fehmm = windows(fehmm_solve(macro, cache, bc, data, grid, false));
    table.err_fehmm_l = windows(fehmm_solve(macro, cache, bc, data, grid, true));
  }
  for (int j = 1; j <= C; ++j) table.t.push_back(table.T_long * j / C);
  return table;
}

}  // namespace mswave
