// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "oracles.hpp"

#include "mswave/bench.hpp"
#include "mswave/fdhmm.hpp"
#include "mswave/fehmm.hpp"
#include "mswave/homog.hpp"
#include "mswave/lod.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <string>

using namespace mswave;
using mswave::testing::kPi;
using mswave::testing::ls_rate;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

int failures = 0;

void criterion(const char* id, double time_limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = time_limit_s <= 0.0 || s < time_limit_s;
  const bool ok = out.ok && in_time;
  if (!ok) ++failures;
  std::printf("%s %-4s %s  [%.1f s%s]\n", ok ? "PASS" : "FAIL", id, out.detail.c_str(), s,
              in_time ? "" : fmt(", limit %.0f s", time_limit_s).c_str());
  std::fflush(stdout);
}

CoefficientField sine_field(double eps) { return CoefficientField::periodic_1d_sine(2.0, 1.0, eps, Box::unit(1)); }

ExperimentConfig experiment(const std::string& text) { return parse_experiment(Config::parse_string(text)); }

std::vector<double> column(const std::vector<RunRecord>& recs, double RunRecord::*field) {
  std::vector<double> out;
  for (const RunRecord& r : recs) out.push_back(r.*field);
  return out;
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt("%.3g", x);
  return s;
}

double max_abs(const SparseMatrix& a) {
  double m = 0.0;
  for (int j = 0; j < a.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(a, j); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

Outcome c1() {
  const CoefficientField f = sine_field(0.01);
  const CellSolution cell = solve_cell_problems(f, Point::Constant(1, 0.5), 1024);
  const double a0 = homogenized_tensor(cell, f)(0, 0);
  return {std::abs(a0 - 0.5) <= 1e-6, fmt("a0 = %.10f, expected 0.5 +- 1e-6", a0)};
}

Outcome c2() {
  const CellSolution cell = solve_cell_problems(sine_field(0.01), Point::Constant(1, 0.5), 1024);
  const double b0 = dispersive_coefficient_1d(cell);
  const double expected = 1.0 / (32 * kPi * kPi);
  return {std::abs(b0 - expected) <= 1e-6, fmt("b0 = %.8e, expected %.8e +- 1e-6", b0, expected)};
}

Outcome c3() {
  const CoefficientField f = CoefficientField::laminate_2d(1.0, 4.0, 0.5, 0.01, Box::unit(2));
  const CellSolution cell = solve_cell_problems(f, make_point(0.5, 0.5), 256);
  const Tensor a0 = homogenized_tensor(cell, f);
  Tensor expected(2, 2);
  expected << 1.6, 0.0, 0.0, 2.5;
  const double gap = (a0 - expected).cwiseAbs().maxCoeff();
  return {gap <= 1e-3, fmt("a0 = [[%.6f, %.2e], [%.2e, %.6f]], max deviation %.2e", a0(0, 0), a0(0, 1), a0(1, 0),
                           a0(1, 1), gap)};
}

Outcome c4() {
  const std::vector<double> epss = {1.0 / 10, 1.0 / 20, 1.0 / 40};
  std::vector<double> errs;
  for (double eps : epss) {
    const CoefficientField f = sine_field(eps);
    const int N = static_cast<int>(std::lround(20.0 / eps));
    const Mesh mesh = Mesh::uniform(1, N, Box::unit(1), false);
    const BoundaryCondition bc = BoundaryCondition::dirichlet;
    WaveData data;
    data.g1 = [](const Point& x) { return std::sin(kPi * x(0)); };
    data.g1_grad = [](const Point& x) { return Point::Constant(1, kPi * std::cos(kPi * x(0))); };
    const TimeGrid grid = TimeGrid::covering(0.5, cfl_timestep(mesh, f.beta(), 0.5));
    const SparseOperator A = assemble_stiffness(mesh, f, 2, bc);
    const SparseOperator M = assemble_mass(mesh, bc);
    const TensorFn coeff = [&f](const Point& x) { return f.eval_extended(x); };
    const Trajectory ue = integrate(M.matrix, A.matrix, {}, initial_state(mesh, M, data, &A, coeff), grid);
    const Trajectory u0 = solve_homogenized_wave(Tensor(Tensor::Constant(1, 1, 0.5)), mesh, bc, data, grid);
    errs.push_back(error_norms(ue, mesh, u0, mesh, bc).linf_l2);
  }
  const double rate = ls_rate(epss, errs);
  const bool decreasing = errs[1] < errs[0] && errs[2] < errs[1];
  return {decreasing && rate >= 0.8, fmt("errors %s, eps-rate %.3f (>= 0.8)", list(errs).c_str(), rate)};
}

Outcome c5() {
  const ExperimentConfig e = experiment(
      "coeff.kind = periodic_1d\ncoeff.eps = 1/100\nmesh.N_fine = 2048\nmethod = fehmm\nreference = homogenized\n"
      "reference.cache = false\nfehmm.coupling = periodic\nfehmm.delta_over_eps = 1\nfehmm.n_micro = 64\n"
      "sweep.H = 1/8, 1/16, 1/32, 1/64\ntime.T = 0.5\ntime.dt_override = 1/4096\ntime.snapshots = 64\n"
      "data.g1 = sin\n");
  const std::vector<RunRecord> recs = run_experiment(e);
  const std::vector<double> H = column(recs, &RunRecord::H), err = column(recs, &RunRecord::linf_l2);
  const double rate = estimate_rate(H, err).least_squares;

  double gap = 0.0;
  for (int dim : {1, 2}) {
    const Mesh m = Mesh::uniform(dim, 8, Box::unit(dim), false);
    const CoefficientField f = CoefficientField::constant(dim, 2.5, Box::unit(dim));
    FehmmOptions opt;
    opt.delta = 0.01;
    opt.n_micro = 8;
    const SparseMatrix B = assemble_B_H(m, f, opt, BoundaryCondition::dirichlet).matrix;
    const SparseMatrix K = 2.5 * assemble_laplacian(m, BoundaryCondition::dirichlet).matrix;
    gap = std::max(gap, max_abs(B - K));
  }
  return {rate >= 1.7 && rate <= 2.3 && gap <= 1e-12,
          fmt("L2 errors %s, rate %.3f in [1.7, 2.3]; constant-field |B_H - K| = %.2e", list(err).c_str(), rate, gap)};
}

Outcome c6() {
  const double eps = 0.01;
  const CoefficientField f = sine_field(eps);
  MicroWaveProblem p;
  p.center = 0.5;
  p.delta = eps;
  p.tau = 40 * eps;
  p.n_micro = 64;
  p.slope = 1.0;
  const double J = micro_wave_flux(f, p, AveragingKernel(p.tau));
  const double J_err = std::abs(J - 0.5) / 0.5;

  const ExperimentConfig e = experiment(
      "coeff.kind = periodic_1d\ncoeff.eps = 1/100\nmesh.N_fine = 2048\nmethod = fdhmm\nreference = homogenized\n"
      "reference.cache = false\nfdhmm.tau_over_eps = 40\nfdhmm.delta_over_eps = 1\nfdhmm.n_micro = 64\n"
      "sweep.H = 1/8, 1/16, 1/32, 1/64\ntime.T = 0.5\ntime.dt_override = 1/4096\ntime.snapshots = 64\n"
      "data.g1 = sin\n");
  const TimeGrid grid = experiment_grid(e);
  const Mesh fine = Mesh::uniform(1, fine_cells(e, eps), Box::unit(1), false);
  const Trajectory ref = reference_trajectory(e, eps, fine, grid);
  std::vector<double> H, err;
  for (double h : e.sweep_H) {
    const MethodRun run = run_method(e, eps, static_cast<int>(std::lround(1.0 / h)), fine, grid);
    double sup = 0.0;
    for (std::size_t i = 0; i < ref.u.size(); ++i) {
      sup = std::max(sup, (run.to_fine * run.traj.u[i] - ref.u[i]).cwiseAbs().maxCoeff());
    }
    H.push_back(h);
    err.push_back(sup);
  }
  const double rate = ls_rate(H, err);
  return {J_err <= 0.02 && rate >= 1.7 && rate <= 2.3,
          fmt("J = %.6f (rel. dev. %.2e <= 0.02); sup errors %s, rate %.3f in [1.7, 2.3]", J, J_err,
              list(err).c_str(), rate)};
}

Outcome c7() {
  const ExperimentConfig e1 = experiment(
      "coeff.kind = periodic_1d\ncoeff.eps = 1/50\nmesh.N_fine = 1024\nmethod = lod\nreference = fine\n"
      "reference.cache = false\nsweep.H = 1/8, 1/16, 1/32\ntime.T = 1\ntime.snapshots = 128\ndata.f = sin\n");
  const std::vector<RunRecord> r1 = run_experiment(e1);
  const std::vector<double> H1 = column(r1, &RunRecord::H);
  const double l2 = estimate_rate(H1, column(r1, &RunRecord::linf_l2)).least_squares;
  const double h1 = estimate_rate(H1, column(r1, &RunRecord::linf_h1)).least_squares;

  const ExperimentConfig e2 = experiment(
      "coeff.kind = piecewise_constant_sample\ncoeff.eps = 1/32\ncoeff.params = 1, 10\nseed = 42\nmesh.dim = 2\n"
      "mesh.N_fine = 128\nmethod = lod\nreference = fine\nreference.cache = false\nsweep.H = 1/8, 1/16\n"
      "time.T = 1\ntime.safety = 0.25\ntime.snapshots = 64\ndata.f = sin\n");
  const std::vector<RunRecord> r2 = run_experiment(e2);
  const double l2_2d = estimate_rate(column(r2, &RunRecord::H), column(r2, &RunRecord::linf_l2)).least_squares;

  const bool ok = l2 >= 1.7 && l2 <= 2.3 && h1 >= 0.8 && h1 <= 1.3 && l2_2d >= 1.5;
  return {ok, fmt("1D L2 rate %.3f in [1.7, 2.3], H1 rate %.3f in [0.8, 1.3]; 2D L2 rate %.3f >= 1.5", l2, h1,
                  l2_2d)};
}

Outcome c8() {
  const BoundaryCondition bc = BoundaryCondition::dirichlet;
  const LodContext ctx(sine_field(1.0 / 50), Mesh::uniform(1, 16, Box::unit(1), false),
                       Mesh::uniform(1, 800, Box::unit(1), false), bc);
  const MultiscaleBasis ms = build_ms_space(ctx, default_localization(ctx.coarse()));
  double ph = 0.0;
  for (int j = 0; j < ms.corrector.cols(); ++j) {
    ph = std::max(ph, ctx.project(Vector(ms.corrector.col(j))).cwiseAbs().maxCoeff());
  }

  const MultiscaleBasis ideal = build_ms_space(ctx, full_localization(ctx.coarse()));
  const SparseMatrix& A = ctx.fine_stiffness().matrix;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  double orth = 0.0;
  for (int s = 0; s < 50; ++s) {
    Vector r(A.rows()), c(ideal.basis.cols());
    for (auto& x : r) x = nd(rng);
    for (auto& x : c) x = nd(rng);
    const Vector w = r - ctx.prolongation() * ctx.project(r);
    const Vector v = ideal.basis * c;
    orth = std::max(orth, std::abs(v.dot(A * w)) / std::sqrt(v.dot(A * v) * w.dot(A * w)));
  }

  const std::vector<double> layers = corrector_decay_profile(ctx, 8, 4);
  std::vector<double> j;
  for (std::size_t i = 0; i < layers.size(); ++i) j.push_back(std::exp(static_cast<double>(i)));
  const double rho = std::exp(ls_rate(j, layers));
  return {ph <= 1e-10 && orth <= 1e-9 && rho <= 0.75,
          fmt("max |P_H Q| = %.2e (<= 1e-10), orthogonality %.2e (<= 1e-9), decay rho = %.3f (<= 0.75)", ph, orth,
              rho)};
}

Outcome c9() {
  const Mesh mesh = Mesh::uniform(1, 1024, Box::unit(1), false);
  const CoefficientField f = sine_field(1.0 / 50);
  const BoundaryCondition bc = BoundaryCondition::dirichlet;
  const SparseOperator A = assemble_stiffness(mesh, f, 2, bc);
  const SparseOperator M = assemble_mass(mesh, bc);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  Vector u0(A.size()), v0(A.size());
  for (auto& x : u0) x = nd(rng);
  for (auto& x : v0) x = nd(rng);
  TimeGrid grid;
  grid.dt = cfl_timestep(mesh, f.beta(), 0.5);
  grid.n_steps = 10000;
  const Trajectory t = leapfrog_run(M.matrix, A.matrix, {}, WaveState{u0, v0, 0.0}, grid);
  const double e0 = leapfrog_energy(M.matrix, A.matrix, t.u[0], t.u[1], grid.dt);
  double drift = 0.0;
  for (std::size_t i = 1; i + 1 < t.u.size(); ++i) {
    drift = std::max(drift, std::abs(leapfrog_energy(M.matrix, A.matrix, t.u[i], t.u[i + 1], grid.dt) - e0) / e0);
  }
  return {drift <= 1e-10, fmt("relative energy drift %.2e over %d steps (<= 1e-10)", drift, grid.n_steps)};
}

const char* kLongtime =
    "coeff.kind = periodic_1d\ncoeff.eps = 1/25\ncoeff.params = 2, 1\nmesh.dim = 1\nmesh.periodic = true\n"
    "mesh.N_fine = 6400\ntime.scheme = newmark\ntime.dt_override = 1/400\ntime.snapshots = 1000\n"
    "data.g1 = sin\ndata.g2 = travel\ndata.k = 2\nfehmm.delta_over_eps = 1\nfehmm.n_micro = 256\n"
    "longtime.T0 = 0.5\nlongtime.checkpoints = 10\nlongtime.N_macro = 800\nreference.cache = false\n";

LongtimeTable longtime_table;
bool longtime_ok = false;

Outcome c10() {
  longtime_table = longtime_compare(experiment(kLongtime));
  longtime_ok = true;
  const double hom = longtime_table.err_vs_u0.back(), bous = longtime_table.err_vs_boussinesq.back();
  return {bous * 2.0 <= hom, fmt("T_long = %.0f: hom error %.3e, Boussinesq error %.3e, ratio %.2f (>= 2)",
                                 longtime_table.T_long, hom, bous, hom / bous)};
}

Outcome c11() {
  const double eps = 1.0 / 40;
  const double b0 = 1.0 / (32 * kPi * kPi);
  const Mesh m = Mesh::uniform(1, 10, Box::unit(1), false);
  FehmmOptions opt;
  opt.delta = eps;
  opt.n_micro = 128;
  const MicroCache cache = build_micro_cache(m, sine_field(eps), opt);
  const SparseMatrix Q = assemble_Q_mass(m, cache, BoundaryCondition::none).matrix;
  const SparseMatrix M = assemble_mass(m, BoundaryCondition::none).matrix;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {
    const double p = u(rng), q = u(rng), cp = u(rng), cq = u(rng);
    Vector a(m.n_vertices()), b(m.n_vertices());
    for (int i = 0; i < m.n_vertices(); ++i) {
      a(i) = p * m.vertex(i)(0) + cp;
      b(i) = q * m.vertex(i)(0) + cq;
    }
    // Summed over all elements: |Omega| = 1.
    const double expected = eps * eps * b0 * p * q;
    worst = std::max(worst, std::abs(a.dot((Q - M) * b) - expected) / std::abs(expected));
  }
  if (!longtime_ok) return {false, fmt("increment deviation %.2e; long-time run unavailable", worst)};
  const double e = longtime_table.err_fehmm.back(), el = longtime_table.err_fehmm_l.back();
  return {worst <= 0.05 && el < e,
          fmt("Q-mass increment deviation %.2e (<= 0.05); final FE-HMM-L error %.3e < FE-HMM error %.3e", worst, el,
              e)};
}

Outcome c12() {
  const Mesh m = Mesh::uniform(1, 256, Box::unit(1), true);
  const double a0 = 0.5, b0 = 1.0 / (32 * kPi * kPi), eps = 0.1, k = 8 * kPi;
  WaveData data;
  data.g1 = [k](const Point& x) { return std::cos(k * x(0)); };
  data.g1_grad = [k](const Point& x) { return Point::Constant(1, -k * std::sin(k * x(0))); };
  const Trajectory t = solve_boussinesq_1d(a0, b0, eps, m, data, TimeGrid::covering(4.0, 1e-3, Scheme::newmark));
  const DofMap d(m, BoundaryCondition::periodic);
  const double omega = mswave::testing::measure_frequency(t, d.interpolate(m, data.g1), assemble_mass(m, d.bc()).matrix);
  const double expected = std::sqrt(a0 * k * k / (1 + eps * eps * b0 * k * k));
  const double rel = std::abs(omega - expected) / expected;
  return {rel <= 0.01, fmt("omega = %.6f, relation gives %.6f, rel. deviation %.2e (<= 0.01)", omega, expected, rel)};
}

}  // namespace

int main() {
  criterion("C1", 1, c1);
  criterion("C2", 1, c2);
  criterion("C3", 30, c3);
  criterion("C4", 180, c4);
  criterion("C5", 120, c5);
  criterion("C6", 120, c6);
  criterion("C7", 600, c7);
  criterion("C8", 0, c8);
  criterion("C9", 0, c9);
  criterion("C10", 600, c10);
  criterion("C11", 0, c11);
  criterion("C12", 0, c12);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
