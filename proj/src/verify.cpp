#include "mswave/bench.hpp"

#include "mswave/errors.hpp"
#include "mswave/fehmm.hpp"
#include "mswave/lod.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

namespace mswave {

namespace {

struct Reporter {
  std::ostream& out;
  bool all = true;

  void check(const std::string& name, bool ok, const std::string& detail) {
    out << (ok ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
    all = all && ok;
  }
};

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::vector<Point> sample_points(int dim, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) {
    Point p(dim);
    for (int j = 0; j < dim; ++j) p(j) = u(rng);
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

bool verify_invariants(const ExperimentConfig& cfg, std::ostream& out) {
  Reporter rep{out};
  std::mt19937_64 rng(cfg.seed);
  const double eps = cfg.sweep_eps.front();
  const CoefficientField field = build_field(cfg, eps);
  const BoundaryCondition bc = cfg.bc();

  const SpectralReport spec = verify_spectral_bounds(field, 4096);
  rep.check("spectral_bounds", spec.pass, fmt("min_eig=%.6g max_eig=%.6g", spec.min_eig, spec.max_eig));

  double asym = 0.0;
  double period_gap = 0.0;
  for (const Point& x : sample_points(cfg.dim, 200, rng)) {
    const Tensor a = field.eval(x);
    asym = std::max(asym, (a - a.transpose()).cwiseAbs().maxCoeff());
    if (field.has_unit_cell() && field.kind() != CoeffKind::locally_periodic) {
      for (int j = 0; j < cfg.dim; ++j) {
        Point y = x;
        y(j) += eps;
        period_gap = std::max(period_gap, (field.eval_extended(y) - a).cwiseAbs().maxCoeff());
      }
    }
  }
  rep.check("symmetry", asym == 0.0, fmt("max |a - a^T| = %.3g", asym));
  if (field.has_unit_cell() && field.kind() != CoeffKind::locally_periodic) {
    rep.check("periodicity", period_gap <= 1e-13, fmt("max |a(x + eps e_j) - a(x)| = %.3g", period_gap));
  }

  if (field.has_unit_cell()) {
    try {
      const CellSolution cell = solve_cell_problems(field, Point::Constant(cfg.dim, 0.5), cfg.homog_N_cell);
      const HomogenizedTensorReport h = homogenized_tensor_report(cell, field);
      const auto [lo, hi] = symmetric_eigenvalue_range(h.a0);
      rep.check("homogenized_tensor", true, fmt("eig(a0) in [%.8g, %.8g]", lo, hi));
    } catch (const ConsistencyError& e) {
      rep.check("homogenized_tensor", false, e.what());
    }
  }

  {
    // Energy of the unforced leapfrog scheme on the coarse mesh.
    const Mesh mesh = Mesh::uniform(cfg.dim, cfg.N_coarse, Box::unit(cfg.dim), cfg.periodic);
    const SparseOperator A = assemble_stiffness(mesh, field, 2, bc);
    const SparseOperator M = assemble_mass(mesh, bc);
    Vector u0 = Vector::Zero(A.size());
    std::normal_distribution<double> nd;
    for (Eigen::Index i = 0; i < u0.size(); ++i) u0(i) = nd(rng);
    WaveState s0{u0, Vector::Zero(u0.size()), 0.0};
    TimeGrid grid;
    grid.dt = cfl_timestep(mesh, field.beta(), 0.25);
    grid.n_steps = 1000;
    const Trajectory tr = leapfrog_run(M.matrix, A.matrix, {}, s0, grid);
    double e0 = 0.0, drift = 0.0;
    // Energies from consecutive stored snapshots (stride 1).
    for (std::size_t i = 0; i + 1 < tr.u.size(); ++i) {
      const double e = leapfrog_energy(M.matrix, A.matrix, tr.u[i], tr.u[i + 1], grid.dt);
      if (i == 0) e0 = e;
      drift = std::max(drift, std::abs(e - e0) / std::abs(e0));
    }
    rep.check("leapfrog_energy", drift <= 1e-10, fmt("relative drift %.3g over %.0f steps", drift, static_cast<double>(grid.n_steps)));
  }

  if (cfg.method == Method::fehmm || cfg.method == Method::fehmm_l) {
    const Mesh macro = Mesh::uniform(cfg.dim, cfg.N_coarse, Box::unit(cfg.dim), cfg.periodic);
    FehmmOptions opt;
    opt.delta = cfg.fehmm_delta_over_eps * eps;
    opt.n_micro = cfg.fehmm_n_micro;
    opt.coupling = cfg.fehmm_coupling;
    const SparseMatrix b1 = assemble_B_H(macro, field, opt, bc).matrix;
    const SparseMatrix b2 = assemble_B_H(macro, field, opt, bc).matrix;
    const double gap = b1.rows() ? Eigen::MatrixXd(b1 - b2).cwiseAbs().maxCoeff() : 0.0;
    const double asymB = b1.rows() ? Eigen::MatrixXd(b1 - SparseMatrix(b1.transpose())).cwiseAbs().maxCoeff() : 0.0;
    rep.check("fehmm_deterministic", gap == 0.0, fmt("max |B1 - B2| = %.3g", gap));
    rep.check("fehmm_symmetric", asymB == 0.0, fmt("max |B - B^T| = %.3g", asymB));
  }

  if (cfg.method == Method::lod) {
    const int N = static_cast<int>(std::lround(1.0 / cfg.sweep_H.front()));
    const Mesh coarse = Mesh::uniform(cfg.dim, N, Box::unit(cfg.dim), cfg.periodic);
    const Mesh fine = Mesh::uniform(cfg.dim, fine_cells(cfg, eps), Box::unit(cfg.dim), cfg.periodic);
    const LodContext ctx(field, coarse, fine, bc);
    const int k = cfg.lod_k > 0 ? cfg.lod_k : default_localization(coarse);
    const MultiscaleBasis ms = build_ms_space(ctx, k);
    double ph = 0.0;
    for (int j = 0; j < ms.corrector.cols(); ++j) {
      ph = std::max(ph, ctx.project(Vector(ms.corrector.col(j))).cwiseAbs().maxCoeff());
    }
    rep.check("lod_constraint", ph <= 1e-10, fmt("max |P_H Q(Phi)| = %.3g (k = %.0f)", ph, static_cast<double>(k)));

    const MultiscaleBasis ideal = build_ms_space(ctx, full_localization(coarse));
    const SparseMatrix& A = ctx.fine_stiffness().matrix;
    std::normal_distribution<double> nd;
    double orth = 0.0;
    for (int s = 0; s < 50; ++s) {
      Vector r(A.rows()), c(ideal.basis.cols());
      for (auto& x : r) x = nd(rng);
      for (auto& x : c) x = nd(rng);
      const Vector w = r - ctx.prolongation() * ctx.project(r);
      const Vector v = ideal.basis * c;
      const double scale = std::sqrt(v.dot(A * v) * w.dot(A * w));
      if (scale > 0.0) orth = std::max(orth, std::abs(v.dot(A * w)) / scale);
    }
    rep.check("lod_orthogonality", orth <= 1e-9, fmt("max relative a(v_ms, w) = %.3g", orth));
  }
  return rep.all;
}

}  // namespace mswave
