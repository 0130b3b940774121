#include "mswave/fehmm.hpp"

#include "mswave/errors.hpp"
#include "mswave/parallel.hpp"

#include <cmath>

namespace mswave {

Box SamplingDomain::box() const {
  Box b;
  b.lo = center.array() - 0.5 * delta;
  b.hi = center.array() + 0.5 * delta;
  return b;
}

double resolved_delta(const CoefficientField& field, const FehmmOptions& opt) {
  if (opt.delta > 0.0) return opt.delta;
  return opt.coupling == MicroCoupling::periodic ? field.eps() : 2.0 * field.eps();
}

namespace {

void check_delta(const CoefficientField& field, double delta, MicroCoupling coupling) {
  if (!(delta > 0.0)) throw ArgumentError("sampling domain size must be positive");
  if (!field.has_unit_cell() || field.kind() == CoeffKind::constant) return;
  const double ratio = delta / field.eps();
  if (ratio < 1.0 - 1e-9) throw ArgumentError("sampling domain must satisfy delta >= eps");
  if (coupling == MicroCoupling::periodic && std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw ArgumentError("periodic micro coupling needs delta / eps to be an integer");
  }
}

CorrectorSolution solve_unit_slopes(const CoefficientField& field, const SamplingDomain& domain,
                                    MicroCoupling coupling, int quad_order) {
  check_delta(field, domain.delta, coupling);
  if (domain.n_micro < 2) throw ArgumentError("micro mesh needs at least 2 cells per axis");
  return solve_correctors(
      domain.box(), domain.n_micro, [&field](const Point& x) { return field.eval_extended(x); }, coupling,
      quad_order);
}

}  // namespace

MicroFunction micro_solve(const CoefficientField& field, const SamplingDomain& domain, const Point& slope,
                          MicroCoupling coupling, int quad_order) {
  if (slope.size() != field.dim() || domain.center.size() != field.dim()) {
    throw ArgumentError("slope and center must match the field dimension");
  }
  const CorrectorSolution sol = solve_unit_slopes(field, domain, coupling, quad_order);
  Vector corr = Vector::Zero(sol.dofs.n_dofs());
  for (int j = 0; j < field.dim(); ++j) corr += slope(j) * sol.chi[j];
  MicroFunction out;
  out.mesh = sol.mesh;
  out.corrector = sol.dofs.expand(corr);
  out.values = out.corrector;
  for (int v = 0; v < out.mesh.n_vertices(); ++v) {
    out.values(v) += slope.dot(out.mesh.vertex(v) - domain.center);
  }
  return out;
}

MicroCache build_micro_cache(const Mesh& macro_mesh, const CoefficientField& field, const FehmmOptions& opt) {
  if (macro_mesh.dim() != field.dim()) throw ArgumentError("field and mesh dimensions differ");
  const double delta = resolved_delta(field, opt);
  check_delta(field, delta, opt.coupling);
  const int ne = macro_mesh.n_elements();
  MicroCache cache;
  cache.delta = delta;
  cache.energy.resize(ne);
  cache.second_moment.resize(ne);
  std::vector<double> residual(ne, 0.0);
  parallel_for(ne, [&](int e) {
    SamplingDomain dom{macro_mesh.barycenter(e), delta, opt.n_micro};
    const CorrectorSolution sol = solve_unit_slopes(field, dom, opt.coupling, opt.quad_order);
    cache.energy[e] = sol.energy;
    cache.second_moment[e] = sol.second_moment;
    residual[e] = sol.residual;
  });
  for (double r : residual) cache.max_residual = std::max(cache.max_residual, r);
  return cache;
}

SparseOperator assemble_B_H(const Mesh& macro_mesh, const MicroCache& cache, BoundaryCondition bc) {
  if (static_cast<int>(cache.energy.size()) != macro_mesh.n_elements()) {
    throw StructureError("micro cache does not match the macro mesh");
  }
  return assemble_stiffness(
      macro_mesh, [&cache](int e, const Point&) { return cache.energy[e]; }, 1, bc);
}

SparseOperator assemble_B_H(const Mesh& macro_mesh, const CoefficientField& field, const FehmmOptions& opt,
                            BoundaryCondition bc) {
  return assemble_B_H(macro_mesh, build_micro_cache(macro_mesh, field, opt), bc);
}

SparseOperator assemble_Q_mass(const Mesh& macro_mesh, const MicroCache& cache, BoundaryCondition bc) {
  if (static_cast<int>(cache.second_moment.size()) != macro_mesh.n_elements()) {
    throw StructureError("micro cache does not match the macro mesh");
  }
  SparseOperator q = assemble_mass(macro_mesh, bc);
  const SparseOperator inc = assemble_stiffness(
      macro_mesh, [&cache](int e, const Point&) { return cache.second_moment[e]; }, 1, bc);
  q.matrix += inc.matrix;
  return q;
}

SparseOperator assemble_Q_mass(const Mesh& macro_mesh, const CoefficientField& field, const FehmmOptions& opt,
                               BoundaryCondition bc) {
  return assemble_Q_mass(macro_mesh, build_micro_cache(macro_mesh, field, opt), bc);
}

Trajectory fehmm_solve(const Mesh& macro_mesh, const MicroCache& cache, BoundaryCondition bc, const WaveData& data,
                       const TimeGrid& grid, bool longtime) {
  const SparseOperator B = assemble_B_H(macro_mesh, cache, bc);
  const SparseOperator M = assemble_mass(macro_mesh, bc);
  const WaveState s0 = initial_state(
      macro_mesh, M, data, B, [&cache](int e, const Point&) { return cache.energy[e]; }, 1);
  const LoadFn load = make_load(macro_mesh, M.dofs, data);
  if (longtime) return integrate(assemble_Q_mass(macro_mesh, cache, bc).matrix, B.matrix, load, s0, grid);
  return integrate(M.matrix, B.matrix, load, s0, grid);
}

Trajectory fehmm_solve(const Mesh& macro_mesh, const CoefficientField& field, BoundaryCondition bc,
                       const WaveData& data, const TimeGrid& grid, const FehmmOptions& opt, bool longtime) {
  return fehmm_solve(macro_mesh, build_micro_cache(macro_mesh, field, opt), bc, data, grid, longtime);
}

}  // namespace mswave
