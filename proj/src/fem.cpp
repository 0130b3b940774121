#include "mswave/fem.hpp"

#include "mswave/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mswave {

std::string to_string(BoundaryCondition bc) {
  switch (bc) {
    case BoundaryCondition::dirichlet: return "dirichlet";
    case BoundaryCondition::periodic: return "periodic";
    case BoundaryCondition::none: return "none";
  }
  return "unknown";
}

BoundaryCondition boundary_condition_from_string(const std::string& name) {
  for (auto bc : {BoundaryCondition::dirichlet, BoundaryCondition::periodic, BoundaryCondition::none}) {
    if (to_string(bc) == name) return bc;
  }
  throw ArgumentError("unknown boundary condition '" + name + "'");
}

DofMap::DofMap(const Mesh& mesh, BoundaryCondition bc) : bc_(bc) {
  if (bc == BoundaryCondition::periodic && !mesh.periodic()) {
    throw ArgumentError("periodic dofs need a periodic mesh");
  }
  if (bc != BoundaryCondition::periodic && mesh.periodic()) {
    throw ArgumentError("a periodic mesh only supports periodic dofs");
  }
  const int nv = mesh.n_vertices();
  vertex_to_dof_.assign(nv, -1);
  for (int v = 0; v < nv; ++v) {
    if (bc == BoundaryCondition::dirichlet && mesh.is_boundary_vertex(v)) continue;
    if (mesh.periodic_master(v) != v) continue;
    vertex_to_dof_[v] = static_cast<int>(dof_to_vertex_.size());
    dof_to_vertex_.push_back(v);
  }
  for (int v = 0; v < nv; ++v) {
    const int m = mesh.periodic_master(v);
    if (m != v) vertex_to_dof_[v] = vertex_to_dof_[m];
  }
}

Vector DofMap::expand(const Vector& dofs) const {
  if (dofs.size() != n_dofs()) throw ArgumentError("dof vector has the wrong length");
  Vector out = Vector::Zero(n_vertices());
  for (int v = 0; v < n_vertices(); ++v) {
    if (vertex_to_dof_[v] >= 0) out(v) = dofs(vertex_to_dof_[v]);
  }
  return out;
}

Vector DofMap::restrict(const Vector& vertex_values) const {
  if (vertex_values.size() != n_vertices()) throw ArgumentError("vertex vector has the wrong length");
  Vector out(n_dofs());
  for (int d = 0; d < n_dofs(); ++d) out(d) = vertex_values(dof_to_vertex_[d]);
  return out;
}

Vector DofMap::interpolate(const Mesh& mesh, const ScalarFn& g) const {
  Vector out(n_dofs());
  for (int d = 0; d < n_dofs(); ++d) out(d) = g(mesh.vertex(dof_to_vertex_[d]));
  return out;
}

QuadratureRule quadrature_rule(int dim, int order) {
  QuadratureRule q;
  if (order < 1 || order > 3) throw ArgumentError("quadrature order must be 1, 2 or 3");
  if (dim == 1) {
    if (order == 1) {
      q.nodes = {{0.5, 0.5, 0.0}};
      q.weights = {1.0};
    } else if (order == 2) {
      const double g = 0.5 / std::sqrt(3.0);
      q.nodes = {{0.5 + g, 0.5 - g, 0.0}, {0.5 - g, 0.5 + g, 0.0}};
      q.weights = {0.5, 0.5};
    } else {
      const double g = 0.5 * std::sqrt(0.6);
      q.nodes = {{0.5 + g, 0.5 - g, 0.0}, {0.5, 0.5, 0.0}, {0.5 - g, 0.5 + g, 0.0}};
      q.weights = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    }
    return q;
  }
  if (dim != 2) throw ArgumentError("quadrature dimension must be 1 or 2");
  if (order == 1) {
    q.nodes = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
    q.weights = {1.0};
  } else if (order == 2) {
    // Interior nodes keep the rule away from element edges, where laminate
    // and sampled coefficients jump.
    q.nodes = {{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0}, {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}, {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}};
    q.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  } else {
    const double a = 0.445948490915965;
    const double wa = 0.223381589678011;
    const double b = 0.091576213509771;
    const double wb = 0.109951743655322;
    q.nodes = {{a, a, 1 - 2 * a}, {a, 1 - 2 * a, a}, {1 - 2 * a, a, a},
               {b, b, 1 - 2 * b}, {b, 1 - 2 * b, b}, {1 - 2 * b, b, b}};
    q.weights = {wa, wa, wa, wb, wb, wb};
  }
  return q;
}

namespace {

// Accumulates symmetric element contributions into the upper triangle and
// mirrors at the end, so the result is symmetric bit for bit.
class SymmetricAssembler {
 public:
  SymmetricAssembler(int n, std::size_t reserve) : n_(n) { triplets_.reserve(reserve); }

  void add_element(const std::array<int, 3>& dofs, int n_local, const Eigen::Matrix3d& local) {
    for (int a = 0; a < n_local; ++a) {
      const int da = dofs[a];
      if (da < 0) continue;
      triplets_.emplace_back(da, da, local(a, a));
      for (int b = a + 1; b < n_local; ++b) {
        const int db = dofs[b];
        if (db < 0) continue;
        if (da == db) {
          triplets_.emplace_back(da, da, 2.0 * local(a, b));
        } else {
          triplets_.emplace_back(std::min(da, db), std::max(da, db), local(a, b));
        }
      }
    }
  }

  SparseMatrix finish() {
    SparseMatrix upper(n_, n_);
    upper.setFromTriplets(triplets_.begin(), triplets_.end());
    SparseMatrix full(n_, n_);
    full = upper.selfadjointView<Eigen::Upper>();
    full.makeCompressed();
    return full;
  }

 private:
  int n_;
  std::vector<Triplet> triplets_;
};

std::array<int, 3> element_dofs(const Mesh& mesh, const DofMap& dofs, int e) {
  std::array<int, 3> out{-1, -1, -1};
  for (int l = 0; l < mesh.vertices_per_element(); ++l) out[l] = dofs.dof(mesh.element(e)[l]);
  return out;
}

}  // namespace

Eigen::Matrix3d element_stiffness(const Mesh& mesh, int element, const ElementTensorFn& tensor,
                                  const QuadratureRule& rule) {
  const int nl = mesh.vertices_per_element();
  const int d = mesh.dim();
  const auto g = mesh.gradients(element);
  const double measure = mesh.element_measure(element);
  Tensor acc = Tensor::Zero(d, d);
  for (std::size_t q = 0; q < rule.weights.size(); ++q) {
    acc += rule.weights[q] * tensor(element, mesh.map_point(element, rule.nodes[q]));
  }
  acc *= measure;
  Eigen::Matrix3d local = Eigen::Matrix3d::Zero();
  for (int a = 0; a < nl; ++a) {
    for (int b = a; b < nl; ++b) {
      const double v = g.col(a).head(d).dot(acc * g.col(b).head(d));
      local(a, b) = v;
      local(b, a) = v;
    }
  }
  return local;
}

SparseOperator assemble_stiffness(const Mesh& mesh, const ElementTensorFn& tensor, int quad_order,
                                  BoundaryCondition bc) {
  SparseOperator op;
  op.dofs = DofMap(mesh, bc);
  const QuadratureRule rule = quadrature_rule(mesh.dim(), quad_order);
  const int nl = mesh.vertices_per_element();
  SymmetricAssembler assembler(op.dofs.n_dofs(), static_cast<std::size_t>(mesh.n_elements()) * nl * (nl + 1) / 2);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    assembler.add_element(element_dofs(mesh, op.dofs, e), nl, element_stiffness(mesh, e, tensor, rule));
  }
  op.matrix = assembler.finish();
  return op;
}

SparseOperator assemble_stiffness(const Mesh& mesh, const TensorFn& coeff, int quad_order, BoundaryCondition bc) {
  return assemble_stiffness(
      mesh, [&coeff](int, const Point& x) { return coeff(x); }, quad_order, bc);
}

SparseOperator assemble_stiffness(const Mesh& mesh, const CoefficientField& field, int quad_order,
                                  BoundaryCondition bc) {
  if (field.dim() != mesh.dim()) throw ArgumentError("field and mesh dimensions differ");
  return assemble_stiffness(
      mesh, [&field](int, const Point& x) { return field.eval_extended(x); }, quad_order, bc);
}

SparseOperator assemble_laplacian(const Mesh& mesh, BoundaryCondition bc) {
  const int d = mesh.dim();
  return assemble_stiffness(
      mesh, [d](int, const Point&) -> Tensor { return Tensor::Identity(d, d); }, 1, bc);
}

SparseOperator assemble_mass(const Mesh& mesh, BoundaryCondition bc) {
  SparseOperator op;
  op.dofs = DofMap(mesh, bc);
  const int nl = mesh.vertices_per_element();
  SymmetricAssembler assembler(op.dofs.n_dofs(), static_cast<std::size_t>(mesh.n_elements()) * nl * (nl + 1) / 2);
  Eigen::Matrix3d ref = Eigen::Matrix3d::Zero();
  if (mesh.dim() == 1) {
    ref.topLeftCorner<2, 2>() << 2.0, 1.0, 1.0, 2.0;
    ref /= 6.0;
  } else {
    ref << 2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0;
    ref /= 12.0;
  }
  for (int e = 0; e < mesh.n_elements(); ++e) {
    assembler.add_element(element_dofs(mesh, op.dofs, e), nl, mesh.element_measure(e) * ref);
  }
  op.matrix = assembler.finish();
  return op;
}

Vector lumped_mass(const SparseOperator& mass) {
  Vector out = Vector::Zero(mass.size());
  for (int k = 0; k < mass.matrix.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(mass.matrix, k); it; ++it) out(it.row()) += it.value();
  }
  return out;
}

Vector assemble_load(const Mesh& mesh, const DofMap& dofs, const ScalarFn& f, int quad_order) {
  const QuadratureRule rule = quadrature_rule(mesh.dim(), quad_order);
  const int nl = mesh.vertices_per_element();
  Vector b = Vector::Zero(dofs.n_dofs());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto ed = element_dofs(mesh, dofs, e);
    const double measure = mesh.element_measure(e);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const double fv = rule.weights[q] * measure * f(mesh.map_point(e, rule.nodes[q]));
      for (int l = 0; l < nl; ++l) {
        if (ed[l] >= 0) b(ed[l]) += fv * rule.nodes[q][l];
      }
    }
  }
  return b;
}

Vector assemble_flux_load(const Mesh& mesh, const DofMap& dofs,
                          const std::function<Point(int element, const Point& x)>& q, int quad_order) {
  const QuadratureRule rule = quadrature_rule(mesh.dim(), quad_order);
  const int nl = mesh.vertices_per_element();
  const int d = mesh.dim();
  Vector b = Vector::Zero(dofs.n_dofs());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto ed = element_dofs(mesh, dofs, e);
    const auto g = mesh.gradients(e);
    Point avg = Point::Zero(d);
    for (std::size_t k = 0; k < rule.weights.size(); ++k) {
      avg += rule.weights[k] * q(e, mesh.map_point(e, rule.nodes[k]));
    }
    avg *= mesh.element_measure(e);
    for (int l = 0; l < nl; ++l) {
      if (ed[l] >= 0) b(ed[l]) += avg.dot(g.col(l).head(d));
    }
  }
  return b;
}

SparseMatrix prolongation(const Mesh& coarse, const DofMap& coarse_dofs, const Mesh& fine,
                          const DofMap& fine_dofs) {
  require_nested(coarse, fine);
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(fine_dofs.n_dofs()) * 3);
  for (int d = 0; d < fine_dofs.n_dofs(); ++d) {
    const Location loc = nested_location(coarse, fine, fine_dofs.vertex(d));
    const auto& el = coarse.element(loc.element);
    for (int l = 0; l < coarse.vertices_per_element(); ++l) {
      const int cd = coarse_dofs.dof(el[l]);
      if (cd >= 0 && loc.bary[l] != 0.0) triplets.emplace_back(d, cd, loc.bary[l]);
    }
  }
  SparseMatrix p(fine_dofs.n_dofs(), coarse_dofs.n_dofs());
  p.setFromTriplets(triplets.begin(), triplets.end());
  return p;
}

SpdSolver::SpdSolver(const SparseMatrix& a) { factor(a); }

void SpdSolver::factor(const SparseMatrix& a) {
  ldlt_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>();
  ldlt_->compute(a);
  if (ldlt_->info() != Eigen::Success) throw SolverError("sparse LDL^T factorization failed");
  const Vector d = ldlt_->vectorD();
  if (d.size() > 0 && !(d.minCoeff() > 0.0)) throw SolverError("matrix is not positive definite");
  n_ = static_cast<int>(a.rows());
}

Vector SpdSolver::solve(const Vector& b) const {
  if (!ldlt_) throw SolverError("solver used before factorization");
  Vector x = ldlt_->solve(b);
  if (ldlt_->info() != Eigen::Success) throw SolverError("sparse LDL^T solve failed");
  return x;
}

CgResult conjugate_gradient(const SparseMatrix& a, const Vector& b_in, double tol, bool semidefinite) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || b_in.size() != n) throw ArgumentError("CG dimensions do not match");
  Vector b = b_in;
  if (semidefinite) b.array() -= b.mean();
  CgResult res;
  res.x = Vector::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) return res;

  Vector inv_diag = a.diagonal();
  for (int i = 0; i < n; ++i) inv_diag(i) = inv_diag(i) > 0.0 ? 1.0 / inv_diag(i) : 1.0;

  Vector r = b;
  Vector z = inv_diag.cwiseProduct(r);
  Vector p = z;
  double rz = r.dot(z);
  const int cap = std::max(10 * n, 10);
  for (int it = 0; it < cap; ++it) {
    const Vector ap = a * p;
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    res.x += alpha * p;
    r -= alpha * ap;
    res.iterations = it + 1;
    res.relative_residual = r.norm() / bnorm;
    if (res.relative_residual <= tol) break;
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  // Recompute the true residual; the recursive one drifts on long runs.
  if (semidefinite) res.x.array() -= res.x.mean();
  res.relative_residual = (b - a * res.x).norm() / bnorm;
  if (res.relative_residual > tol) {
    throw SolverError("conjugate gradients did not converge", res.relative_residual, res.iterations);
  }
  return res;
}

Vector solve_spd(const SparseOperator& a, const Vector& b, double tol) {
  return conjugate_gradient(a.matrix, b, tol, a.dofs.semidefinite()).x;
}

Vector solve_direct(const SparseOperator& a, const Vector& b) {
  if (b.size() != a.matrix.rows()) throw ArgumentError("right-hand side has the wrong length");
  if (!a.dofs.semidefinite()) return SpdSolver(a.matrix).solve(b);
  const Eigen::Index n = b.size();
  if (n < 2) return Vector::Zero(n);
  const SparseMatrix reduced = a.matrix.bottomRightCorner(n - 1, n - 1);
  Vector x = Vector::Zero(n);
  x.tail(n - 1) = SpdSolver(reduced).solve(b.tail(n - 1).array() - b.mean());
  x.array() -= x.mean();
  return x;
}

Vector l2_project(const Mesh& coarse, const Mesh& fine, BoundaryCondition bc, const Vector& fine_dofs) {
  const SparseOperator mc = assemble_mass(coarse, bc);
  const SparseOperator mf = assemble_mass(fine, bc);
  if (fine_dofs.size() != mf.size()) throw ArgumentError("fine dof vector has the wrong length");
  const SparseMatrix p = prolongation(coarse, mc.dofs, fine, mf.dofs);
  SpdSolver solver(mc.matrix);
  return solver.solve(p.transpose() * (mf.matrix * fine_dofs));
}

Vector ritz_project_functional(const SparseOperator& stiffness, const Vector& rhs, double tol) {
  return solve_spd(stiffness, rhs, tol);
}

Vector ritz_project(const SparseOperator& stiffness, const Vector& target, double tol) {
  Vector x = solve_spd(stiffness, stiffness.matrix * target, tol);
  if (stiffness.dofs.semidefinite()) x.array() += target.mean();
  return x;
}

Vector ritz_project(const TensorFn& coeff, const Mesh& mesh, const SparseOperator& stiffness,
                    const GradientFn& grad, int quad_order, double tol) {
  const Vector rhs = assemble_flux_load(
      mesh, stiffness.dofs, [&](int, const Point& x) -> Point { return coeff(x) * grad(x); }, quad_order);
  return solve_spd(stiffness, rhs, tol);
}

Vector ritz_project(const CoefficientField& field, const Mesh& mesh, const SparseOperator& stiffness,
                    const GradientFn& grad, int quad_order, double tol) {
  return ritz_project([&field](const Point& x) { return field.eval_extended(x); }, mesh, stiffness, grad,
                      quad_order, tol);
}

void write_trajectory(std::ostream& out, const Trajectory& traj, int dim) {
  const int n = traj.n_dofs();
  const int steps = traj.n_snapshots();
  const double dt = steps > 1 ? traj.times[1] - traj.times[0] : 0.0;
  char buf[64];
  out << "mswave-traj v1\n";
  std::snprintf(buf, sizeof buf, "%.17g", dt);
  out << dim << ' ' << n << ' ' << steps << ' ' << buf << '\n';
  for (const Vector& u : traj.u) {
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", u(i));
      if (i > 0) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

void write_trajectory(const std::string& path, const Trajectory& traj, int dim) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
  write_trajectory(out, traj, dim);
  if (!out) throw ArgumentError("failed writing '" + path + "'");
}

Trajectory read_trajectory(std::istream& in, int* dim) {
  std::string line;
  if (!std::getline(in, line) || line != "mswave-traj v1") throw ArgumentError("not a trajectory snapshot file");
  int d = 0;
  int n = 0;
  int steps = 0;
  double dt = 0.0;
  if (!(in >> d >> n >> steps >> dt) || n < 0 || steps < 0) throw ArgumentError("bad trajectory header");
  Trajectory traj;
  for (int s = 0; s < steps; ++s) {
    Vector u(n);
    for (int i = 0; i < n; ++i) {
      if (!(in >> u(i))) throw ArgumentError("truncated trajectory file");
    }
    traj.times.push_back(s * dt);
    traj.u.push_back(std::move(u));
  }
  if (dim) *dim = d;
  return traj;
}

Trajectory read_trajectory(const std::string& path, int* dim) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  return read_trajectory(in, dim);
}

Vector interpolate_in_time(const Trajectory& traj, double t) {
  if (traj.times.empty()) throw StructureError("empty trajectory");
  const double t0 = traj.times.front();
  const double t1 = traj.times.back();
  const double tol = 1e-9 * std::max(1.0, std::abs(t1));
  if (t < t0 - tol || t > t1 + tol) throw StructureError("time outside the trajectory's range");
  auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t - tol);
  std::size_t k = static_cast<std::size_t>(it - traj.times.begin());
  if (k >= traj.times.size()) k = traj.times.size() - 1;
  if (std::abs(traj.times[k] - t) <= tol) return traj.u[k];
  if (k == 0) return traj.u[0];
  const double ta = traj.times[k - 1];
  const double tb = traj.times[k];
  const double w = (t - ta) / (tb - ta);
  return (1.0 - w) * traj.u[k - 1] + w * traj.u[k];
}

double mass_norm(const SparseMatrix& m, const Vector& v) { return std::sqrt(std::max(0.0, v.dot(m * v))); }

ErrorReport error_norms(const Trajectory& ref, const Trajectory& approx, const SparseMatrix& to_fine,
                        const SparseMatrix& fine_mass, const SparseMatrix& fine_laplacian) {
  if (ref.times.empty()) throw StructureError("empty reference trajectory");
  if (to_fine.cols() != approx.n_dofs() || to_fine.rows() != ref.n_dofs()) {
    throw StructureError("trajectory sizes do not match the transfer operator");
  }
  ErrorReport rep;
  std::vector<double> h1;
  for (std::size_t i = 0; i < ref.times.size(); ++i) {
    const Vector e = ref.u[i] - to_fine * interpolate_in_time(approx, ref.times[i]);
    const double l2sq = std::max(0.0, e.dot(fine_mass * e));
    const double semi = std::max(0.0, e.dot(fine_laplacian * e));
    rep.series.push_back(std::sqrt(l2sq));
    rep.linf_l2 = std::max(rep.linf_l2, std::sqrt(l2sq));
    rep.linf_h1 = std::max(rep.linf_h1, std::sqrt(l2sq + semi));
  }
  if (ref.times.size() == 1) {
    rep.l2_l2 = rep.series[0];
  } else {
    double acc = 0.0;
    for (std::size_t i = 1; i < ref.times.size(); ++i) {
      const double dt = ref.times[i] - ref.times[i - 1];
      acc += 0.5 * dt * (rep.series[i] * rep.series[i] + rep.series[i - 1] * rep.series[i - 1]);
    }
    rep.l2_l2 = std::sqrt(acc);
  }
  return rep;
}

ErrorReport error_norms(const Trajectory& ref, const Mesh& fine, const Trajectory& approx, const Mesh& coarse,
                        BoundaryCondition bc) {
  const SparseOperator mf = assemble_mass(fine, bc);
  const SparseOperator lf = assemble_laplacian(fine, bc);
  const DofMap cd(coarse, bc);
  return error_norms(ref, approx, prolongation(coarse, cd, fine, mf.dofs), mf.matrix, lf.matrix);
}

}  // namespace mswave
