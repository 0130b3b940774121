#include "mswave/lod.hpp"

#include "mswave/errors.hpp"
#include "mswave/parallel.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <cmath>

namespace mswave {

LodContext::LodContext(const CoefficientField& field, Mesh coarse, Mesh fine, BoundaryCondition bc, int quad_order)
    : coarse_(std::move(coarse)), fine_(std::move(fine)), bc_(bc) {
  require_nested(coarse_, fine_);
  if (field.dim() != fine_.dim()) throw ArgumentError("field and mesh dimensions differ");
  coarse_dofs_ = DofMap(coarse_, bc);

  const QuadratureRule rule = quadrature_rule(fine_.dim(), quad_order);
  acc_.resize(fine_.n_elements());
  for (int t = 0; t < fine_.n_elements(); ++t) {
    Tensor acc = Tensor::Zero(fine_.dim(), fine_.dim());
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      acc += rule.weights[q] * field.eval_extended(fine_.map_point(t, rule.nodes[q]));
    }
    acc_[t] = fine_.element_measure(t) * acc;
  }
  stiffness_ = assemble_stiffness(
      fine_, [this](int t, const Point&) -> Tensor { return acc_[t] / fine_.element_measure(t); }, 1, bc);
  mass_ = assemble_mass(fine_, bc);
  coarse_mass_ = assemble_mass(coarse_, bc);
  P_ = mswave::prolongation(coarse_, coarse_dofs_, fine_, stiffness_.dofs);
  constraint_t_ = mass_.matrix * P_;
  coarse_mass_solver_ = std::make_shared<SpdSolver>(coarse_mass_.matrix);

  children_.resize(coarse_.n_elements());
  for (int t = 0; t < fine_.n_elements(); ++t) children_[coarse_parent(coarse_, fine_, t)].push_back(t);
}

Vector LodContext::project(const Vector& fine_vector) const {
  return coarse_mass_solver_->solve(P_.transpose() * (mass_.matrix * fine_vector));
}

namespace {

Point fine_gradient(const Mesh& fine, const DofMap& dofs, int t, const Vector& global) {
  const auto g = fine.gradients(t);
  Point grad = Point::Zero(fine.dim());
  for (int l = 0; l < fine.vertices_per_element(); ++l) {
    const int d = dofs.dof(fine.element(t)[l]);
    if (d >= 0) grad += global(d) * g.col(l).head(fine.dim());
  }
  return grad;
}

// Solves [A C^T; C 0] [x; lambda] = [r; 0]. A is SPD whenever the patch
// touches a Dirichlet or patch boundary; then the dense Schur complement
// C A^{-1} C^T is small (one row per coarse dof near the patch). A full
// periodic patch leaves A singular and falls back to sparse LU.
class PatchSaddle {
 public:
  // a_singular: a has constants in its kernel (periodic patch covering the
  // whole domain); only the bordered system is then invertible.
  PatchSaddle(const SparseMatrix& a, const SparseMatrix& c, bool a_singular) : n_(a.rows()) {
    if (!a_singular) ldlt_.compute(a);
    if (!a_singular && ldlt_.info() == Eigen::Success && ldlt_.vectorD().size() > 0 && ldlt_.vectorD().minCoeff() > 0.0) {
      const Eigen::MatrixXd ct = Eigen::MatrixXd(c.transpose());
      y_ = ldlt_.solve(ct);
      schur_.compute(c * y_);
      if (schur_.info() != Eigen::Success) throw SolverError("corrector Schur complement is singular");
      c_ = c;
      use_schur_ = true;
      return;
    }
    std::vector<Triplet> trip;
    for (int j = 0; j < a.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(a, j); it; ++it) trip.emplace_back(it.row(), j, it.value());
    }
    for (int j = 0; j < c.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(c, j); it; ++it) {
        trip.emplace_back(n_ + it.row(), j, it.value());
        trip.emplace_back(j, n_ + it.row(), it.value());
      }
    }
    SparseMatrix full(n_ + c.rows(), n_ + c.rows());
    full.setFromTriplets(trip.begin(), trip.end());
    lu_.compute(full);
    if (lu_.info() != Eigen::Success) throw SolverError("corrector saddle-point factorization failed");
  }

  Vector solve(const Vector& r) const {
    if (use_schur_) {
      const Vector x0 = ldlt_.solve(r);
      const Vector lambda = schur_.solve(c_ * x0);
      return x0 - y_ * lambda;
    }
    Vector rhs = Vector::Zero(lu_.rows());
    rhs.head(n_) = r;
    const Vector x = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success) throw SolverError("corrector saddle-point solve failed");
    return x.head(n_);
  }

 private:
  Eigen::Index n_;
  bool use_schur_ = false;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  Eigen::MatrixXd y_;
  Eigen::LDLT<Eigen::MatrixXd> schur_;
  SparseMatrix c_;
  Eigen::SparseLU<SparseMatrix> lu_;
};

}  // namespace

ElementCorrectors corrector_solve(const LodContext& ctx, int K, int k) {
  const Mesh& coarse = ctx.coarse();
  const Mesh& fine = ctx.fine();
  if (K < 0 || K >= coarse.n_elements()) throw ArgumentError("coarse element index out of range");
  if (k < 0) throw ArgumentError("localization parameter must be nonnegative");
  const DofMap& fdofs = ctx.fine_dofs();
  const int dim = fine.dim();

  ElementCorrectors out;
  out.element = K;
  out.patch = element_patch(coarse, K, k);
  for (int l = 0; l < coarse.vertices_per_element(); ++l) out.coarse_dofs.push_back(ctx.coarse_dofs().dof(coarse.element(K)[l]));
  out.values.resize(out.coarse_dofs.size());
  // W_h = {0} when the meshes coincide.
  if (ctx.identical_meshes()) return out;

  std::vector<char> in_patch(coarse.n_elements(), 0);
  for (int c : out.patch.elements) in_patch[c] = 1;

  // Free fine dofs: every fine element around the vertex lies in the patch.
  std::vector<int> local(fdofs.n_dofs(), -1);
  for (int c : out.patch.elements) {
    for (int t : ctx.children(c)) {
      for (int l = 0; l < fine.vertices_per_element(); ++l) {
        const int v = fine.element(t)[l];
        const int d = fdofs.dof(v);
        if (d < 0 || local[d] != -1) continue;
        bool inside = true;
        for (int s : fine.vertex_elements(fine.periodic_master(v))) {
          if (!in_patch[coarse_parent(coarse, fine, s)]) {
            inside = false;
            break;
          }
        }
        local[d] = inside ? static_cast<int>(out.fine_dofs.size()) : -2;
        if (inside) out.fine_dofs.push_back(d);
      }
    }
  }
  const int nS = static_cast<int>(out.fine_dofs.size());

  // Multipliers: coarse basis functions tested against some patch dof.
  const auto& ct = ctx.constraint_transpose();
  std::vector<int> rlocal(ctx.coarse_dofs().n_dofs(), -1);
  int nR = 0;
  std::vector<Triplet> a_trip, c_trip;
  const SparseMatrix& A = ctx.fine_stiffness().matrix;
  for (int j = 0; j < nS; ++j) {
    const int s = out.fine_dofs[j];
    for (SparseMatrix::InnerIterator it(A, s); it; ++it) {
      const int i = local[it.row()];
      if (i >= 0) a_trip.emplace_back(i, j, it.value());
    }
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ct, s); it; ++it) {
      int& r = rlocal[it.col()];
      if (r < 0) r = nR++;
      c_trip.emplace_back(r, j, it.value());
    }
  }
  SparseMatrix a_ss(nS, nS), c_rs(nR, nS);
  a_ss.setFromTriplets(a_trip.begin(), a_trip.end());
  c_rs.setFromTriplets(c_trip.begin(), c_trip.end());
  const PatchSaddle saddle(a_ss, c_rs, fdofs.semidefinite() && nS == fdofs.n_dofs());

  const auto gK = coarse.gradients(K);
  for (std::size_t l = 0; l < out.coarse_dofs.size(); ++l) {
    if (out.coarse_dofs[l] < 0) continue;
    const Point grad_phi = gK.col(static_cast<int>(l)).head(dim);
    Vector rhs = Vector::Zero(nS);
    for (int t : ctx.children(K)) {
      const Point flux = ctx.integrated_tensor(t) * grad_phi;
      const auto g = fine.gradients(t);
      for (int m = 0; m < fine.vertices_per_element(); ++m) {
        const int d = fdofs.dof(fine.element(t)[m]);
        if (d >= 0 && local[d] >= 0) rhs(local[d]) -= flux.dot(g.col(m).head(dim));
      }
    }
    out.values[l] = saddle.solve(rhs);
  }
  return out;
}

SparseMatrix assemble_corrector_matrix(const LodContext& ctx, const std::vector<ElementCorrectors>& local) {
  std::vector<Triplet> trip;
  for (const auto& ec : local) {
    for (std::size_t l = 0; l < ec.coarse_dofs.size(); ++l) {
      if (ec.coarse_dofs[l] < 0 || ec.values[l].size() == 0) continue;
      for (std::size_t j = 0; j < ec.fine_dofs.size(); ++j) {
        const double v = ec.values[l](static_cast<Eigen::Index>(j));
        if (v != 0.0) trip.emplace_back(ec.fine_dofs[j], ec.coarse_dofs[l], v);
      }
    }
  }
  SparseMatrix q(ctx.fine_dofs().n_dofs(), ctx.coarse_dofs().n_dofs());
  q.setFromTriplets(trip.begin(), trip.end());
  return q;
}

MultiscaleBasis build_ms_space(const LodContext& ctx, int k) {
  const int ne = ctx.coarse().n_elements();
  std::vector<ElementCorrectors> local(ne);
  parallel_for(ne, [&](int K) { local[K] = corrector_solve(ctx, K, k); });
  MultiscaleBasis ms;
  ms.k = k;
  ms.corrector = assemble_corrector_matrix(ctx, local);
  ms.basis = ctx.prolongation() + ms.corrector;
  const SparseMatrix bt = ms.basis.transpose();
  SparseMatrix s = bt * (ctx.fine_stiffness().matrix * ms.basis);
  SparseMatrix m = bt * (ctx.fine_mass().matrix * ms.basis);
  ms.stiffness = 0.5 * (s + SparseMatrix(s.transpose()));
  ms.mass = 0.5 * (m + SparseMatrix(m.transpose()));
  ms.stiffness.prune(0.0);
  ms.mass.prune(0.0);
  return ms;
}

int default_localization(const Mesh& coarse) {
  const double inv_h = static_cast<double>(coarse.cells_per_axis());
  return std::max(1, static_cast<int>(std::ceil(std::log2(inv_h) - 1e-12)));
}

// Vertex-graph distance across the diagonal-split square is up to 2N.
int full_localization(const Mesh& coarse) { return coarse.dim() == 1 ? coarse.cells_per_axis() : 2 * coarse.cells_per_axis(); }

std::string to_string(LodInitMode m) {
  switch (m) {
    case LodInitMode::zero: return "zero";
    case LodInitMode::l2_proj: return "l2_proj";
    case LodInitMode::wellprepared: return "wellprepared";
  }
  return "unknown";
}

LodInitMode lod_init_mode_from_string(const std::string& name) {
  for (auto m : {LodInitMode::zero, LodInitMode::l2_proj, LodInitMode::wellprepared}) {
    if (to_string(m) == name) return m;
  }
  throw ArgumentError("unknown LOD init mode '" + name + "'");
}

Trajectory lod_wave_solve(const LodContext& ctx, const MultiscaleBasis& ms, const WaveData& data,
                          const TimeGrid& grid, LodInitMode init_mode, const Vector* g1_eps) {
  const Mesh& fine = ctx.fine();
  const DofMap& fd = ctx.fine_dofs();
  const SparseMatrix bt = ms.basis.transpose();
  SpdSolver mass_solver(ms.mass);
  const int n = static_cast<int>(ms.mass.rows());

  WaveState s0;
  s0.u = Vector::Zero(n);
  s0.v = Vector::Zero(n);
  if (init_mode != LodInitMode::zero) {
    Vector g1f = Vector::Zero(fd.n_dofs());
    if (init_mode == LodInitMode::wellprepared) {
      if (!g1_eps || g1_eps->size() != fd.n_dofs()) throw ArgumentError("wellprepared mode needs g1_eps on the fine dofs");
      g1f = *g1_eps;
    } else if (data.g1) {
      g1f = fd.interpolate(fine, data.g1);
    }
    s0.u = mass_solver.solve(bt * (ctx.fine_mass().matrix * g1f));
    if (data.g2) s0.v = mass_solver.solve(bt * (ctx.fine_mass().matrix * fd.interpolate(fine, data.g2)));
  }

  LoadFn load;
  if (data.f) {
    const Vector base = bt * assemble_load(fine, fd, data.f);
    auto theta = data.theta;
    load = [base, theta](double t) -> Vector { return theta ? Vector(theta(t) * base) : base; };
  }
  return integrate(ms.mass, ms.stiffness, load, s0, grid);
}

Trajectory reconstruct_fine(const MultiscaleBasis& ms, const Trajectory& coarse_traj) {
  Trajectory out;
  out.times = coarse_traj.times;
  for (const Vector& u : coarse_traj.u) out.u.push_back(ms.basis * u);
  for (const Vector& v : coarse_traj.v) out.v.push_back(ms.basis * v);
  return out;
}

std::vector<double> corrector_decay_profile(const LodContext& ctx, int K, int k_max) {
  if (k_max < 0) throw ArgumentError("k_max must be nonnegative");
  const Mesh& coarse = ctx.coarse();
  const Mesh& fine = ctx.fine();
  const ElementCorrectors ideal = corrector_solve(ctx, K, full_localization(coarse));

  // layer[c] = j for c in U_{j+1} \ U_j, layer[K] = -1.
  std::vector<int> layer(coarse.n_elements(), -2);
  layer[K] = -1;
  for (int j = 0; j <= k_max; ++j) {
    for (int c : element_patch(coarse, K, j + 1).elements) {
      if (layer[c] == -2) layer[c] = j;
    }
  }
  std::vector<double> energy(k_max + 1, 0.0);
  if (ctx.identical_meshes()) return energy;
  for (std::size_t l = 0; l < ideal.coarse_dofs.size(); ++l) {
    if (ideal.coarse_dofs[l] < 0) continue;
    Vector q = Vector::Zero(ctx.fine_dofs().n_dofs());
    for (std::size_t j = 0; j < ideal.fine_dofs.size(); ++j) q(ideal.fine_dofs[j]) = ideal.values[l](j);
    for (int c = 0; c < coarse.n_elements(); ++c) {
      if (layer[c] < 0) continue;
      for (int t : ctx.children(c)) {
        const Point g = fine_gradient(fine, ctx.fine_dofs(), t, q);
        energy[layer[c]] += g.dot(ctx.integrated_tensor(t) * g);
      }
    }
  }
  return energy;
}

Vector petrov_galerkin_elliptic(const LodContext& ctx, const MultiscaleBasis& ideal, const ScalarFn& F) {
  if (ctx.bc() != BoundaryCondition::dirichlet) throw ArgumentError("Petrov-Galerkin solve supports Dirichlet only");
  const SparseMatrix bt = ideal.basis.transpose();
  const SparseMatrix pg = bt * (ctx.fine_stiffness().matrix * ctx.prolongation());
  const Vector rhs = bt * assemble_load(ctx.fine(), ctx.fine_dofs(), F);
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(pg);
  if (lu.info() != Eigen::Success) throw SolverError("Petrov-Galerkin factorization failed");
  Vector x = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw SolverError("Petrov-Galerkin solve failed");
  return x;
}

}  // namespace mswave
