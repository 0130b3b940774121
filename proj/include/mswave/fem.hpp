#pragma once

#include "mswave/coeff_field.hpp"
#include "mswave/mesh.hpp"

#include <Eigen/SparseCholesky>

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace mswave {

enum class BoundaryCondition { dirichlet, periodic, none };

std::string to_string(BoundaryCondition bc);
BoundaryCondition boundary_condition_from_string(const std::string& name);

/// Numbering of the free degrees of freedom of a P1 space. Dirichlet
/// vertices are eliminated; periodic copies share their master's dof.
class DofMap {
 public:
  DofMap() = default;
  DofMap(const Mesh& mesh, BoundaryCondition bc);

  BoundaryCondition bc() const { return bc_; }
  int n_dofs() const { return static_cast<int>(dof_to_vertex_.size()); }
  int n_vertices() const { return static_cast<int>(vertex_to_dof_.size()); }
  /// -1 for eliminated vertices.
  int dof(int vertex) const { return vertex_to_dof_[vertex]; }
  int vertex(int dof) const { return dof_to_vertex_[dof]; }
  /// Constants lie in the kernel of the stiffness matrix.
  bool semidefinite() const { return bc_ != BoundaryCondition::dirichlet; }

  /// Dof vector to vertex values (eliminated vertices get 0).
  Vector expand(const Vector& dofs) const;
  /// Vertex values to dof vector (reads each dof's representative vertex).
  Vector restrict(const Vector& vertex_values) const;
  /// Nodal interpolation of g at the dof vertices.
  Vector interpolate(const Mesh& mesh, const ScalarFn& g) const;

 private:
  BoundaryCondition bc_ = BoundaryCondition::dirichlet;
  std::vector<int> vertex_to_dof_;
  std::vector<int> dof_to_vertex_;
};

/// Assembled symmetric operator on the free dofs of a mesh.
struct SparseOperator {
  SparseMatrix matrix;
  DofMap dofs;

  int size() const { return static_cast<int>(matrix.rows()); }
};

/// Quadrature on the reference simplex: barycentric nodes with weights summing to 1.
struct QuadratureRule {
  std::vector<std::array<double, 3>> nodes;
  std::vector<double> weights;
};

/// Order 1: barycenter. Order 2: 2-point Gauss (1D) or a 3-point interior
/// rule exact for quadratics (2D). Order 3: 3-point Gauss (1D) or a 6-point
/// degree-4 rule (2D).
QuadratureRule quadrature_rule(int dim, int order);

/// Coefficient tensor at a quadrature point of an element.
using ElementTensorFn = std::function<Tensor(int element, const Point& x)>;

SparseOperator assemble_stiffness(const Mesh& mesh, const CoefficientField& field, int quad_order,
                                  BoundaryCondition bc);
/// Stiffness for an arbitrary element-wise tensor map.
SparseOperator assemble_stiffness(const Mesh& mesh, const ElementTensorFn& tensor, int quad_order,
                                  BoundaryCondition bc);
SparseOperator assemble_stiffness(const Mesh& mesh, const TensorFn& coeff, int quad_order, BoundaryCondition bc);
/// Stiffness with a = 1.
SparseOperator assemble_laplacian(const Mesh& mesh, BoundaryCondition bc);
/// Exact consistent P1 mass matrix.
SparseOperator assemble_mass(const Mesh& mesh, BoundaryCondition bc);
/// Row-sum lumped mass.
Vector lumped_mass(const SparseOperator& mass);

/// Load vector (f, phi_i).
Vector assemble_load(const Mesh& mesh, const DofMap& dofs, const ScalarFn& f, int quad_order = 3);
/// Vector (q, grad phi_i) for a vector field q given per element and point.
Vector assemble_flux_load(const Mesh& mesh, const DofMap& dofs,
                          const std::function<Point(int element, const Point& x)>& q, int quad_order = 3);

/// Local stiffness matrix sum_q w_q |K| grad(phi_j)^T A grad(phi_i) for one element.
Eigen::Matrix3d element_stiffness(const Mesh& mesh, int element, const ElementTensorFn& tensor,
                                  const QuadratureRule& rule);

/// Matrix of the embedding V_H -> V_h in free dofs (rows fine, columns coarse).
SparseMatrix prolongation(const Mesh& coarse, const DofMap& coarse_dofs, const Mesh& fine,
                          const DofMap& fine_dofs);

/// Direct sparse Cholesky (LDL^T) factorization of an SPD operator.
class SpdSolver {
 public:
  SpdSolver() = default;
  explicit SpdSolver(const SparseMatrix& a);
  void factor(const SparseMatrix& a);
  Vector solve(const Vector& b) const;
  int size() const { return n_; }

 private:
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;
  int n_ = 0;
};

struct CgResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients. With semidefinite = true the
/// constant component of b is removed and the returned solution has mean 0.
/// Throws SolverError after 10 n iterations.
CgResult conjugate_gradient(const SparseMatrix& a, const Vector& b, double tol, bool semidefinite);
Vector solve_spd(const SparseOperator& a, const Vector& b, double tol = 1e-10);
/// Sparse LDL^T solve. A semidefinite (periodic) operator is solved with its
/// first dof pinned and the result shifted to mean zero; b must have zero sum.
Vector solve_direct(const SparseOperator& a, const Vector& b);

/// Coarse L2 projection P_H of a fine dof vector: M_H x = P^T M_h v.
Vector l2_project(const Mesh& coarse, const Mesh& fine, BoundaryCondition bc, const Vector& fine_dofs);

/// Ritz projection onto V_h: (a grad x, grad phi_i) = rhs_i, with rhs given.
/// For semidefinite operators the result has mean zero.
Vector ritz_project_functional(const SparseOperator& stiffness, const Vector& rhs, double tol = 1e-10);
/// Ritz projection of a discrete target (returns the target up to solver tolerance).
Vector ritz_project(const SparseOperator& stiffness, const Vector& target, double tol = 1e-10);
/// Ritz projection of a function given through its gradient, for the
/// coefficient the stiffness was assembled with.
Vector ritz_project(const TensorFn& coeff, const Mesh& mesh, const SparseOperator& stiffness,
                    const GradientFn& grad, int quad_order = 3, double tol = 1e-10);
Vector ritz_project(const CoefficientField& field, const Mesh& mesh, const SparseOperator& stiffness,
                    const GradientFn& grad, int quad_order = 3, double tol = 1e-10);

/// Sampled solution of a second-order-in-time problem (dof vectors).
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> u;
  std::vector<Vector> v;

  int n_snapshots() const { return static_cast<int>(times.size()); }
  int n_dofs() const { return u.empty() ? 0 : static_cast<int>(u.front().size()); }
};

/// Text snapshot format: "mswave-traj v1", then "dim N_dofs N_steps dt", then
/// one line of u values per stored snapshot (N_steps lines, spacing dt).
void write_trajectory(std::ostream& out, const Trajectory& traj, int dim);
void write_trajectory(const std::string& path, const Trajectory& traj, int dim);
Trajectory read_trajectory(std::istream& in, int* dim = nullptr);
Trajectory read_trajectory(const std::string& path, int* dim = nullptr);

struct ErrorReport {
  double linf_l2 = 0.0;
  double linf_h1 = 0.0;
  double l2_l2 = 0.0;
  std::vector<double> series;  ///< L2 error at each reference time
};

/// Errors of approx against ref on the fine space. to_fine maps approx dofs
/// to fine dofs; approx is interpolated linearly in time at the reference
/// times. H1 is the full norm with the a = 1 seminorm.
ErrorReport error_norms(const Trajectory& ref, const Trajectory& approx, const SparseMatrix& to_fine,
                        const SparseMatrix& fine_mass, const SparseMatrix& fine_laplacian);
/// Mesh-level convenience: builds the prolongation and fine operators.
ErrorReport error_norms(const Trajectory& ref, const Mesh& fine, const Trajectory& approx, const Mesh& coarse,
                        BoundaryCondition bc);

/// Linear interpolation of the u snapshots at time t.
Vector interpolate_in_time(const Trajectory& traj, double t);

double mass_norm(const SparseMatrix& m, const Vector& v);

}  // namespace mswave
