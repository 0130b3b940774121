#pragma once

#include "mswave/fem.hpp"
#include "mswave/timeint.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace mswave {

enum class MicroCoupling { periodic, dirichlet };

std::string to_string(MicroCoupling c);
MicroCoupling micro_coupling_from_string(const std::string& name);

/// Correctors chi_j on a box B for the directions e_j:
///   int_B a (grad chi_j + e_j) . grad w = 0  for all test functions w,
/// with chi_j periodic and mean zero (periodic coupling, enforced by a
/// Lagrange multiplier) or chi_j = 0 on the boundary (Dirichlet coupling).
struct CorrectorSolution {
  Mesh mesh;
  DofMap dofs;
  MicroCoupling coupling = MicroCoupling::periodic;
  std::vector<Vector> chi;  ///< one dof vector per direction
  /// (1/|B|) int (e_i + grad chi_i)^T a (e_j + grad chi_j); symmetric by construction.
  Tensor energy;
  /// (1/|B|) int chi_i chi_j.
  Tensor second_moment;
  /// Largest relative residual of the corrector equations.
  double residual = 0.0;
};

CorrectorSolution solve_correctors(const Box& box, int n_per_axis, const TensorFn& a, MicroCoupling coupling,
                                   int quad_order = 2);

struct CellSolution {
  CorrectorSolution correctors;
  Point slow_point;
  int dim() const { return correctors.mesh.dim(); }
  const std::vector<Vector>& chi() const { return correctors.chi; }
};

struct EffectiveTensors {
  Tensor a0;
  double b0 = 0.0;
};

/// Periodic cell problems on Y = (0,1)^d for a(slow_point, .). The sample
/// kind has no unit cell and is rejected with ArgumentError.
CellSolution solve_cell_problems(const CoefficientField& field, const Point& slow_point, int N_cell,
                                 int quad_order = 2);

struct HomogenizedTensorReport {
  Tensor a0;
  double asymmetry = 0.0;
};

/// a0_ij = int_Y e_i^T a (grad chi_j + e_j), symmetrized. Throws
/// ConsistencyError if the asymmetry exceeds 1e-8 or the eigenvalues leave
/// [alpha, beta] by more than a relative 1e-8.
HomogenizedTensorReport homogenized_tensor_report(const CellSolution& cell, const CoefficientField& field,
                                                  int quad_order = 2);
Tensor homogenized_tensor(const CellSolution& cell, const CoefficientField& field);

/// b0 = int_Y chi^2 (1D).
double dispersive_coefficient_1d(const CellSolution& cell);

/// a0 and (in 1D) b0 at a slow point.
EffectiveTensors effective_tensors(const CoefficientField& field, const Point& slow_point, int N_cell);

/// x -> a0(x). For fields without slow dependence a0 is computed once. For
/// locally periodic fields, n_sample_points > 0 samples a0 on a uniform grid
/// (per axis) and interpolates multilinearly; n_sample_points = 0 solves the
/// cell problems at every requested point, cached by point.
TensorFn homogenized_coefficient(const CoefficientField& field, int N_cell, int n_sample_points = 0);

/// Standard FEM with coefficient a0 plus the integrator selected by grid.
Trajectory solve_homogenized_wave(const TensorFn& a0, const Mesh& mesh, BoundaryCondition bc,
                                  const WaveData& data, const TimeGrid& grid, int quad_order = 2);
Trajectory solve_homogenized_wave(const Tensor& a0, const Mesh& mesh, BoundaryCondition bc, const WaveData& data,
                                  const TimeGrid& grid);

/// (M + eps^2 b0 A1) u'' + a0 A1 u = M F on a periodic 1D mesh, where A1
/// is the a = 1 stiffness. Integrated with grid.scheme.
Trajectory solve_boussinesq_1d(double a0, double b0, double eps, const Mesh& mesh, const WaveData& data,
                               const TimeGrid& grid);

/// Energy 1/2 v^T (M + eps^2 b0 A1) v + a0/2 u^T A1 u of the Boussinesq system.
double boussinesq_energy(double a0, double b0, double eps, const SparseMatrix& mass, const SparseMatrix& laplacian,
                         const Vector& u, const Vector& v);

/// g1_eps with int a_eps grad g1_eps . grad v = int a0 grad g1 . grad v for
/// all fine test functions; g1 is a fine dof vector.
Vector wellprepared_initial(const CoefficientField& field, const TensorFn& a0, const Vector& g1,
                            const Mesh& fine_mesh, BoundaryCondition bc = BoundaryCondition::dirichlet);

/// Solution of (a G')' = 0 on the mesh interval with G = x at both ends,
/// returned as vertex values.
Vector harmonic_coordinate_1d(const CoefficientField& field, const Mesh& fine_mesh);

}  // namespace mswave
