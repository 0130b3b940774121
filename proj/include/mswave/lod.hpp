#pragma once

#include "mswave/fem.hpp"
#include "mswave/timeint.hpp"

#include <memory>

namespace mswave {

/// Nested coarse/fine pair with the fine operators shared by all LOD steps.
class LodContext {
 public:
  LodContext(const CoefficientField& field, Mesh coarse, Mesh fine, BoundaryCondition bc, int quad_order = 2);

  const Mesh& coarse() const { return coarse_; }
  const Mesh& fine() const { return fine_; }
  BoundaryCondition bc() const { return bc_; }
  const DofMap& coarse_dofs() const { return coarse_dofs_; }
  const DofMap& fine_dofs() const { return stiffness_.dofs; }
  const SparseOperator& fine_stiffness() const { return stiffness_; }
  const SparseOperator& fine_mass() const { return mass_; }
  const SparseOperator& coarse_mass() const { return coarse_mass_; }
  /// Embedding V_H -> V_h (fine dofs x coarse dofs).
  const SparseMatrix& prolongation() const { return P_; }
  /// Transpose of the constraint matrix P^T M_h, row-major so that row s
  /// lists the coarse basis functions tested against fine dof s.
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& constraint_transpose() const { return constraint_t_; }
  /// |t| times the quadrature mean of a^eps on fine element t.
  const Tensor& integrated_tensor(int t) const { return acc_[t]; }
  const std::vector<int>& children(int K) const { return children_[K]; }
  bool identical_meshes() const { return fine_.cells_per_axis() == coarse_.cells_per_axis(); }

  /// Coarse L2 projection P_H of a fine dof vector.
  Vector project(const Vector& fine_vector) const;

 private:
  Mesh coarse_;
  Mesh fine_;
  BoundaryCondition bc_;
  DofMap coarse_dofs_;
  SparseOperator stiffness_;
  SparseOperator mass_;
  SparseOperator coarse_mass_;
  SparseMatrix P_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> constraint_t_;  // (P^T M_h)^T, rows = fine dofs
  std::shared_ptr<SpdSolver> coarse_mass_solver_;
  std::vector<Tensor> acc_;
  std::vector<std::vector<int>> children_;
};

/// Local correctors Q^K(Phi_z) of one coarse element for its coarse basis functions.
struct ElementCorrectors {
  int element = 0;
  ElementPatch patch;
  std::vector<int> fine_dofs;    ///< free fine dofs of the patch (global numbering)
  std::vector<int> coarse_dofs;  ///< coarse dof per local vertex of K (-1 if eliminated)
  std::vector<Vector> values;    ///< per local vertex, values on fine_dofs (empty if eliminated)
};

/// Patch saddle-point solve: minimize the a^eps energy over fine functions
/// supported in U_k(K) with vanishing coarse L2 projection, right-hand side
/// -int_K a^eps grad(Phi_z) . grad(w).
ElementCorrectors corrector_solve(const LodContext& ctx, int K, int k);

/// Summed corrector Q_{h,k}(Phi_z) = sum_K Q^K(Phi_z) as columns (fine dofs x coarse dofs).
SparseMatrix assemble_corrector_matrix(const LodContext& ctx, const std::vector<ElementCorrectors>& local);

struct MultiscaleBasis {
  int k = 0;
  SparseMatrix basis;      ///< P + Q_{h,k}: fine dofs x coarse dofs
  SparseMatrix corrector;  ///< Q_{h,k}
  SparseMatrix stiffness;  ///< B^T A_h B
  SparseMatrix mass;       ///< B^T M_h B
};

/// Correctors for every coarse element (concurrently), summed into the multiscale basis.
MultiscaleBasis build_ms_space(const LodContext& ctx, int k);

/// Default localization k = ceil(log2(1/H)) with H the coarse cell width relative to the domain.
int default_localization(const Mesh& coarse);

/// Number of layers that makes every patch the whole domain.
int full_localization(const Mesh& coarse);

enum class LodInitMode { zero, l2_proj, wellprepared };
std::string to_string(LodInitMode m);
LodInitMode lod_init_mode_from_string(const std::string& name);

/// Runs the wave equation in V_H^ms. The returned trajectory holds coarse
/// coefficients; ms.basis maps them to fine dofs. In wellprepared mode
/// g1_eps (fine dofs) replaces the interpolant of data.g1.
Trajectory lod_wave_solve(const LodContext& ctx, const MultiscaleBasis& ms, const WaveData& data,
                          const TimeGrid& grid, LodInitMode init_mode = LodInitMode::l2_proj,
                          const Vector* g1_eps = nullptr);

/// Fine nodal values (dofs) of a coarse-coefficient trajectory.
Trajectory reconstruct_fine(const MultiscaleBasis& ms, const Trajectory& coarse_traj);

/// a^eps energies of the ideal corrector of K restricted to the layers
/// U_{j+1}(K) \ U_j(K), j = 0..k_max, summed over the basis functions of K.
std::vector<double> corrector_decay_profile(const LodContext& ctx, int K, int k_max);

/// P_H(z) from the Petrov-Galerkin problem with ideal correctors (Dirichlet only):
/// int a grad(u_H) . grad((1 + Q) v_H) = int F (1 + Q) v_H.
Vector petrov_galerkin_elliptic(const LodContext& ctx, const MultiscaleBasis& ideal, const ScalarFn& F);

}  // namespace mswave
