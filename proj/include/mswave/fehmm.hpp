#pragma once

#include "mswave/homog.hpp"

namespace mswave {

/// Micro box K_delta = x_K + delta (-1/2, 1/2)^d around a macro quadrature point.
struct SamplingDomain {
  Point center;
  double delta = 0.0;
  int n_micro = 0;

  Box box() const;
};

struct FehmmOptions {
  double delta = 0.0;  ///< 0 selects eps (periodic) or 2 eps (Dirichlet)
  int n_micro = 32;    ///< micro cells per axis
  MicroCoupling coupling = MicroCoupling::periodic;
  int quad_order = 2;  ///< micro quadrature for a^eps
};

/// Delta actually used for a field: the explicit value, or the default.
double resolved_delta(const CoefficientField& field, const FehmmOptions& opt);

/// Micro function u_K^h = slope . (x - x_K) + corrector on K_delta.
struct MicroFunction {
  Mesh mesh;
  Vector values;     ///< vertex values of u_K^h
  Vector corrector;  ///< vertex values of u_K^h - slope . (x - x_K)
};

/// Solves the constrained micro problem for one macro slope. Periodic
/// coupling requires delta / eps to be a positive integer for the periodic
/// kinds; Dirichlet coupling has no such restriction.
MicroFunction micro_solve(const CoefficientField& field, const SamplingDomain& domain, const Point& slope,
                          MicroCoupling coupling = MicroCoupling::periodic, int quad_order = 2);

/// Per macro element: the averaged micro energy tensor A_K (so that the
/// element contribution is |K| grad(phi)^T A_K grad(phi)) and the averaged
/// corrector second moment C_K used by the Q-product.
struct MicroCache {
  std::vector<Tensor> energy;
  std::vector<Tensor> second_moment;
  double max_residual = 0.0;
  double delta = 0.0;
};

/// Solves the unit-slope micro problems at every element barycenter
/// (concurrently; results depend only on the element index).
MicroCache build_micro_cache(const Mesh& macro_mesh, const CoefficientField& field, const FehmmOptions& opt);

SparseOperator assemble_B_H(const Mesh& macro_mesh, const MicroCache& cache, BoundaryCondition bc);
SparseOperator assemble_B_H(const Mesh& macro_mesh, const CoefficientField& field, const FehmmOptions& opt,
                            BoundaryCondition bc);

/// Mass matrix of the Q-product: M + sum_K |K| grad(phi)^T C_K grad(phi).
SparseOperator assemble_Q_mass(const Mesh& macro_mesh, const MicroCache& cache, BoundaryCondition bc);
SparseOperator assemble_Q_mass(const Mesh& macro_mesh, const CoefficientField& field, const FehmmOptions& opt,
                               BoundaryCondition bc);

/// FE-HMM run; longtime = true uses the Q-mass (FE-HMM-L).
Trajectory fehmm_solve(const Mesh& macro_mesh, const CoefficientField& field, BoundaryCondition bc,
                       const WaveData& data, const TimeGrid& grid, const FehmmOptions& opt, bool longtime);
Trajectory fehmm_solve(const Mesh& macro_mesh, const MicroCache& cache, BoundaryCondition bc, const WaveData& data,
                       const TimeGrid& grid, bool longtime);

}  // namespace mswave
