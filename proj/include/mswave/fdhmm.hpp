#pragma once

#include "mswave/fem.hpp"
#include "mswave/timeint.hpp"

namespace mswave {

/// Temporal averaging weight psi(t) = C exp(-1 / (1 - (2t/tau - 1)^2)) on
/// (0, tau), zero elsewhere, with C chosen so that int psi = 1.
class AveragingKernel {
 public:
  explicit AveragingKernel(double tau);
  double tau() const { return tau_; }
  double operator()(double t) const;

 private:
  double tau_;
  double scale_;
};

/// Periodic micro wave problem around a macro interface:
///   u_tt = (a u_x)_x on K_delta = center + delta (-1/2, 1/2),
///   u(x, 0) = slope x, u_t(x, 0) = 0, u - slope x periodic.
struct MicroWaveProblem {
  double center = 0.0;
  double delta = 0.0;
  double tau = 0.0;
  int n_micro = 64;
  double slope = 1.0;
  double dt_micro = 0.0;  ///< 0 picks 0.5 h_micro / sqrt(beta)
};

/// Space-time average of the micro flux a u_x: uniform in space over
/// K_delta, weighted by the kernel in time. Staggered second-order finite
/// differences with leapfrog in time. Throws ArgumentError if dt_micro
/// violates the micro CFL bound 0.5 h_micro / sqrt(beta).
double micro_wave_flux(const CoefficientField& field, const MicroWaveProblem& prob, const AveragingKernel& kernel);

/// Effective coefficient per macro interface (element midpoint).
struct FluxBasis {
  std::vector<double> interfaces;
  std::vector<double> J_unit;
};

FluxBasis precompute_flux_basis(const CoefficientField& field, const Mesh& macro_mesh, double delta, double tau,
                                int n_micro);

/// Macro flux scheme U_i'' = (J_{i+1/2} - J_{i-1/2}) / H + F_i with
/// J_{i+1/2} = J_unit (U_{i+1} - U_i) / H, stepped with leapfrog.
/// Initial data and sources are sampled at the nodes.
Trajectory fdhmm_run(const Mesh& macro_mesh, const FluxBasis& basis, BoundaryCondition bc, const WaveData& data,
                     const TimeGrid& grid);

/// The symmetric matrix A of the macro scheme U'' + A U = F.
SparseMatrix fdhmm_operator(const Mesh& macro_mesh, const FluxBasis& basis, BoundaryCondition bc);

}  // namespace mswave
