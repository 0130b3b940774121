#pragma once

#include "mswave/fem.hpp"

#include <functional>
#include <string>

namespace mswave {

enum class Scheme { leapfrog, newmark };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

struct TimeGrid {
  double dt = 0.0;
  int n_steps = 0;
  Scheme scheme = Scheme::leapfrog;
  int save_every = 1;  ///< snapshot stride; the final step is always stored

  /// Smallest uniform grid on [0, T] with dt <= dt_max.
  static TimeGrid covering(double T, double dt_max, Scheme scheme = Scheme::leapfrog, int save_every = 1);
  double final_time() const { return dt * n_steps; }
};

struct WaveState {
  Vector u;
  Vector v;
  double t = 0.0;
};

/// Load vector b(t) in the dofs of the system; an empty function means b = 0.
using LoadFn = std::function<Vector(double t)>;

double cfl_timestep(double h, double beta, double safety);
double cfl_timestep(const Mesh& mesh, double beta, double safety);

/// Explicit central differences with the Taylor starter
/// u1 = u0 + dt v0 + dt^2/2 M^{-1}(b(0) - A u0). Velocities are central
/// differences, which costs one extra step at the end. lumped = true replaces
/// M by its row sums.
Trajectory leapfrog_run(const SparseMatrix& M, const SparseMatrix& A, const LoadFn& b, const WaveState& state0,
                        const TimeGrid& grid, bool lumped = false);

/// Newmark family; beta_nm = 1/4, gamma_nm = 1/2 is the unconditionally
/// stable average-acceleration rule.
Trajectory newmark_run(const SparseMatrix& M, const SparseMatrix& A, const LoadFn& b, const WaveState& state0,
                       const TimeGrid& grid, double beta_nm = 0.25, double gamma_nm = 0.5);

/// Dispatches on grid.scheme.
Trajectory integrate(const SparseMatrix& M, const SparseMatrix& A, const LoadFn& b, const WaveState& state0,
                     const TimeGrid& grid);

/// Leapfrog invariant E = 1/2 |(u1 - u0)/dt|_M^2 + 1/2 u1^T A u0.
double leapfrog_energy(const SparseMatrix& M, const SparseMatrix& A, const Vector& u0, const Vector& u1, double dt);

/// Data of the wave problem: source F(x, t) = f(x) theta(t), initial
/// displacement g1 and velocity g2. Empty functions mean zero; an empty
/// theta means theta = 1.
struct WaveData {
  ScalarFn f;
  std::function<double(double)> theta;
  ScalarFn g1;
  GradientFn g1_grad;
  ScalarFn g2;
};

/// b(t) = theta(t) (f, phi_i).
LoadFn make_load(const Mesh& mesh, const DofMap& dofs, const WaveData& data, int quad_order = 3);

/// Discrete initial state: g1 by Ritz projection when a stiffness, its
/// coefficient and the g1 gradient are given (mean matched to the interpolant when the stiffness
/// is semidefinite), else nodal interpolation; g2 by L2 projection.
WaveState initial_state(const Mesh& mesh, const SparseOperator& mass, const WaveData& data,
                        const SparseOperator* stiffness = nullptr, const TensorFn& coeff = {});
/// Same with an element-wise coefficient integrated by the given rule, for
/// stiffness matrices that were assembled that way (FE-HMM).
WaveState initial_state(const Mesh& mesh, const SparseOperator& mass, const WaveData& data,
                        const SparseOperator& stiffness, const ElementTensorFn& coeff, int quad_order);

}  // namespace mswave
