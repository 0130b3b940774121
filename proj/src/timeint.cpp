#include "mswave/timeint.hpp"

#include "mswave/errors.hpp"

#include <cmath>

namespace mswave {

std::string to_string(Scheme s) { return s == Scheme::leapfrog ? "leapfrog" : "newmark"; }

Scheme scheme_from_string(const std::string& name) {
  if (name == "leapfrog") return Scheme::leapfrog;
  if (name == "newmark" || name == "newmark_implicit") return Scheme::newmark;
  throw ArgumentError("unknown time scheme '" + name + "'");
}

TimeGrid TimeGrid::covering(double T, double dt_max, Scheme scheme, int save_every) {
  if (!(T > 0.0) || !(dt_max > 0.0)) throw ArgumentError("T and dt must be positive");
  TimeGrid g;
  g.n_steps = std::max(1, static_cast<int>(std::ceil(T / dt_max - 1e-9)));
  g.dt = T / g.n_steps;
  g.scheme = scheme;
  g.save_every = std::max(1, save_every);
  return g;
}

double cfl_timestep(double h, double beta, double safety) {
  if (!(safety > 0.0 && safety <= 1.0)) throw ArgumentError("CFL safety factor must lie in (0, 1]");
  if (!(h > 0.0) || !(beta > 0.0)) throw ArgumentError("h and beta must be positive");
  return safety * h / std::sqrt(beta);
}

double cfl_timestep(const Mesh& mesh, double beta, double safety) { return cfl_timestep(mesh.h(), beta, safety); }

namespace {

void check_inputs(const SparseMatrix& M, const SparseMatrix& A, const WaveState& s, const TimeGrid& grid) {
  const auto n = M.rows();
  if (M.cols() != n || A.rows() != n || A.cols() != n) throw StructureError("operator sizes differ");
  if (s.u.size() != n || s.v.size() != n) throw StructureError("initial state does not match the operators");
  if (!(grid.dt > 0.0) || grid.n_steps < 0) throw ArgumentError("time grid needs dt > 0 and n_steps >= 0");
}

Vector load_at(const LoadFn& b, double t, Eigen::Index n) {
  if (!b) return Vector::Zero(n);
  Vector v = b(t);
  if (v.size() != n) throw StructureError("load vector has the wrong length");
  return v;
}

bool due(const TimeGrid& grid, int n) { return n % std::max(1, grid.save_every) == 0 || n == grid.n_steps; }

}  // namespace

Trajectory leapfrog_run(const SparseMatrix& M, const SparseMatrix& A, const LoadFn& b, const WaveState& s0,
                        const TimeGrid& grid, bool lumped) {
  check_inputs(M, A, s0, grid);
  const auto n = M.rows();
  const double dt = grid.dt;

  SpdSolver solver;
  Vector inv_lumped;
  if (lumped) {
    inv_lumped = Vector::Zero(n);
    for (int k = 0; k < M.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(M, k); it; ++it) inv_lumped(it.row()) += it.value();
    }
    if (n > 0 && !(inv_lumped.minCoeff() > 0.0)) throw SolverError("lumped mass is not positive");
    inv_lumped = inv_lumped.cwiseInverse();
  } else {
    solver.factor(M);
  }
  auto minv = [&](const Vector& r) -> Vector { return lumped ? Vector(inv_lumped.cwiseProduct(r)) : solver.solve(r); };

  Trajectory traj;
  traj.times.push_back(s0.t);
  traj.u.push_back(s0.u);
  traj.v.push_back(s0.v);
  if (grid.n_steps == 0) return traj;

  Vector u_prev = s0.u;
  Vector u = s0.u + dt * s0.v + (0.5 * dt * dt) * minv(load_at(b, s0.t, n) - A * s0.u);
  for (int step = 1; step <= grid.n_steps; ++step) {
    const double t = s0.t + step * dt;
    Vector u_next = 2.0 * u - u_prev + (dt * dt) * minv(load_at(b, t, n) - A * u);
    if (due(grid, step)) {
      traj.times.push_back(t);
      traj.u.push_back(u);
      traj.v.push_back((u_next - u_prev) / (2.0 * dt));
    }
    u_prev = std::move(u);
    u = std::move(u_next);
  }
  return traj;
}

Trajectory newmark_run(const SparseMatrix& M, const SparseMatrix& A, const LoadFn& b, const WaveState& s0,
                       const TimeGrid& grid, double beta_nm, double gamma_nm) {
  check_inputs(M, A, s0, grid);
  if (!(beta_nm > 0.0)) throw ArgumentError("Newmark beta must be positive for the implicit form");
  const auto n = M.rows();
  const double dt = grid.dt;
  SpdSolver mass_solver(M);
  SpdSolver eff_solver(SparseMatrix(M + (beta_nm * dt * dt) * A));

  Trajectory traj;
  traj.times.push_back(s0.t);
  traj.u.push_back(s0.u);
  traj.v.push_back(s0.v);

  Vector u = s0.u;
  Vector v = s0.v;
  Vector a = mass_solver.solve(load_at(b, s0.t, n) - A * u);
  for (int step = 1; step <= grid.n_steps; ++step) {
    const double t = s0.t + step * dt;
    const Vector bn = load_at(b, t, n);
    const Vector pred = u + dt * v + (dt * dt * (0.5 - beta_nm)) * a;
    u = eff_solver.solve(M * pred + (beta_nm * dt * dt) * bn);
    // Equivalent to (u - pred) / (beta dt^2) but without the cancellation.
    Vector a_new = mass_solver.solve(bn - A * u);
    v += dt * ((1.0 - gamma_nm) * a + gamma_nm * a_new);
    a = std::move(a_new);
    if (due(grid, step)) {
      traj.times.push_back(t);
      traj.u.push_back(u);
      traj.v.push_back(v);
    }
  }
  return traj;
}

Trajectory integrate(const SparseMatrix& M, const SparseMatrix& A, const LoadFn& b, const WaveState& s0,
                     const TimeGrid& grid) {
  if (grid.scheme == Scheme::leapfrog) return leapfrog_run(M, A, b, s0, grid);
  return newmark_run(M, A, b, s0, grid);
}

double leapfrog_energy(const SparseMatrix& M, const SparseMatrix& A, const Vector& u0, const Vector& u1,
                       double dt) {
  const Vector d = (u1 - u0) / dt;
  return 0.5 * d.dot(M * d) + 0.5 * u1.dot(A * u0);
}

LoadFn make_load(const Mesh& mesh, const DofMap& dofs, const WaveData& data, int quad_order) {
  if (!data.f) return {};
  const Vector base = assemble_load(mesh, dofs, data.f, quad_order);
  auto theta = data.theta;
  return [base, theta](double t) -> Vector { return theta ? Vector(theta(t) * base) : base; };
}

WaveState initial_state(const Mesh& mesh, const SparseOperator& mass, const WaveData& data,
                        const SparseOperator& stiffness, const ElementTensorFn& coeff, int quad_order) {
  const DofMap& dofs = mass.dofs;
  const int n = dofs.n_dofs();
  WaveState s;
  s.u = Vector::Zero(n);
  s.v = Vector::Zero(n);
  if (data.g1) {
    const Vector interp = dofs.interpolate(mesh, data.g1);
    if (coeff && data.g1_grad) {
      const Vector rhs = assemble_flux_load(
          mesh, dofs, [&](int e, const Point& x) -> Point { return coeff(e, x) * data.g1_grad(x); }, quad_order);
      s.u = solve_direct(stiffness, rhs);
      if (stiffness.dofs.semidefinite()) {
        const Vector ones = Vector::Ones(n);
        const Vector m1 = mass.matrix * ones;
        s.u += (m1.dot(interp - s.u) / m1.sum()) * ones;
      }
    } else {
      s.u = interp;
    }
  }
  if (data.g2) {
    SpdSolver solver(mass.matrix);
    s.v = solver.solve(assemble_load(mesh, dofs, data.g2));
  }
  return s;
}

WaveState initial_state(const Mesh& mesh, const SparseOperator& mass, const WaveData& data,
                        const SparseOperator* stiffness, const TensorFn& coeff) {
  if (stiffness && coeff) {
    return initial_state(mesh, mass, data, *stiffness, [&coeff](int, const Point& x) { return coeff(x); }, 3);
  }
  return initial_state(mesh, mass, data, mass, ElementTensorFn{}, 3);
}

}  // namespace mswave
