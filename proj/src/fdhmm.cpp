#include "mswave/fdhmm.hpp"

#include "mswave/errors.hpp"
#include "mswave/parallel.hpp"

#include <cmath>

namespace mswave {

namespace {

double bump(double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }

// int_{-1}^{1} bump; the trapezoid rule converges faster than any power for
// this integrand, so a fixed fine grid is exact to rounding.
double bump_integral() {
  constexpr int n = 20000;
  double sum = 0.0;
  for (int i = 1; i < n; ++i) sum += bump(-1.0 + 2.0 * i / n);
  return sum * 2.0 / n;
}

}  // namespace

AveragingKernel::AveragingKernel(double tau) : tau_(tau) {
  if (!(tau > 0.0)) throw ArgumentError("averaging window must be positive");
  static const double integral = bump_integral();
  scale_ = 2.0 / (tau * integral);
}

double AveragingKernel::operator()(double t) const {
  if (t <= 0.0 || t >= tau_) return 0.0;
  return scale_ * bump(2.0 * t / tau_ - 1.0);
}

double micro_wave_flux(const CoefficientField& field, const MicroWaveProblem& prob, const AveragingKernel& kernel) {
  if (field.dim() != 1) throw ArgumentError("FD-HMM is one-dimensional");
  if (!(prob.delta > 0.0) || !(prob.tau > 0.0)) throw ArgumentError("micro problem needs delta > 0 and tau > 0");
  if (prob.n_micro < 4) throw ArgumentError("micro problem needs at least 4 points");
  const int n = prob.n_micro;
  const double h = prob.delta / n;
  const double dt_max = 0.5 * h / std::sqrt(field.beta());
  if (prob.dt_micro > dt_max * (1.0 + 1e-12)) throw ArgumentError("micro time step violates the CFL bound");
  const double dt_target = prob.dt_micro > 0.0 ? prob.dt_micro : dt_max;
  const int steps = std::max(2, static_cast<int>(std::ceil(prob.tau / dt_target - 1e-9)));
  const double dt = prob.tau / steps;

  const double x0 = prob.center - 0.5 * prob.delta;
  std::vector<double> a(n);
  for (int k = 0; k < n; ++k) a[k] = field.eval_extended(make_point(x0 + (k + 0.5) * h))(0, 0);

  // w = u - slope x on the periodic grid x_k = x0 + k h; flux[k] sits at x_{k+1/2}.
  std::vector<double> w(n, 0.0), w_prev(n, 0.0), w_next(n, 0.0), flux(n, 0.0), acc(n, 0.0);
  auto compute_flux = [&](const std::vector<double>& u) {
    double mean = 0.0;
    for (int k = 0; k < n; ++k) {
      const int kp = k + 1 == n ? 0 : k + 1;
      flux[k] = a[k] * (prob.slope + (u[kp] - u[k]) / h);
      mean += flux[k];
    }
    for (int k = 0; k < n; ++k) {
      const int km = k == 0 ? n - 1 : k - 1;
      acc[k] = (flux[k] - flux[km]) / h;
    }
    return mean / n;
  };

  double weighted = 0.0;
  double weights = 0.0;
  auto accumulate = [&](double t, double mean_flux) {
    const double psi = kernel(t);
    weighted += psi * mean_flux;
    weights += psi;
  };

  accumulate(0.0, compute_flux(w_prev));
  for (int k = 0; k < n; ++k) w[k] = 0.5 * dt * dt * acc[k];
  for (int step = 1; step <= steps; ++step) {
    accumulate(step * dt, compute_flux(w));
    for (int k = 0; k < n; ++k) w_next[k] = 2.0 * w[k] - w_prev[k] + dt * dt * acc[k];
    std::swap(w_prev, w);
    std::swap(w, w_next);
  }
  if (!(weights > 0.0)) throw ArgumentError("averaging window contains no micro time steps");
  return weighted / weights;
}

FluxBasis precompute_flux_basis(const CoefficientField& field, const Mesh& macro_mesh, double delta, double tau,
                                int n_micro) {
  if (macro_mesh.dim() != 1) throw ArgumentError("FD-HMM needs a 1D macro mesh");
  const AveragingKernel kernel(tau);
  FluxBasis basis;
  const int ne = macro_mesh.n_elements();
  basis.interfaces.resize(ne);
  basis.J_unit.resize(ne);
  parallel_for(ne, [&](int e) {
    MicroWaveProblem prob;
    prob.center = macro_mesh.barycenter(e)(0);
    prob.delta = delta;
    prob.tau = tau;
    prob.n_micro = n_micro;
    prob.slope = 1.0;
    basis.interfaces[e] = prob.center;
    basis.J_unit[e] = micro_wave_flux(field, prob, kernel);
  });
  return basis;
}

SparseMatrix fdhmm_operator(const Mesh& macro_mesh, const FluxBasis& basis, BoundaryCondition bc) {
  if (static_cast<int>(basis.J_unit.size()) != macro_mesh.n_elements()) {
    throw StructureError("flux basis does not cover every macro interface");
  }
  const DofMap dofs(macro_mesh, bc);
  const double H = macro_mesh.spacing(0);
  std::vector<Triplet> upper;
  for (int e = 0; e < macro_mesh.n_elements(); ++e) {
    const double c = basis.J_unit[e] / (H * H);
    const int d0 = dofs.dof(macro_mesh.element(e)[0]);
    const int d1 = dofs.dof(macro_mesh.element(e)[1]);
    if (d0 >= 0) upper.emplace_back(d0, d0, c);
    if (d1 >= 0) upper.emplace_back(d1, d1, c);
    if (d0 >= 0 && d1 >= 0) upper.emplace_back(std::min(d0, d1), std::max(d0, d1), -c);
  }
  SparseMatrix u(dofs.n_dofs(), dofs.n_dofs());
  u.setFromTriplets(upper.begin(), upper.end());
  SparseMatrix a(dofs.n_dofs(), dofs.n_dofs());
  a = u.selfadjointView<Eigen::Upper>();
  return a;
}

Trajectory fdhmm_run(const Mesh& macro_mesh, const FluxBasis& basis, BoundaryCondition bc, const WaveData& data,
                     const TimeGrid& grid) {
  const SparseMatrix A = fdhmm_operator(macro_mesh, basis, bc);
  const DofMap dofs(macro_mesh, bc);
  const int n = dofs.n_dofs();
  SparseMatrix identity(n, n);
  identity.setIdentity();
  WaveState s0;
  s0.u = data.g1 ? dofs.interpolate(macro_mesh, data.g1) : Vector::Zero(n);
  s0.v = data.g2 ? dofs.interpolate(macro_mesh, data.g2) : Vector::Zero(n);
  LoadFn load;
  if (data.f) {
    const Vector f = dofs.interpolate(macro_mesh, data.f);
    auto theta = data.theta;
    load = [f, theta](double t) -> Vector { return theta ? Vector(theta(t) * f) : f; };
  }
  return leapfrog_run(identity, A, load, s0, grid);
}

}  // namespace mswave
