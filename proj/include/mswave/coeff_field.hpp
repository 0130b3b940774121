#pragma once

#include "mswave/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mswave {

enum class CoeffKind { constant, periodic_1d, locally_periodic, laminate_2d, piecewise_constant_sample };

std::string to_string(CoeffKind kind);
CoeffKind coeff_kind_from_string(const std::string& name);

/// A(x, y): slow variable x in the domain, fast variable y in the unit cell
/// Y = (0,1)^d. Must be Y-periodic in y.
using CellFunction = std::function<Tensor(const Point& x, const Point& y)>;

/// Fractional part with the floor convention, so negative inputs wrap into [0, 1).
double wrap_unit(double y);

/// Multiscale coefficient a^eps on a box domain with declared spectral bounds.
///
/// Periodic kinds (periodic_1d, locally_periodic, laminate_2d, constant) are
/// evaluated as a^eps(x) = A(x, x/eps mod 1). The sample kind stores one value
/// per cell of a uniform micro-grid over the domain and uses nearest-cell lookup.
class CoefficientField {
 public:
  static CoefficientField constant(int dim, double c, Box domain);
  static CoefficientField periodic_1d(std::function<double(double)> cell, double eps, double alpha,
                                      double beta, Box domain);
  /// a(y) = 1 / (c0 + c1 sin(2 pi y)); bounds are derived from c0, c1.
  static CoefficientField periodic_1d_sine(double c0, double c1, double eps, Box domain);
  static CoefficientField locally_periodic(int dim, CellFunction cell, double eps, double alpha,
                                           double beta, Box domain);
  /// a(y) = (1 + slope x_1) / (c0 + c1 sin(2 pi y_1)) * I, the stock locally periodic field.
  static CoefficientField locally_periodic_sine(int dim, double c0, double c1, double slope, double eps,
                                                Box domain);
  /// Layers normal to y_1: a_low * I for y_1 < fraction, a_high * I otherwise.
  static CoefficientField laminate_2d(double a_low, double a_high, double fraction, double eps, Box domain);
  static CoefficientField piecewise_constant_sample(int dim, int cells_per_axis, std::vector<double> values,
                                                    Box domain);
  /// Sample field with values drawn uniformly in [lo, hi] from a seeded generator.
  static CoefficientField random_sample(int dim, int cells_per_axis, double lo, double hi,
                                        std::uint64_t seed, Box domain);

  CoeffKind kind() const { return kind_; }
  int dim() const { return domain_.dim(); }
  double eps() const { return eps_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  const Box& domain() const { return domain_; }

  /// True for kinds with a unit cell (everything except the sample kind).
  bool has_unit_cell() const { return kind_ != CoeffKind::piecewise_constant_sample; }

  /// a^eps(x); throws DomainError if x is outside the closure of the domain.
  Tensor eval(const Point& x) const;
  /// Same formula without the domain check. Micro sampling domains may
  /// protrude from the macro domain; the slow variable is clamped into it.
  Tensor eval_extended(const Point& x) const;
  /// A(x_slow, y) with y taken mod 1.
  Tensor cell_eval(const Point& x_slow, const Point& y) const;

  /// Field c * a^eps with bounds scaled accordingly.
  CoefficientField scaled(double c) const;

 private:
  CoefficientField(CoeffKind kind, Box domain, double eps, double alpha, double beta);

  Point clamp_to_domain(const Point& x) const;
  Tensor sample_lookup(const Point& x) const;

  CoeffKind kind_;
  Box domain_;
  double eps_;
  double alpha_;
  double beta_;
  double scale_ = 1.0;
  CellFunction cell_;
  int cells_per_axis_ = 0;
  std::vector<double> samples_;
};

/// Pointwise evaluation with domain check.
Tensor eval_coeff(const CoefficientField& field, const Point& x);

struct SpectralReport {
  double min_eig = 0.0;
  double max_eig = 0.0;
  bool pass = false;
};

/// Extreme eigenvalues of a(x) over a deterministic grid of roughly
/// n_samples points spanning the closed domain. Passes iff they lie within
/// [alpha (1 - 1e-12), beta (1 + 1e-12)].
SpectralReport verify_spectral_bounds(const CoefficientField& field, int n_samples);

/// Eigenvalues (ascending) of a symmetric 1x1 or 2x2 tensor.
std::pair<double, double> symmetric_eigenvalue_range(const Tensor& a);

}  // namespace mswave
