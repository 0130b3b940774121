#include "mswave/coeff_field.hpp"

#include "mswave/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace mswave {

std::string to_string(CoeffKind kind) {
  switch (kind) {
    case CoeffKind::constant: return "constant";
    case CoeffKind::periodic_1d: return "periodic_1d";
    case CoeffKind::locally_periodic: return "locally_periodic";
    case CoeffKind::laminate_2d: return "laminate_2d";
    case CoeffKind::piecewise_constant_sample: return "piecewise_constant_sample";
  }
  return "unknown";
}

CoeffKind coeff_kind_from_string(const std::string& name) {
  for (auto kind : {CoeffKind::constant, CoeffKind::periodic_1d, CoeffKind::locally_periodic,
                    CoeffKind::laminate_2d, CoeffKind::piecewise_constant_sample}) {
    if (to_string(kind) == name) return kind;
  }
  throw ArgumentError("unknown coefficient kind '" + name + "'");
}

double wrap_unit(double y) {
  double f = y - std::floor(y);
  // y slightly below an integer can round up to exactly 1.
  if (f >= 1.0) f = 0.0;
  return f;
}

CoefficientField::CoefficientField(CoeffKind kind, Box domain, double eps, double alpha, double beta)
    : kind_(kind), domain_(std::move(domain)), eps_(eps), alpha_(alpha), beta_(beta) {
  if (!(alpha_ > 0.0) || !(alpha_ <= beta_)) {
    throw ArgumentError("spectral bounds must satisfy 0 < alpha <= beta");
  }
  if (!(eps_ > 0.0)) throw ArgumentError("eps must be positive");
  if (domain_.dim() < 1 || domain_.dim() > 2) throw ArgumentError("only 1D and 2D domains are supported");
}

CoefficientField CoefficientField::constant(int dim, double c, Box domain) {
  if (domain.dim() != dim) throw ArgumentError("domain dimension mismatch");
  if (!(c > 0.0)) throw ArgumentError("constant coefficient must be positive");
  CoefficientField f(CoeffKind::constant, std::move(domain), 1.0, c, c);
  f.cell_ = [c, dim](const Point&, const Point&) -> Tensor { return c * Tensor::Identity(dim, dim); };
  return f;
}

CoefficientField CoefficientField::periodic_1d(std::function<double(double)> cell, double eps, double alpha,
                                               double beta, Box domain) {
  if (domain.dim() != 1) throw ArgumentError("periodic_1d requires a 1D domain");
  CoefficientField f(CoeffKind::periodic_1d, std::move(domain), eps, alpha, beta);
  f.cell_ = [cell = std::move(cell)](const Point&, const Point& y) -> Tensor {
    Tensor t(1, 1);
    t(0, 0) = cell(y(0));
    return t;
  };
  return f;
}

CoefficientField CoefficientField::periodic_1d_sine(double c0, double c1, double eps, Box domain) {
  if (!(c0 > std::abs(c1))) throw ArgumentError("periodic_1d_sine requires c0 > |c1|");
  auto cell = [c0, c1](double y) { return 1.0 / (c0 + c1 * std::sin(2.0 * std::numbers::pi * y)); };
  return periodic_1d(cell, eps, 1.0 / (c0 + std::abs(c1)), 1.0 / (c0 - std::abs(c1)), std::move(domain));
}

CoefficientField CoefficientField::locally_periodic(int dim, CellFunction cell, double eps, double alpha,
                                                    double beta, Box domain) {
  if (domain.dim() != dim) throw ArgumentError("domain dimension mismatch");
  CoefficientField f(CoeffKind::locally_periodic, std::move(domain), eps, alpha, beta);
  f.cell_ = std::move(cell);
  return f;
}

CoefficientField CoefficientField::locally_periodic_sine(int dim, double c0, double c1, double slope,
                                                         double eps, Box domain) {
  if (!(c0 > std::abs(c1))) throw ArgumentError("locally_periodic_sine requires c0 > |c1|");
  const double s_lo = 1.0 + slope * domain.lo(0);
  const double s_hi = 1.0 + slope * domain.hi(0);
  const double s_min = std::min(s_lo, s_hi);
  const double s_max = std::max(s_lo, s_hi);
  if (!(s_min > 0.0)) throw ArgumentError("locally_periodic_sine slow factor must stay positive");
  auto cell = [=](const Point& x, const Point& y) -> Tensor {
    const double v = (1.0 + slope * x(0)) / (c0 + c1 * std::sin(2.0 * std::numbers::pi * y(0)));
    return v * Tensor::Identity(dim, dim);
  };
  return locally_periodic(dim, cell, eps, s_min / (c0 + std::abs(c1)), s_max / (c0 - std::abs(c1)),
                          std::move(domain));
}

CoefficientField CoefficientField::laminate_2d(double a_low, double a_high, double fraction, double eps,
                                               Box domain) {
  if (domain.dim() != 2) throw ArgumentError("laminate_2d requires a 2D domain");
  if (!(a_low > 0.0 && a_high > 0.0)) throw ArgumentError("laminate values must be positive");
  if (!(fraction > 0.0 && fraction < 1.0)) throw ArgumentError("laminate fraction must lie in (0,1)");
  CoefficientField f(CoeffKind::laminate_2d, std::move(domain), eps, std::min(a_low, a_high),
                     std::max(a_low, a_high));
  f.cell_ = [=](const Point&, const Point& y) -> Tensor {
    return (y(0) < fraction ? a_low : a_high) * Tensor::Identity(2, 2);
  };
  return f;
}

CoefficientField CoefficientField::piecewise_constant_sample(int dim, int cells_per_axis,
                                                             std::vector<double> values, Box domain) {
  if (domain.dim() != dim) throw ArgumentError("domain dimension mismatch");
  if (cells_per_axis < 1) throw ArgumentError("sample grid needs at least one cell per axis");
  std::size_t expected = static_cast<std::size_t>(cells_per_axis);
  if (dim == 2) expected *= static_cast<std::size_t>(cells_per_axis);
  if (values.size() != expected) throw ArgumentError("sample value count does not match the grid");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*lo > 0.0)) throw ArgumentError("sample values must be positive");
  const double eps = domain.length(0) / cells_per_axis;
  CoefficientField f(CoeffKind::piecewise_constant_sample, std::move(domain), eps, *lo, *hi);
  f.cells_per_axis_ = cells_per_axis;
  f.samples_ = std::move(values);
  return f;
}

CoefficientField CoefficientField::random_sample(int dim, int cells_per_axis, double lo, double hi,
                                                 std::uint64_t seed, Box domain) {
  if (!(0.0 < lo && lo <= hi)) throw ArgumentError("random sample range must satisfy 0 < lo <= hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::size_t n = static_cast<std::size_t>(cells_per_axis);
  if (dim == 2) n *= static_cast<std::size_t>(cells_per_axis);
  std::vector<double> values(n);
  for (auto& v : values) v = dist(rng);
  return piecewise_constant_sample(dim, cells_per_axis, std::move(values), std::move(domain));
}

Point CoefficientField::clamp_to_domain(const Point& x) const {
  Point c = x;
  for (int i = 0; i < dim(); ++i) c(i) = std::clamp(x(i), domain_.lo(i), domain_.hi(i));
  return c;
}

Tensor CoefficientField::sample_lookup(const Point& x) const {
  std::size_t index = 0;
  std::size_t stride = 1;
  for (int i = 0; i < dim(); ++i) {
    const double rel = (x(i) - domain_.lo(i)) / domain_.length(i) * cells_per_axis_;
    const int cell = std::clamp(static_cast<int>(std::floor(rel)), 0, cells_per_axis_ - 1);
    index += stride * static_cast<std::size_t>(cell);
    stride *= static_cast<std::size_t>(cells_per_axis_);
  }
  return (scale_ * samples_[index]) * Tensor::Identity(dim(), dim());
}

Tensor CoefficientField::eval(const Point& x) const {
  if (x.size() != dim() || !domain_.contains(x)) {
    throw DomainError("coefficient evaluated outside the domain");
  }
  return eval_extended(x);
}

Tensor CoefficientField::eval_extended(const Point& x) const {
  if (x.size() != dim()) throw DomainError("point dimension does not match the coefficient");
  if (kind_ == CoeffKind::piecewise_constant_sample) return sample_lookup(x);
  Point y(dim());
  for (int i = 0; i < dim(); ++i) y(i) = wrap_unit(x(i) / eps_);
  return scale_ * cell_(clamp_to_domain(x), y);
}

Tensor CoefficientField::cell_eval(const Point& x_slow, const Point& y) const {
  if (!has_unit_cell()) throw ArgumentError("coefficient kind has no unit cell");
  Point yw(dim());
  for (int i = 0; i < dim(); ++i) yw(i) = wrap_unit(y(i));
  return scale_ * cell_(clamp_to_domain(x_slow), yw);
}

CoefficientField CoefficientField::scaled(double c) const {
  if (!(c > 0.0)) throw ArgumentError("scaling factor must be positive");
  CoefficientField f = *this;
  f.scale_ *= c;
  f.alpha_ *= c;
  f.beta_ *= c;
  return f;
}

Tensor eval_coeff(const CoefficientField& field, const Point& x) { return field.eval(x); }

std::pair<double, double> symmetric_eigenvalue_range(const Tensor& a) {
  if (a.rows() == 1) return {a(0, 0), a(0, 0)};
  const double m = 0.5 * (a(0, 0) + a(1, 1));
  const double d = 0.5 * (a(0, 0) - a(1, 1));
  const double r = std::sqrt(d * d + a(0, 1) * a(0, 1));
  return {m - r, m + r};
}

SpectralReport verify_spectral_bounds(const CoefficientField& field, int n_samples) {
  if (n_samples < 1) throw ArgumentError("n_samples must be at least 1");
  const int dim = field.dim();
  const int per_axis =
      dim == 1 ? n_samples : std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_samples)))));
  const Box& box = field.domain();

  SpectralReport report;
  report.min_eig = std::numeric_limits<double>::infinity();
  report.max_eig = -std::numeric_limits<double>::infinity();
  auto coord = [&](int axis, int i) {
    if (per_axis == 1) return 0.5 * (box.lo(axis) + box.hi(axis));
    return box.lo(axis) + box.length(axis) * static_cast<double>(i) / (per_axis - 1);
  };
  const int ny = dim == 2 ? per_axis : 1;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < per_axis; ++i) {
      Point x = dim == 1 ? make_point(coord(0, i)) : make_point(coord(0, i), coord(1, j));
      const auto [lo, hi] = symmetric_eigenvalue_range(field.eval(x));
      report.min_eig = std::min(report.min_eig, lo);
      report.max_eig = std::max(report.max_eig, hi);
    }
  }
  constexpr double tol = 1e-12;
  report.pass = report.min_eig >= field.alpha() * (1.0 - tol) && report.max_eig <= field.beta() * (1.0 + tol);
  return report;
}

}  // namespace mswave
