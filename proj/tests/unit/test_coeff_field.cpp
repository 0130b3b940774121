#include "generators.hpp"
#include "mswave/coeff_field.hpp"
#include "mswave/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace mswave;
using mswave::testing::Gen;

namespace {

CoefficientField sine_field(double eps) { return CoefficientField::periodic_1d_sine(2.0, 1.0, eps, Box::unit(1)); }

double min_quadratic_form(const Tensor& a, Gen& gen, int trials, double* max_out) {
  double lo = 1e300, hi = -1e300;
  for (int s = 0; s < trials; ++s) {
    Point xi = gen.point(static_cast<int>(a.rows()), -1.0, 1.0);
    if (xi.norm() < 1e-3) continue;
    xi /= xi.norm();
    const double q = xi.dot(a * xi);
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  *max_out = hi;
  return lo;
}

}  // namespace

TEST_CASE("constant field evaluates to c times the identity") {
  const CoefficientField f = CoefficientField::constant(2, 3.0, Box::unit(2));
  const Tensor a = eval_coeff(f, make_point(0.3, 0.9));
  CHECK(a(0, 0) == 3.0);
  CHECK(a(1, 1) == 3.0);
  CHECK(a(0, 1) == 0.0);
  CHECK(a(1, 0) == 0.0);
}

TEST_CASE("periodic 1d field at the quarter period") {
  const Tensor a = eval_coeff(sine_field(0.1), make_point(0.025));
  CHECK(a(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("laminate takes the high value in the upper layer") {
  const CoefficientField f = CoefficientField::laminate_2d(1.0, 4.0, 0.5, 0.1, Box::unit(2));
  const Tensor a = eval_coeff(f, make_point(0.07, 0.5));
  CHECK(a(0, 0) == 4.0);
  CHECK(a(1, 1) == 4.0);
  CHECK(a(0, 1) == 0.0);
  const Tensor b = eval_coeff(f, make_point(0.02, 0.5));
  CHECK(b(0, 0) == 1.0);
}

TEST_CASE("evaluation outside the domain throws") {
  CHECK_THROWS_AS(eval_coeff(sine_field(0.1), make_point(1.5)), DomainError);
  CHECK_NOTHROW(sine_field(0.1).eval_extended(make_point(-0.3)));
}

TEST_CASE("wrap_unit uses the floor convention") {
  CHECK(wrap_unit(0.25) == doctest::Approx(0.25));
  CHECK(wrap_unit(-0.25) == doctest::Approx(0.75));
  CHECK(wrap_unit(3.0) == 0.0);
}

TEST_CASE("spectral bounds report") {
  SUBCASE("constant within its own bounds") {
    const SpectralReport r = verify_spectral_bounds(CoefficientField::constant(1, 3.0, Box::unit(1)), 100);
    CHECK(r.pass);
    CHECK(r.min_eig == 3.0);
    CHECK(r.max_eig == 3.0);
  }
  SUBCASE("1/(2 + sin) spans [1/3, 1]") {
    const SpectralReport r = verify_spectral_bounds(sine_field(0.1), 4000);
    CHECK(r.pass);
    CHECK(r.min_eig == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
    CHECK(r.max_eig == doctest::Approx(1.0).epsilon(1e-5));
  }
  SUBCASE("constant 5 with declared bounds (1, 4) fails") {
    const CoefficientField f =
        CoefficientField::periodic_1d([](double) { return 5.0; }, 0.1, 1.0, 4.0, Box::unit(1));
    const SpectralReport r = verify_spectral_bounds(f, 100);
    CHECK_FALSE(r.pass);
    CHECK(r.max_eig == 5.0);
  }
}

TEST_CASE("invalid bounds are rejected") {
  CHECK_THROWS_AS(CoefficientField::periodic_1d([](double) { return 1.0; }, 0.1, 2.0, 1.0, Box::unit(1)),
                  ArgumentError);
  CHECK_THROWS_AS(CoefficientField::periodic_1d_sine(1.0, 1.0, 0.1, Box::unit(1)), ArgumentError);
  CHECK_THROWS_AS(CoefficientField::constant(1, -1.0, Box::unit(1)), ArgumentError);
}

TEST_CASE("property: periodicity, symmetry and ellipticity over random points") {
  Gen gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const double eps = 1.0 / gen.integer(3, 40);
    const std::vector<CoefficientField> fields = {
        sine_field(eps),
        CoefficientField::laminate_2d(gen.uniform(0.5, 2.0), gen.uniform(2.0, 6.0), gen.uniform(0.2, 0.8), eps,
                                      Box::unit(2)),
        CoefficientField::locally_periodic_sine(2, 2.0, 1.0, 0.5, eps, Box::unit(2)),
    };
    for (const CoefficientField& f : fields) {
      for (int s = 0; s < 50; ++s) {
        const Point x = gen.point(f.dim(), 0.0, 1.0 - eps);
        const Tensor a = f.eval(x);
        CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
        double hi = 0.0;
        const double lo = min_quadratic_form(a, gen, 20, &hi);
        CHECK(lo >= f.alpha() * (1.0 - 1e-12));
        CHECK(hi <= f.beta() * (1.0 + 1e-12));
        if (f.kind() == CoeffKind::locally_periodic) continue;
        for (int j = 0; j < f.dim(); ++j) {
          Point y = x;
          y(j) += eps;
          CHECK((f.eval(y) - a).cwiseAbs().maxCoeff() <= 1e-13);
        }
      }
    }
  }
}

TEST_CASE("property: scaling multiplies every entry") {
  Gen gen(12);
  const CoefficientField base = CoefficientField::laminate_2d(1.0, 4.0, 0.5, 0.1, Box::unit(2));
  for (int trial = 0; trial < 20; ++trial) {
    const double c = gen.uniform(0.1, 10.0);
    const CoefficientField s = base.scaled(c);
    CHECK(s.alpha() == doctest::Approx(c * base.alpha()));
    CHECK(s.beta() == doctest::Approx(c * base.beta()));
    for (int k = 0; k < 10; ++k) {
      const Point x = gen.point(2);
      CHECK((eval_coeff(s, x) - c * eval_coeff(base, x)).cwiseAbs().maxCoeff() <= 1e-14 * c);
    }
  }
}

TEST_CASE("sample field uses nearest-cell lookup") {
  const CoefficientField f =
      CoefficientField::piecewise_constant_sample(1, 4, {1.0, 2.0, 3.0, 4.0}, Box::unit(1));
  CHECK(f.eval(make_point(0.1))(0, 0) == 1.0);
  CHECK(f.eval(make_point(0.3))(0, 0) == 2.0);
  CHECK(f.eval(make_point(0.99))(0, 0) == 4.0);
  CHECK(f.eval(make_point(1.0))(0, 0) == 4.0);
  CHECK(f.alpha() == 1.0);
  CHECK(f.beta() == 4.0);
  CHECK_FALSE(f.has_unit_cell());
}

TEST_CASE("random sample field is reproducible from its seed") {
  const CoefficientField a = CoefficientField::random_sample(2, 8, 1.0, 10.0, 42, Box::unit(2));
  const CoefficientField b = CoefficientField::random_sample(2, 8, 1.0, 10.0, 42, Box::unit(2));
  const CoefficientField c = CoefficientField::random_sample(2, 8, 1.0, 10.0, 43, Box::unit(2));
  Gen gen(3);
  bool differs = false;
  for (int s = 0; s < 50; ++s) {
    const Point x = gen.point(2);
    CHECK(a.eval(x)(0, 0) == b.eval(x)(0, 0));
    differs = differs || a.eval(x)(0, 0) != c.eval(x)(0, 0);
    CHECK(a.eval(x)(0, 0) >= 1.0);
    CHECK(a.eval(x)(0, 0) <= 10.0);
  }
  CHECK(differs);
}
