#include "mswave/types.hpp"

namespace mswave {

Box Box::unit(int dim) {
  Box b;
  b.lo = Point::Zero(dim);
  b.hi = Point::Ones(dim);
  return b;
}

Box Box::interval(double a, double b) {
  Box box;
  box.lo = make_point(a);
  box.hi = make_point(b);
  return box;
}

double Box::measure() const {
  double m = 1.0;
  for (int i = 0; i < dim(); ++i) m *= length(i);
  return m;
}

bool Box::contains(const Point& x, double tol) const {
  if (x.size() != lo.size()) return false;
  for (int i = 0; i < dim(); ++i) {
    const double slack = tol * std::max(1.0, length(i));
    if (x(i) < lo(i) - slack || x(i) > hi(i) + slack) return false;
  }
  return true;
}

bool Box::operator==(const Box& other) const {
  return lo.size() == other.lo.size() && (lo - other.lo).cwiseAbs().maxCoeff() < 1e-14 &&
         (hi - other.hi).cwiseAbs().maxCoeff() < 1e-14;
}

Point make_point(double x) {
  Point p(1);
  p << x;
  return p;
}

Point make_point(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

}  // namespace mswave
