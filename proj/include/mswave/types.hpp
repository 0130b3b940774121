#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>

namespace mswave {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Points and coefficient tensors live in dimension 1 or 2; the fixed upper
// bound keeps them on the stack.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;

using ScalarFn = std::function<double(const Point&)>;
using GradientFn = std::function<Point(const Point&)>;
using TensorFn = std::function<Tensor(const Point&)>;

/// Axis-aligned box [lo, hi] in 1D or 2D.
struct Box {
  Point lo;
  Point hi;

  static Box unit(int dim);
  static Box interval(double a, double b);

  int dim() const { return static_cast<int>(lo.size()); }
  double length(int axis) const { return hi(axis) - lo(axis); }
  double measure() const;
  bool contains(const Point& x, double tol = 1e-12) const;
  bool operator==(const Box& other) const;
};

Point make_point(double x);
Point make_point(double x, double y);

}  // namespace mswave
