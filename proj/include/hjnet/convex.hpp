#pragma once

// Convex-analysis primitives on sampled one-dimensional functions: lower
// convex envelopes (monotone chain) and discrete Legendre-Fenchel conjugates.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "hjnet/core.hpp"

namespace hjnet {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Convex piecewise-linear function given by its breakpoints. Outside the
/// breakpoint range it continues linearly with slopes `left_slope` and
/// `right_slope` (which default to the slopes of the outermost pieces).
template <typename Scalar>
class ConvexPiecewiseLinear {
 public:
  ConvexPiecewiseLinear() = default;
  ConvexPiecewiseLinear(VectorX<Scalar> x, VectorX<Scalar> y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() >= 2) {
      left_slope_ = (y_(1) - y_(0)) / (x_(1) - x_(0));
      const Eigen::Index n = x_.size();
      right_slope_ = (y_(n - 1) - y_(n - 2)) / (x_(n - 1) - x_(n - 2));
    }
  }
  ConvexPiecewiseLinear(VectorX<Scalar> x, VectorX<Scalar> y, Scalar left_slope, Scalar right_slope)
      : x_(std::move(x)), y_(std::move(y)), left_slope_(left_slope), right_slope_(right_slope) {}

  const VectorX<Scalar>& breakpoints() const { return x_; }
  const VectorX<Scalar>& values() const { return y_; }
  Scalar left_slope() const { return left_slope_; }
  Scalar right_slope() const { return right_slope_; }
  Eigen::Index size() const { return x_.size(); }

  Scalar operator()(Scalar t) const {
    const Eigen::Index n = x_.size();
    if (n == 0) throw Error(ErrorCode::EmptyGrid, "empty piecewise-linear function");
    if (t <= x_(0)) return y_(0) + left_slope_ * (t - x_(0));
    if (t >= x_(n - 1)) return y_(n - 1) + right_slope_ * (t - x_(n - 1));
    const Scalar* begin = x_.data();
    const Eigen::Index k = std::upper_bound(begin, begin + n, t) - begin - 1;
    const Scalar w = (t - x_(k)) / (x_(k + 1) - x_(k));
    return (Scalar(1) - w) * y_(k) + w * y_(k + 1);
  }

  /// Convex conjugate f*(lambda) = sup_t (t lambda - f(t)). Infinite when
  /// lambda lies outside [left_slope, right_slope].
  ExtendedReal conjugate(Scalar lambda) const {
    const Eigen::Index n = x_.size();
    if (n == 0) throw Error(ErrorCode::EmptyGrid, "empty piecewise-linear function");
    if (lambda < left_slope_ || lambda > right_slope_) return ExtendedReal::infinity();
    // The sup is attained at the breakpoint where the slope crosses lambda.
    Eigen::Index lo = 0, hi = n - 1;
    while (hi - lo > 1) {
      const Eigen::Index mid = (lo + hi) / 2;
      const Scalar slope = (y_(mid) - y_(mid - 1)) / (x_(mid) - x_(mid - 1));
      if (slope <= lambda) lo = mid; else hi = mid;
    }
    Scalar best = x_(lo) * lambda - y_(lo);
    best = std::max(best, x_(hi) * lambda - y_(hi));
    return ExtendedReal(static_cast<double>(best));
  }

 private:
  VectorX<Scalar> x_;
  VectorX<Scalar> y_;
  Scalar left_slope_ = Scalar(0);
  Scalar right_slope_ = Scalar(0);
};

/// Lower convex hull of the points (x_i, y_i), x strictly increasing.
/// Returns the hull as a ConvexPiecewiseLinear whose breakpoints are a subset
/// of the input abscissae (first and last always kept).
template <typename DerivedX, typename DerivedY>
ConvexPiecewiseLinear<typename DerivedX::Scalar> lower_convex_envelope(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  const Eigen::Index n = x.size();
  if (n < 2 || y.size() != n) throw Error(ErrorCode::TooFewPoints, "envelope needs >= 2 points");
  for (Eigen::Index i = 1; i < n; ++i)
    if (!(x(i) > x(i - 1)))
      throw Error(ErrorCode::NonMonotoneAbscissae, "abscissae must be strictly increasing");

  std::vector<Eigen::Index> hull;
  hull.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    while (hull.size() >= 2) {
      const Eigen::Index a = hull[hull.size() - 2];
      const Eigen::Index b = hull.back();
      // Drop b when it lies on or above the chord a -> i.
      const Scalar lhs = (y(b) - y(a)) * (x(i) - x(a));
      const Scalar rhs = (y(i) - y(a)) * (x(b) - x(a));
      if (lhs >= rhs) hull.pop_back(); else break;
    }
    hull.push_back(i);
  }
  VectorX<Scalar> hx(static_cast<Eigen::Index>(hull.size()));
  VectorX<Scalar> hy(static_cast<Eigen::Index>(hull.size()));
  for (std::size_t k = 0; k < hull.size(); ++k) {
    hx(static_cast<Eigen::Index>(k)) = x(hull[k]);
    hy(static_cast<Eigen::Index>(k)) = y(hull[k]);
  }
  return ConvexPiecewiseLinear<Scalar>(std::move(hx), std::move(hy));
}

/// Discrete Legendre-Fenchel transform: f*(lambda) = max_i (mu_i lambda - f_i)
/// over the sample grid, for each lambda of the dual grid. Exact for the
/// grid-restricted problem.
template <typename DerivedMu, typename DerivedF, typename DerivedL>
VectorX<typename DerivedMu::Scalar> legendre_transform(const Eigen::MatrixBase<DerivedMu>& mu,
                                                       const Eigen::MatrixBase<DerivedF>& f,
                                                       const Eigen::MatrixBase<DerivedL>& dual) {
  using Scalar = typename DerivedMu::Scalar;
  if (mu.size() == 0 || f.size() != mu.size())
    throw Error(ErrorCode::EmptyGrid, "legendre_transform needs a nonempty sample grid");
  VectorX<Scalar> out(dual.size());
  for (Eigen::Index j = 0; j < dual.size(); ++j)
    out(j) = (mu.array() * dual(j) - f.array()).maxCoeff();
  return out;
}

/// Scalar convenience overload of legendre_transform.
template <typename DerivedMu, typename DerivedF>
typename DerivedMu::Scalar legendre_transform(const Eigen::MatrixBase<DerivedMu>& mu,
                                              const Eigen::MatrixBase<DerivedF>& f,
                                              typename DerivedMu::Scalar lambda) {
  if (mu.size() == 0 || f.size() != mu.size())
    throw Error(ErrorCode::EmptyGrid, "legendre_transform needs a nonempty sample grid");
  return (mu.array() * lambda - f.array()).maxCoeff();
}

/// Midpoint convexity check on uniformly sampled values.
template <typename Derived>
bool is_midpoint_convex(const Eigen::MatrixBase<Derived>& f, typename Derived::Scalar tol) {
  for (Eigen::Index i = 1; i + 1 < f.size(); ++i)
    if (f(i) > 0.5 * (f(i - 1) + f(i + 1)) + tol) return false;
  return true;
}

}  // namespace hjnet
