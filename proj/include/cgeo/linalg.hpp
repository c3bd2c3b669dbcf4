#pragma once

// Small dense linear algebra used throughout. Sizes are dynamic but bounded,
// so none of these types allocate.

#include <Eigen/Dense>

#include <cmath>

namespace cgeo {

inline constexpr int kMaxDim = 6;
inline constexpr int kMaxState = 3 * kMaxDim;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim,
                          kMaxDim>;
using StateVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxState, 1>;

// Points of the chart and tangent vectors share a representation; the names
// document intent at API boundaries.
using ChartPoint = Vec;
using TangentVector = Vec;

inline double inner(const Mat& g, const Vec& u, const Vec& v) {
  return u.dot(g * v);
}

inline double norm(const Mat& g, const Vec& u) {
  return std::sqrt(inner(g, u, u));
}

// Gram-Schmidt in the inner product g. Columns of `seed` are processed in
// order; columns that are (numerically) dependent on earlier ones are
// replaced by coordinate axes. Returns a d x d matrix whose columns are
// g-orthonormal, the first being seed.col(0) normalised.
Mat orthonormal_frame(const Mat& g, const Mat& seed);

// Frame whose first column is u (assumed nonzero); the remaining columns are
// completed from coordinate axes.
Mat frame_from(const Mat& g, const Vec& u);

inline Vec zeros(int d) { return Vec::Zero(d); }

inline Vec unit(int d, int i) {
  Vec e = Vec::Zero(d);
  e(i) = 1.0;
  return e;
}

}  // namespace cgeo
