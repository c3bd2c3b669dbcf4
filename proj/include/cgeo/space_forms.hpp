#pragma once

// Closed forms for the built-in constant-curvature charts, via their standard
// embeddings: the round sphere of radius r in R^{d+1} (stereographic chart
// from the north pole, chart origin at the south pole) and the hyperboloid
// -t^2 + |y|^2 = -r^2 in Minkowski space (Poincare ball chart).

#include "cgeo/linalg.hpp"

#include <Eigen/Dense>

namespace cgeo::space_forms {

using Ambient = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim + 1, 1>;

Ambient sphere_embed(const Vec& x, double r);
Ambient sphere_push(const Vec& x, const Vec& v, double r);
Vec sphere_chart(const Ambient& p, double r);
double sphere_distance(const Vec& x, const Vec& y, double r);
Vec sphere_exp(const Vec& x, const Vec& v, double r);

// Ambient vector is (t, y_1..y_d).
Ambient hyperbolic_embed(const Vec& x, double r);
Ambient hyperbolic_push(const Vec& x, const Vec& v, double r);
Vec hyperbolic_chart(const Ambient& q, double r);
double hyperbolic_distance(const Vec& x, const Vec& y, double r);
Vec hyperbolic_exp(const Vec& x, const Vec& v, double r);

}  // namespace cgeo::space_forms
