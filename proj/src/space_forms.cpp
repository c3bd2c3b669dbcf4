#include "cgeo/space_forms.hpp"

#include <cmath>

namespace cgeo::space_forms {

Ambient sphere_embed(const Vec& x, double r) {
  const int d = static_cast<int>(x.size());
  const double s = x.squaredNorm();
  const double den = s + r * r;
  Ambient p(d + 1);
  p.head(d) = (2.0 * r * r / den) * x;
  p(d) = r * (s - r * r) / den;
  return p;
}

Ambient sphere_push(const Vec& x, const Vec& v, double r) {
  const int d = static_cast<int>(x.size());
  const double s = x.squaredNorm();
  const double den = s + r * r;
  const double xv = x.dot(v);
  Ambient w(d + 1);
  w.head(d) = (2.0 * r * r / den) * v - (4.0 * r * r * xv / (den * den)) * x;
  // d/dx of r (s - r^2)/(s + r^2) = 4 r^3 x / den^2
  w(d) = 4.0 * r * r * r * xv / (den * den);
  return w;
}

Vec sphere_chart(const Ambient& p, double r) {
  const int d = static_cast<int>(p.size()) - 1;
  return (r / (r - p(d))) * p.head(d);
}

double sphere_distance(const Vec& x, const Vec& y, double r) {
  const Ambient p = sphere_embed(x, r);
  const Ambient q = sphere_embed(y, r);
  return 2.0 * r * std::atan2((p - q).norm(), (p + q).norm());
}

Vec sphere_exp(const Vec& x, const Vec& v, double r) {
  const Ambient p = sphere_embed(x, r);
  const Ambient w = sphere_push(x, v, r);
  const double len = 2.0 * r * r * v.norm() / (r * r + x.squaredNorm());
  if (len == 0.0) return x;
  const double ang = len / r;
  const Ambient q = std::cos(ang) * p + (r * std::sin(ang) / len) * w;
  return sphere_chart(q, r);
}

Ambient hyperbolic_embed(const Vec& x, double r) {
  const int d = static_cast<int>(x.size());
  const double s = x.squaredNorm();
  const double den = r * r - s;
  Ambient q(d + 1);
  q(0) = r * (r * r + s) / den;
  q.tail(d) = (2.0 * r * r / den) * x;
  return q;
}

Ambient hyperbolic_push(const Vec& x, const Vec& v, double r) {
  const int d = static_cast<int>(x.size());
  const double s = x.squaredNorm();
  const double den = r * r - s;
  const double xv = x.dot(v);
  Ambient w(d + 1);
  w(0) = 4.0 * r * r * r * xv / (den * den);
  w.tail(d) = (2.0 * r * r / den) * v + (4.0 * r * r * xv / (den * den)) * x;
  return w;
}

Vec hyperbolic_chart(const Ambient& q, double r) {
  const int d = static_cast<int>(q.size()) - 1;
  return (r / (r + q(0))) * q.tail(d);
}

double hyperbolic_distance(const Vec& x, const Vec& y, double r) {
  const double delta = 2.0 * r * r * (x - y).squaredNorm() /
                       ((r * r - x.squaredNorm()) * (r * r - y.squaredNorm()));
  // acosh(1 + delta) without cancellation near delta = 0
  return r * std::log1p(delta + std::sqrt(delta * (2.0 + delta)));
}

Vec hyperbolic_exp(const Vec& x, const Vec& v, double r) {
  const Ambient q = hyperbolic_embed(x, r);
  const Ambient w = hyperbolic_push(x, v, r);
  // Lorentzian length of w, i.e. the g-norm of v
  const double len = 2.0 * r * r * v.norm() / (r * r - x.squaredNorm());
  if (len == 0.0) return x;
  const double ang = len / r;
  const Ambient e = std::cosh(ang) * q + (r * std::sinh(ang) / len) * w;
  return hyperbolic_chart(e, r);
}

}  // namespace cgeo::space_forms
