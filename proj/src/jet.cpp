#include "cgeo/jet.hpp"

#include "cgeo/error.hpp"

#include <cmath>
#include <string>

namespace cgeo {

namespace {

// Round-off in the vectorised products can leave the two triangles a few ulp
// apart; averaging restores exact symmetry.
Mat symmetrized(const Mat& h) { return 0.5 * (h + h.transpose()); }

}  // namespace

Jet2 Jet2::constant(double c, int d) {
  Jet2 j;
  j.value = c;
  j.grad = Vec::Zero(d);
  j.hess = Mat::Zero(d, d);
  return j;
}

Jet2 Jet2::variable(double x_i_value, int i, int d) {
  Jet2 j = constant(x_i_value, d);
  j.grad(i) = 1.0;
  return j;
}

bool Jet2::is_locally_constant() const {
  return grad.isZero(0.0) && hess.isZero(0.0);
}

Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.value = a.value + b.value;
  r.grad = a.grad + b.grad;
  r.hess = a.hess + b.hess;
  return r;
}

Jet2 operator-(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.value = a.value - b.value;
  r.grad = a.grad - b.grad;
  r.hess = a.hess - b.hess;
  return r;
}

Jet2 operator-(const Jet2& a) {
  Jet2 r;
  r.value = -a.value;
  r.grad = -a.grad;
  r.hess = -a.hess;
  return r;
}

Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.value = a.value * b.value;
  r.grad = a.grad * b.value + b.grad * a.value;
  Mat cross = a.grad * b.grad.transpose();
  r.hess = symmetrized(a.hess * b.value + b.hess * a.value + cross +
                       cross.transpose());
  return r;
}

Jet2 operator*(double c, const Jet2& a) {
  Jet2 r;
  r.value = c * a.value;
  r.grad = c * a.grad;
  r.hess = c * a.hess;
  return r;
}

Jet2 operator+(double c, const Jet2& a) {
  Jet2 r = a;
  r.value += c;
  return r;
}

Jet2 compose(const Jet2& a, double f, double df, double d2f) {
  Jet2 r;
  r.value = f;
  r.grad = df * a.grad;
  r.hess = symmetrized(df * a.hess + d2f * (a.grad * a.grad.transpose()));
  return r;
}

namespace {

[[noreturn]] void domain_error(const char* fn, double arg) {
  throw Error(Errc::EvalDomainError,
              std::string(fn) + " undefined at " + std::to_string(arg));
}

}  // namespace

Jet2 operator/(const Jet2& a, const Jet2& b) {
  if (b.value == 0.0) domain_error("division", b.value);
  const double inv = 1.0 / b.value;
  return a * compose(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}

Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.value);
  return compose(a, e, e, e);
}

Jet2 log(const Jet2& a) {
  if (!(a.value > 0.0)) domain_error("log", a.value);
  const double inv = 1.0 / a.value;
  return compose(a, std::log(a.value), inv, -inv * inv);
}

Jet2 sin(const Jet2& a) {
  const double s = std::sin(a.value), c = std::cos(a.value);
  return compose(a, s, c, -s);
}

Jet2 cos(const Jet2& a) {
  const double s = std::sin(a.value), c = std::cos(a.value);
  return compose(a, c, -s, -c);
}

Jet2 sqrt(const Jet2& a) {
  // The derivative is unbounded at 0, so 0 is outside the jet domain.
  if (!(a.value > 0.0)) domain_error("sqrt", a.value);
  const double s = std::sqrt(a.value);
  return compose(a, s, 0.5 / s, -0.25 / (s * a.value));
}

Jet2 tanh(const Jet2& a) {
  const double t = std::tanh(a.value);
  const double sech2 = 1.0 - t * t;
  return compose(a, t, sech2, -2.0 * t * sech2);
}

Jet2 pow(const Jet2& base, const Jet2& exponent) {
  const int d = base.dim();
  if (base.value == 0.0 && exponent.value == 0.0) {
    return Jet2::constant(1.0, d);
  }
  if (exponent.is_locally_constant()) {
    const double c = exponent.value;
    const double x = base.value;
    const bool integral = std::floor(c) == c;
    if (x < 0.0 && !integral) domain_error("pow (negative base)", x);
    if (x == 0.0 && c < 0.0) domain_error("pow (zero base)", x);
    if (x == 0.0 && c < 2.0 && c != 1.0 && c != 0.0) {
      // derivative of x^c blows up at 0 for 0 < c < 2 except c = 1
      domain_error("pow (derivative at zero base)", x);
    }
    const double f = std::pow(x, c);
    const double df = (c == 0.0) ? 0.0 : c * std::pow(x, c - 1.0);
    const double d2f =
        (c == 0.0 || c == 1.0) ? 0.0 : c * (c - 1.0) * std::pow(x, c - 2.0);
    return compose(base, f, df, d2f);
  }
  if (!(base.value > 0.0)) domain_error("pow (variable exponent)", base.value);
  return exp(exponent * log(base));
}

}  // namespace cgeo
