#pragma once

// Second-order forward-mode jets: a value together with its gradient and
// Hessian with respect to the chart coordinates.

#include "cgeo/linalg.hpp"

namespace cgeo {

struct Jet2 {
  double value = 0.0;
  Vec grad;
  Mat hess;

  int dim() const { return static_cast<int>(grad.size()); }

  static Jet2 constant(double c, int d);
  // The coordinate function x_i (0-based) evaluated at `x_i_value`.
  static Jet2 variable(double x_i_value, int i, int d);

  bool is_locally_constant() const;
};

Jet2 operator+(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a, const Jet2& b);
Jet2 operator*(const Jet2& a, const Jet2& b);
Jet2 operator/(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a);
Jet2 operator*(double c, const Jet2& a);
Jet2 operator+(double c, const Jet2& a);

// Chain rule for a scalar function with value f, derivative df and second
// derivative d2f at a.value.
Jet2 compose(const Jet2& a, double f, double df, double d2f);

// Elementary functions. Domain violations (log or sqrt of a non-positive
// argument, division by zero, negative base with non-integer exponent)
// throw Error(Errc::EvalDomainError).
Jet2 exp(const Jet2& a);
Jet2 log(const Jet2& a);
Jet2 sin(const Jet2& a);
Jet2 cos(const Jet2& a);
Jet2 sqrt(const Jet2& a);
Jet2 tanh(const Jet2& a);
// 0^0 is 1 with vanishing derivatives.
Jet2 pow(const Jet2& base, const Jet2& exponent);

}  // namespace cgeo
