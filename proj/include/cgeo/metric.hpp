#pragma once

// Riemannian metrics on a single chart of R^d, their curvature up to the
// Schouten tensor, and conformal rescalings g -> Omega^2 g.

#include "cgeo/expr.hpp"
#include "cgeo/jet.hpp"
#include "cgeo/linalg.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace cgeo {

enum class MetricKind {
  Euclidean,
  Sphere,      // stereographic chart, g = 4 r^4 / (r^2 + |x|^2)^2 delta
  Hyperbolic,  // Poincare ball of chart radius r, g = 4 r^4 / (r^2 - |x|^2)^2 delta
  ConformallyFlat,  // g = Omega(x)^2 delta
  Custom,           // d*d component expressions
  Rescaled,         // Omega^2 times another metric field
};

std::string_view kind_name(MetricKind kind);

// Components with first and second partial derivatives:
//   dg[c](a, b) = d_c g_ab,  ddg[c][e](a, b) = d_c d_e g_ab.
struct MetricJet {
  Mat g;
  std::array<Mat, kMaxDim> dg;
  std::array<std::array<Mat, kMaxDim>, kMaxDim> ddg;
};

// A positive scalar field Omega, evaluated to second-order jets.
class ConformalFactor {
 public:
  using Fn = std::function<Jet2(const ChartPoint&)>;

  static ConformalFactor constant(double c, int d);
  static ConformalFactor expression(const Expr& omega);
  static ConformalFactor from_function(int d, Fn fn, std::string description);

  int dim() const { return d_; }
  const std::string& description() const { return description_; }

  // Throws NonPositiveFactor when Omega(x) <= 0.
  Jet2 eval(const ChartPoint& x) const;
  // The one-form Upsilon = Omega^-1 dOmega (components in the chart basis).
  Vec upsilon(const ChartPoint& x) const;

 private:
  ConformalFactor(int d, Fn fn, std::string description)
      : d_(d), fn_(std::move(fn)), description_(std::move(description)) {}

  int d_ = 0;
  Fn fn_;
  std::string description_;
};

class MetricField {
 public:
  class Source;

  static MetricField euclidean(int d);
  static MetricField sphere(int d, double radius = 1.0);
  static MetricField hyperbolic(int d, double radius = 1.0);
  static MetricField conformally_flat(const Expr& omega);
  // Row-major d*d expressions; entry (a, b) must be structurally equal to
  // entry (b, a).
  static MetricField custom(const std::vector<Expr>& components);

  int dim() const;
  MetricKind kind() const;
  // Curvature radius for Sphere and Hyperbolic, 0 otherwise.
  double radius() const;
  std::string description() const;

  // Component values at x. Throws DomainError outside the chart and
  // NotPositiveDefinite if the Cholesky factorisation fails.
  Mat metric(const ChartPoint& x) const;
  MetricJet jet(const ChartPoint& x) const;

  // Cheap test for chart membership (no exception).
  bool in_domain(const ChartPoint& x) const;

  const std::shared_ptr<const Source>& source() const { return source_; }

 private:
  explicit MetricField(std::shared_ptr<const Source> s)
      : source_(std::move(s)) {}

  friend MetricField conformal_rescale(const MetricField& m,
                                       const ConformalFactor& omega);

  std::shared_ptr<const Source> source_;
};

struct MetricEval {
  Mat g;
  Mat g_inv;
};

MetricEval eval_metric(const MetricField& m, const ChartPoint& x);

struct CurvatureData {
  int dim = 0;
  Mat g;
  Mat g_inv;
  // christoffel[(a * d + b) * d + c] = Gamma^a_bc
  std::array<double, kMaxDim * kMaxDim * kMaxDim> christoffel{};
  Mat ricci;
  double scalar = 0.0;
  Mat schouten;
  Mat schouten_endo;  // L^a_b = g^ac L_cb

  double gamma(int a, int b, int c) const {
    return christoffel[(a * dim + b) * dim + c];
  }
  // Gamma^a_bc v^b w^c
  Vec contract(const Vec& v, const Vec& w) const;
};

CurvatureData curvature(const MetricField& m, const ChartPoint& x);

// The field x -> Omega(x)^2 g(x).
MetricField conformal_rescale(const MetricField& m,
                              const ConformalFactor& omega);

struct ConformalData {
  TangentVector u_hat;
  TangentVector a_hat;
  Mat schouten_hat;
};

// Applies the transformation rules for u, a and the Schouten tensor under
// g -> Omega^2 g. Requires g(u,u) = 1 and g(u,a) = 0 to 1e-8.
ConformalData transform_conformal_data(const MetricField& m,
                                       const ConformalFactor& omega,
                                       const ChartPoint& x,
                                       const TangentVector& u,
                                       const TangentVector& a);

}  // namespace cgeo
