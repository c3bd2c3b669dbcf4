#pragma once

// Conformal geodesics and metric geodesics as first-order systems, integrated
// with an embedded Dormand-Prince 5(4) pair.

#include "cgeo/metric.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace cgeo {

struct CGState {
  ChartPoint x;
  TangentVector u;  // unit tangent
  TangentVector a;  // perpendicular acceleration
};

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.5;
  double initial_step = 1e-3;
  bool projection = true;
  std::int64_t max_steps = 2'000'000;

  void validate() const;
};

// Accepted steps of one integration. Sample k holds arc length t[k], the state
// and its derivative (for Hermite dense output), and constraint residuals
// after projection.
class Trace {
 public:
  int dim() const { return dim_; }
  std::size_t size() const { return t_.size(); }
  double t_begin() const { return t_.front(); }
  double t_end() const { return t_.back(); }

  const std::vector<double>& times() const { return t_; }
  const CGState& state(std::size_t k) const { return states_[k]; }
  const CGState& derivative(std::size_t k) const { return derivs_[k]; }
  double res_unit(std::size_t k) const { return res_unit_[k]; }
  double res_perp(std::size_t k) const { return res_perp_[k]; }

  // Cubic Hermite interpolation between stored samples; t is clamped to the
  // traced interval.
  CGState state_at(double t) const;
  ChartPoint position_at(double t) const;

  std::int64_t accepted_steps() const { return accepted_; }
  std::int64_t rejected_steps() const { return rejected_; }
  double max_res_unit() const { return max_res_unit_; }
  double max_res_perp() const { return max_res_perp_; }
  // Largest residuals seen before projection (equal to the above when
  // projection is off).
  double max_drift_unit() const { return max_drift_unit_; }
  double max_drift_perp() const { return max_drift_perp_; }

  // t, x1..xd, u1..ud, a1..ad, res_unit, res_perp
  void write_csv(std::ostream& os) const;

 private:
  friend class TraceBuilder;

  std::size_t segment(double t) const;

  int dim_ = 0;
  std::vector<double> t_;
  std::vector<CGState> states_;
  std::vector<CGState> derivs_;
  std::vector<double> res_unit_;
  std::vector<double> res_perp_;
  std::int64_t accepted_ = 0;
  std::int64_t rejected_ = 0;
  double max_res_unit_ = 0.0;
  double max_res_perp_ = 0.0;
  double max_drift_unit_ = 0.0;
  double max_drift_perp_ = 0.0;
};

// dx = u, du = a - Gamma(u,u), da = -Gamma(u,a) - (g(a,a) + L(u,u)) u + L#u
CGState cg_rhs(const MetricField& m, const CGState& s);

// Throws ConstraintViolation if s0 violates |g(u,u)-1| or |g(u,a)| by more
// than 1e-8, StepFailure on step-size underflow (typically at the chart
// boundary) and MaxStepsExceeded.
Trace integrate_cg(const MetricField& m, const CGState& s0, double t_end,
                   const IntegratorConfig& cfg = {});

// a is identically zero in the returned samples.
Trace integrate_metric_geodesic(const MetricField& m, const ChartPoint& x0,
                                const TangentVector& u0, double t_end,
                                const IntegratorConfig& cfg = {});

// Euclidean conformal geodesic (a circle or a line) at arc length t.
ChartPoint euclid_circle(const ChartPoint& p, const TangentVector& u0,
                         const TangentVector& a0, double t);

// (x, u, a) under g  ->  (x, u/Omega, Omega^-2 (a - Upsilon# + Upsilon(u) u))
// under Omega^2 g.
CGState conformal_pushforward(const CGState& s, const MetricField& m,
                              const ConformalFactor& omega);

// Endpoint of the metric geodesic with initial velocity v. Closed form for
// euclidean, sphere and hyperbolic kinds, integrated otherwise.
ChartPoint metric_exp(const MetricField& m, const ChartPoint& x,
                      const TangentVector& v, const IntegratorConfig& cfg = {});

// Chart-coordinate distance from q to the curve of `tr` (dense output),
// refined around the nearest stored sample.
double distance_to_trace(const Trace& tr, const ChartPoint& q);

// max over samples q of `from` of distance_to_trace(to, q).
double one_sided_hausdorff(const Trace& from, const Trace& to);

// Residuals |g(u,u) - 1| and |g(u,a)|.
struct Residuals {
  double unit = 0.0;
  double perp = 0.0;
};
Residuals constraint_residuals(const Mat& g, const CGState& s);

}  // namespace cgeo
