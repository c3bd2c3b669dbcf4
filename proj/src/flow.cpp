#include "cgeo/flow.hpp"

#include "cgeo/error.hpp"
#include "cgeo/space_forms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

namespace cgeo {

void IntegratorConfig::validate() const {
  auto bad = [](const char* what) {
    throw Error(Errc::InvalidArgument, what);
  };
  if (!(rel_tol > 0.0)) bad("rel_tol must be positive");
  if (!(abs_tol > 0.0)) bad("abs_tol must be positive");
  if (!(max_step > 0.0)) bad("max_step must be positive");
  if (!(initial_step > 0.0)) bad("initial_step must be positive");
  if (max_steps <= 0) bad("max_steps must be positive");
}

Residuals constraint_residuals(const Mat& g, const CGState& s) {
  return {std::abs(inner(g, s.u, s.u) - 1.0), std::abs(inner(g, s.u, s.a))};
}

CGState cg_rhs(const MetricField& m, const CGState& s) {
  const CurvatureData cd = curvature(m, s.x);
  CGState r;
  r.x = s.u;
  if (m.kind() == MetricKind::Euclidean) {
    r.u = s.a;
    r.a = -s.a.squaredNorm() * s.u;
    return r;
  }
  r.u = s.a - cd.contract(s.u, s.u);
  const double aa = inner(cd.g, s.a, s.a);
  const double luu = s.u.dot(cd.schouten * s.u);
  r.a = -cd.contract(s.u, s.a) - (aa + luu) * s.u + cd.schouten_endo * s.u;
  return r;
}

// ---------------------------------------------------------------------------
// Trace

std::size_t Trace::segment(double t) const {
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  std::size_t k = it == t_.begin() ? 0 : std::size_t(it - t_.begin()) - 1;
  return std::min(k, t_.size() - 2);
}

namespace {

Vec hermite(const Vec& y0, const Vec& f0, const Vec& y1, const Vec& f1,
            double h, double s) {
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * y0 + (h10 * h) * f0 + h01 * y1 + (h11 * h) * f1;
}

}  // namespace

CGState Trace::state_at(double t) const {
  if (t_.size() == 1) return states_.front();
  t = std::clamp(t, t_.front(), t_.back());
  const std::size_t k = segment(t);
  const double h = t_[k + 1] - t_[k];
  const double s = (t - t_[k]) / h;
  const CGState& y0 = states_[k];
  const CGState& y1 = states_[k + 1];
  const CGState& f0 = derivs_[k];
  const CGState& f1 = derivs_[k + 1];
  return {hermite(y0.x, f0.x, y1.x, f1.x, h, s),
          hermite(y0.u, f0.u, y1.u, f1.u, h, s),
          hermite(y0.a, f0.a, y1.a, f1.a, h, s)};
}

ChartPoint Trace::position_at(double t) const {
  if (t_.size() == 1) return states_.front().x;
  t = std::clamp(t, t_.front(), t_.back());
  const std::size_t k = segment(t);
  const double h = t_[k + 1] - t_[k];
  return hermite(states_[k].x, derivs_[k].x, states_[k + 1].x,
                 derivs_[k + 1].x, h, (t - t_[k]) / h);
}

void Trace::write_csv(std::ostream& os) const {
  os << "t";
  for (const char* p : {"x", "u", "a"}) {
    for (int i = 1; i <= dim_; ++i) os << ',' << p << i;
  }
  os << ",res_unit,res_perp\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t k = 0; k < t_.size(); ++k) {
    put(t_[k]);
    for (const Vec* v : {&states_[k].x, &states_[k].u, &states_[k].a}) {
      for (int i = 0; i < dim_; ++i) {
        os << ',';
        put((*v)(i));
      }
    }
    os << ',';
    put(res_unit_[k]);
    os << ',';
    put(res_perp_[k]);
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)

class TraceBuilder {
 public:
  TraceBuilder(int d) { trace_.dim_ = d; }

  void push(double t, const CGState& s, const CGState& f, Residuals res) {
    trace_.t_.push_back(t);
    trace_.states_.push_back(s);
    trace_.derivs_.push_back(f);
    trace_.res_unit_.push_back(res.unit);
    trace_.res_perp_.push_back(res.perp);
    trace_.max_res_unit_ = std::max(trace_.max_res_unit_, res.unit);
    trace_.max_res_perp_ = std::max(trace_.max_res_perp_, res.perp);
  }
  void drift(Residuals r) {
    trace_.max_drift_unit_ = std::max(trace_.max_drift_unit_, r.unit);
    trace_.max_drift_perp_ = std::max(trace_.max_drift_perp_, r.perp);
  }
  void count(bool accepted) {
    (accepted ? trace_.accepted_ : trace_.rejected_)++;
  }
  Trace finish() { return std::move(trace_); }

 private:
  Trace trace_;
};

namespace {

// The system is autonomous, so the stage nodes c_i are not needed.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                 a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

// Packs (x, u[, a]) into one vector.
struct System {
  const MetricField& m;
  bool geodesic;
  int d;

  int size() const { return geodesic ? 2 * d : 3 * d; }

  StateVec pack(const CGState& s) const {
    StateVec y(size());
    y.segment(0, d) = s.x;
    y.segment(d, d) = s.u;
    if (!geodesic) y.segment(2 * d, d) = s.a;
    return y;
  }
  CGState unpack(const StateVec& y) const {
    CGState s{y.segment(0, d), y.segment(d, d),
              geodesic ? Vec(Vec::Zero(d)) : Vec(y.segment(2 * d, d))};
    return s;
  }
  StateVec rhs(const StateVec& y) const {
    const CGState s = unpack(y);
    if (!geodesic) return pack(cg_rhs(m, s));
    CGState r;
    r.x = s.u;
    if (m.kind() == MetricKind::Euclidean) {
      r.u = Vec::Zero(d);
    } else {
      r.u = -curvature(m, s.x).contract(s.u, s.u);
    }
    return pack(r);
  }
};

// Failures that mean "this trial step left the region where the metric is
// usable": the step is rejected and shrunk rather than aborting.
bool is_chart_failure(const Error& e) {
  switch (e.code()) {
    case Errc::DomainError:
    case Errc::NotPositiveDefinite:
    case Errc::NonPositiveFactor:
    case Errc::EvalDomainError:
      return true;
    default:
      return false;
  }
}

void project(const Mat& g, CGState& s, bool geodesic) {
  s.u /= norm(g, s.u);
  if (!geodesic) s.a -= inner(g, s.u, s.a) * s.u;
}

Trace run(const System& sys, const CGState& s0, double t_end,
          const IntegratorConfig& cfg) {
  cfg.validate();
  if (!(t_end > 0.0) || !std::isfinite(t_end)) {
    throw Error(Errc::InvalidArgument, "t_end must be positive and finite");
  }
  const int d = sys.d;
  auto check_len = [d](const Vec& v, const char* what) {
    if (v.size() != d) {
      throw Error(Errc::InvalidArgument,
                  std::string(what) + " has wrong dimension");
    }
    if (!v.allFinite()) {
      throw Error(Errc::InvalidArgument, std::string(what) + " is not finite");
    }
  };
  check_len(s0.x, "x");
  check_len(s0.u, "u");
  if (!sys.geodesic) check_len(s0.a, "a");

  const Mat g0 = sys.m.metric(s0.x);
  CGState start = s0;
  if (sys.geodesic) start.a = Vec::Zero(d);
  Residuals r0 = constraint_residuals(g0, start);
  if (r0.unit > 1e-8 || r0.perp > 1e-8) {
    std::ostringstream os;
    os << "initial data violates g(u,u) = 1 / g(u,a) = 0: residuals "
       << r0.unit << ", " << r0.perp;
    throw Error(Errc::ConstraintViolation, os.str());
  }

  TraceBuilder out(d);
  StateVec y = sys.pack(start);
  StateVec k1 = sys.rhs(y);
  out.push(0.0, start, sys.unpack(k1), r0);

  double t = 0.0;
  double h = std::min({cfg.initial_step, cfg.max_step, t_end});
  bool last_rejected = false;
  std::int64_t attempts = 0;
  const int n = sys.size();
  StateVec k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), y5(n);

  while (t < t_end) {
    if (++attempts > cfg.max_steps) {
      throw Error(Errc::MaxStepsExceeded,
                  "exceeded " + std::to_string(cfg.max_steps) +
                      " steps at t = " + std::to_string(t));
    }
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      std::ostringstream os;
      os << "step size underflow at t = " << t << ", x = ("
         << sys.unpack(y).x.transpose() << ")";
      throw Error(Errc::StepFailure, os.str());
    }
    const bool clipped = t + h >= t_end;
    if (clipped) h = t_end - t;

    double err = 0.0;
    bool ok = true;
    try {
      yt = y + h * a21 * k1;
      k2 = sys.rhs(yt);
      yt = y + h * (a31 * k1 + a32 * k2);
      k3 = sys.rhs(yt);
      yt = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
      k4 = sys.rhs(yt);
      yt = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      k5 = sys.rhs(yt);
      yt = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      k6 = sys.rhs(yt);
      y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = sys.rhs(y5);
      for (int i = 0; i < n; ++i) {
        const double e = h * (e1 * k1(i) + e3 * k3(i) + e4 * k4(i) +
                              e5 * k5(i) + e6 * k6(i) + e7 * k7(i));
        const double sc = cfg.abs_tol +
                          cfg.rel_tol * std::max(std::abs(y(i)), std::abs(y5(i)));
        err = std::max(err, std::abs(e) / sc);
      }
      if (!std::isfinite(err)) ok = false;
    } catch (const Error& e) {
      if (!is_chart_failure(e)) throw;
      ok = false;
    }

    if (!ok || err > 1.0) {
      out.count(false);
      h *= ok ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
      last_rejected = true;
      continue;
    }

    t = clipped ? t_end : t + h;
    CGState s = sys.unpack(y5);
    CGState f = sys.unpack(k7);
    const Mat g = sys.m.metric(s.x);
    out.drift(constraint_residuals(g, s));
    if (cfg.projection) {
      project(g, s, sys.geodesic);
      y = sys.pack(s);
    } else {
      y = y5;
    }
    k1 = k7;
    out.push(t, s, f, constraint_residuals(g, s));
    out.count(true);

    double factor = err == 0.0 ? 5.0 : 0.9 * std::pow(err, -0.2);
    factor = std::clamp(factor, 0.2, 5.0);
    if (last_rejected) factor = std::min(factor, 1.0);
    last_rejected = false;
    h = std::min(h * factor, cfg.max_step);
  }
  return out.finish();
}

}  // namespace

Trace integrate_cg(const MetricField& m, const CGState& s0, double t_end,
                   const IntegratorConfig& cfg) {
  return run(System{m, false, m.dim()}, s0, t_end, cfg);
}

Trace integrate_metric_geodesic(const MetricField& m, const ChartPoint& x0,
                                const TangentVector& u0, double t_end,
                                const IntegratorConfig& cfg) {
  CGState s{x0, u0, Vec::Zero(m.dim())};
  return run(System{m, true, m.dim()}, s, t_end, cfg);
}

// ---------------------------------------------------------------------------

namespace {

// sin(z)/z and (1 - cos z)/z^2 without cancellation near 0
double sinc(double z) {
  if (std::abs(z) < 1e-4) return 1.0 - z * z / 6.0;
  return std::sin(z) / z;
}

}  // namespace

ChartPoint euclid_circle(const ChartPoint& p, const TangentVector& u0,
                         const TangentVector& a0, double t) {
  const double z = a0.norm() * t;
  const double half = sinc(0.5 * z);
  return p + (t * sinc(z)) * u0 + (0.5 * t * t * half * half) * a0;
}

CGState conformal_pushforward(const CGState& s, const MetricField& m,
                              const ConformalFactor& omega) {
  const Jet2 om = omega.eval(s.x);
  const MetricEval me = eval_metric(m, s.x);
  const Vec ups = om.grad / om.value;
  const Vec ups_sharp = me.g_inv * ups;
  CGState r;
  r.x = s.x;
  r.u = s.u / om.value;
  r.a = (s.a - ups_sharp + ups.dot(s.u) * s.u) / (om.value * om.value);
  return r;
}

double distance_to_trace(const Trace& tr, const ChartPoint& q) {
  const auto& ts = tr.times();
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double dk = (tr.state(k).x - q).squaredNorm();
    if (dk < best_d) best_d = dk, best = k;
  }
  if (ts.size() == 1) return std::sqrt(best_d);
  // golden-section search on the two neighbouring segments
  double lo = ts[best == 0 ? 0 : best - 1];
  double hi = ts[std::min(best + 1, ts.size() - 1)];
  auto f = [&](double t) { return (tr.position_at(t) - q).squaredNorm(); };
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
  double fa = f(a), fb = f(b);
  for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
    if (fa < fb) {
      hi = b, b = a, fb = fa;
      a = hi - phi * (hi - lo), fa = f(a);
    } else {
      lo = a, a = b, fa = fb;
      b = lo + phi * (hi - lo), fb = f(b);
    }
  }
  return std::sqrt(std::min({best_d, fa, fb}));
}

double one_sided_hausdorff(const Trace& from, const Trace& to) {
  double h = 0.0;
  for (std::size_t k = 0; k < from.size(); ++k) {
    h = std::max(h, distance_to_trace(to, from.state(k).x));
  }
  return h;
}

ChartPoint metric_exp(const MetricField& m, const ChartPoint& x,
                      const TangentVector& v, const IntegratorConfig& cfg) {
  if (v.size() != m.dim() || x.size() != m.dim()) {
    throw Error(Errc::InvalidArgument, "metric_exp: dimension mismatch");
  }
  switch (m.kind()) {
    case MetricKind::Euclidean:
      return x + v;
    case MetricKind::Sphere:
      return space_forms::sphere_exp(x, v, m.radius());
    case MetricKind::Hyperbolic:
      return space_forms::hyperbolic_exp(x, v, m.radius());
    default:
      break;
  }
  const double len = norm(m.metric(x), v);
  if (len == 0.0) return x;
  const Trace tr = integrate_metric_geodesic(m, x, v / len, len, cfg);
  return tr.state(tr.size() - 1).x;
}

}  // namespace cgeo
