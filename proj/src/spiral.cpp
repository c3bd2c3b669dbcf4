#include "cgeo/spiral.hpp"

#include "cgeo/error.hpp"
#include "cgeo/parallel.hpp"
#include "cgeo/space_forms.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

namespace cgeo {

using ojson = nlohmann::ordered_json;

namespace {

ojson vec_json(const Vec& v) {
  auto a = ojson::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

bool closed_form(MetricKind k) {
  return k == MetricKind::Euclidean || k == MetricKind::Sphere ||
         k == MetricKind::Hyperbolic;
}

}  // namespace

double distance_validity_radius(const MetricField& m,
                                const DistanceOptions& opt) {
  return closed_form(m.kind()) ? std::numeric_limits<double>::infinity()
                               : opt.safe_radius;
}

double riemannian_distance(const MetricField& m, const ChartPoint& x,
                           const ChartPoint& y, const DistanceOptions& opt) {
  if (x.size() != m.dim() || y.size() != m.dim()) {
    throw Error(Errc::InvalidArgument, "point dimension does not match metric");
  }
  for (const auto* q : {&x, &y}) {
    if (!m.in_domain(*q)) throw Error(Errc::DomainError, "point outside chart");
  }
  switch (m.kind()) {
    case MetricKind::Euclidean:
      return (x - y).norm();
    case MetricKind::Sphere:
      return space_forms::sphere_distance(x, y, m.radius());
    case MetricKind::Hyperbolic:
      return space_forms::hyperbolic_distance(x, y, m.radius());
    default:
      break;
  }
  const double chart = (x - y).norm();
  if (chart > opt.safe_radius) {
    throw Error(Errc::OutOfSafeRadius,
                "chart distance " + std::to_string(chart) +
                    " exceeds the shooting radius " +
                    std::to_string(opt.safe_radius));
  }
  if (chart == 0.0) return 0.0;

  const int d = m.dim();
  Vec v = y - x;
  try {
    auto F = [&](const Vec& w) -> Vec {
      return metric_exp(m, x, w, opt.integrator) - y;
    };
    Vec f = F(v);
    for (int it = 0; it < 40 && f.norm() > 1e-10 * (1.0 + y.norm()); ++it) {
      Mat J(d, d);
      const double step = 1e-7 * std::max(1.0, v.norm());
      for (int c = 0; c < d; ++c) {
        Vec w = v;
        w(c) += step;
        J.col(c) = (F(w) - f) / step;
      }
      const Vec dv = J.fullPivLu().solve(-f);
      double lam = 1.0;
      for (int ls = 0; ls < 20; ++ls, lam *= 0.5) {
        const Vec fn = F(v + lam * dv);
        if (fn.norm() < f.norm()) {
          v += lam * dv;
          f = fn;
          break;
        }
      }
      if (lam < 1e-5) break;
    }
    if (f.norm() > 1e-8 * (1.0 + y.norm())) {
      throw Error(Errc::OutOfSafeRadius, "geodesic shooting did not converge");
    }
  } catch (const Error& e) {
    if (e.code() == Errc::OutOfSafeRadius) throw;
    throw Error(Errc::OutOfSafeRadius,
                std::string("geodesic shooting failed: ") + e.what());
  }
  return norm(m.metric(x), v);
}

std::vector<BallEvent> ball_events(const Trace& trace, const ChartPoint& center,
                                   double radius, const MetricField& m,
                                   const DistanceOptions& opt) {
  if (!(radius > 0.0)) throw Error(Errc::InvalidArgument, "radius must be positive");
  auto f = [&](double t) {
    return riemannian_distance(m, trace.position_at(t), center, opt) - radius;
  };
  std::vector<BallEvent> out;
  const auto& ts = trace.times();
  // Arc-length spacing below radius/4 so a crossing pair cannot hide inside
  // one probe interval unless it only grazes the ball.
  const double probe = 0.25 * radius;
  double t_prev = ts.front();
  double f_prev = f(t_prev);
  for (std::size_t k = 1; k < ts.size(); ++k) {
    const int sub = std::max(1, int(std::ceil((ts[k] - ts[k - 1]) / probe)));
    for (int j = 1; j <= sub; ++j) {
      const double t = j == sub ? ts[k] : ts[k - 1] + (ts[k] - ts[k - 1]) * j / sub;
      const double ft = f(t);
      if ((f_prev < 0.0) != (ft < 0.0)) {
        double lo = t_prev, hi = t;
        const bool entering = ft < 0.0;
        while (hi - lo > 1e-8) {
          const double mid = 0.5 * (lo + hi);
          ((f(mid) < 0.0) == entering ? hi : lo) = mid;
        }
        out.push_back({entering ? EventKind::Entry : EventKind::Exit, hi,
                       trace.position_at(hi)});
      }
      t_prev = t;
      f_prev = ft;
    }
  }
  return out;
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::NeverEntered: return "NEVER_ENTERED";
    case Verdict::ExitedAfterLastEntry: return "EXITED_AFTER_LAST_ENTRY";
    case Verdict::TrappedAtHorizon: return "TRAPPED_AT_HORIZON";
  }
  return "?";
}

SpiralReport spiral_diagnostic(const Trace& trace, const ChartPoint& p_star,
                               const std::vector<double>& radii,
                               const MetricField& m,
                               const DistanceOptions& opt) {
  SpiralReport rep;
  rep.center = p_star;
  rep.t_end = trace.t_end();
  for (double r : radii) {
    RadiusVerdict v;
    v.radius = r;
    v.events = ball_events(trace, p_star, r, m, opt);
    v.starts_inside =
        riemannian_distance(m, trace.state(0).x, p_star, opt) < r;
    for (const auto& e : v.events) {
      if (e.kind == EventKind::Entry) {
        ++v.entries;
        v.last_entry_t = e.t;
      } else {
        ++v.exits;
      }
    }
    const bool ends_inside =
        v.events.empty() ? v.starts_inside
                         : v.events.back().kind == EventKind::Entry;
    if (!v.starts_inside && v.entries == 0) {
      v.verdict = Verdict::NeverEntered;
    } else if (ends_inside) {
      v.verdict = Verdict::TrappedAtHorizon;
      v.remaining_arc = trace.t_end() - v.last_entry_t;
    } else {
      v.verdict = Verdict::ExitedAfterLastEntry;
    }
    rep.radii.push_back(std::move(v));
  }
  return rep;
}

bool trapped_cleared(const RadiusVerdict& trapped, const Trace& longer,
                     const ChartPoint& p_star, const MetricField& m,
                     const DistanceOptions& opt) {
  if (trapped.verdict != Verdict::TrappedAtHorizon) return true;
  for (const auto& e : ball_events(longer, p_star, trapped.radius, m, opt)) {
    if (e.kind == EventKind::Exit && e.t > trapped.last_entry_t) return true;
  }
  return false;
}

void write_json(std::ostream& os, const SpiralReport& rep) {
  ojson j;
  j["center"] = vec_json(rep.center);
  j["t_end"] = rep.t_end;
  auto arr = ojson::array();
  for (const auto& v : rep.radii) {
    ojson e;
    e["radius"] = v.radius;
    e["verdict"] = std::string(verdict_name(v.verdict));
    e["starts_inside"] = v.starts_inside;
    e["entries"] = v.entries;
    e["exits"] = v.exits;
    e["last_entry_t"] = v.last_entry_t;
    if (v.verdict == Verdict::TrappedAtHorizon) {
      e["remaining_arc"] = v.remaining_arc;
      e["caveat"] = "not exited within this trace";
    }
    auto ev = ojson::array();
    for (const auto& b : v.events) {
      ev.push_back({{"kind", b.kind == EventKind::Entry ? "entry" : "exit"},
                    {"t", b.t},
                    {"point", vec_json(b.point)}});
    }
    e["events"] = std::move(ev);
    arr.push_back(std::move(e));
  }
  j["radii"] = std::move(arr);
  os << j.dump(1) << '\n';
}

// ---------------------------------------------------------------------------
// Heart sizes

namespace {

using V3 = Eigen::Vector3d;

std::vector<V3> fibonacci_sphere(int n) {
  std::vector<V3> out;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    out.emplace_back(z, rho * std::cos(golden * i), rho * std::sin(golden * i));
  }
  return out;
}

// Unit vectors with non-negative first component: an equator ring followed
// by a Fibonacci cover of the open hemisphere.
std::vector<V3> hemisphere(int total, int equator) {
  std::vector<V3> out;
  for (int i = 0; i < equator; ++i) {
    const double a = 2.0 * M_PI * i / equator;
    out.emplace_back(0.0, std::cos(a), std::sin(a));
  }
  const int rest = total - equator;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < rest; ++i) {
    const double z = (i + 0.5) / rest;
    const double rho = std::sqrt(1.0 - z * z);
    out.emplace_back(z, rho * std::cos(golden * i), rho * std::sin(golden * i));
  }
  return out;
}

// Every ball in the heart has diameter below the longest exp arc, 4 pi r. On
// the sphere, balls past the convexity radius pi R / 2 wrap around and the
// containment test stops being monotone in the radius.
double search_limit(const MetricField& m, double r) {
  double hi = 4.0 * M_PI * r;
  if (m.kind() == MetricKind::Sphere) hi = std::min(hi, 0.5 * M_PI * m.radius());
  return hi;
}

struct SizeContext {
  const MetricField& m;
  const HeartSample& h;
  const SizeConfig& cfg;
  double tol;
  double limit;

  SizeContext(const MetricField& mm, const HeartSample& hh, const SizeConfig& c)
      : m(mm), h(hh), cfg(c), tol(c.boundary_fraction * hh.r()),
        limit(search_limit(mm, hh.r())) {
    if (m.dim() != 3) throw Error(Errc::Unsupported, "heart sizes need d = 3");
    if (h.max_chord() > h.chord_bound()) {
      throw Error(Errc::MeshTooCoarse,
                  "heart mesh chord " + std::to_string(h.max_chord()) +
                      " exceeds its bound " + std::to_string(h.chord_bound()));
    }
    if (c.sphere_rings < 2 || c.sphere_azimuths < 3 || c.cap_samples < 1 || c.tangent_directions < 1 ||
        c.center_directions < c.tangent_directions || c.disk_rings < 1 ||
        c.disk_spokes < 3 || c.bisection_steps < 1) {
      throw Error(Errc::InvalidArgument, "invalid size sampling parameters");
    }
  }

  bool covered(const ChartPoint& x) const {
    return m.in_domain(x) && h.in_closure(x, tol);
  }

  // Geodesic ball of radius rho centred at exp_p(rho v), v in frame coords.
  // Geodesic ball of radius rho centred at c = exp_p(rho v), v in frame
  // coordinates. Boundary samples sit on rings around the direction from c
  // back to p, spaced quadratically so they crowd the cusp region, with one
  // azimuth aligned to u0.
  bool ball_inside(const V3& dir, double rho) const {
    try {
      const Vec v = h.frame() * Vec(dir);
      const ChartPoint c = metric_exp(m, h.p(), rho * v, cfg.integrator);
      if (!m.in_domain(c)) return false;
      const Mat gc = m.metric(c);
      Mat seed(3, 3);
      seed.col(0) = h.p() - c;
      seed.col(1) = h.u0();
      seed.col(2) = h.frame().col(2);
      const Mat fc = orthonormal_frame(gc, seed);
      const int K = cfg.sphere_rings, M = cfg.sphere_azimuths;
      for (int k = 1; k <= K; ++k) {
        const double gam = M_PI * double(k) * k / (double(K) * K);
        const int count = k == K ? 1 : M;
        for (int j = 0; j < count; ++j) {
          const double a = 2.0 * M_PI * j / count;
          const Vec w = std::cos(gam) * fc.col(0) +
                        std::sin(gam) * (std::cos(a) * fc.col(1) +
                                         std::sin(a) * fc.col(2));
          if (!covered(metric_exp(m, c, rho * w, cfg.integrator))) return false;
        }
      }
      return true;
    } catch (const Error& e) {
      if (e.code() == Errc::StepFailure || e.code() == Errc::DomainError ||
          e.code() == Errc::NotPositiveDefinite) {
        return false;
      }
      throw;
    }
  }

  bool half_ball_inside(double rho) const {
    try {
      auto at = [&](const V3& w, double s) {
        return metric_exp(m, h.p(), s * (h.frame() * Vec(w)), cfg.integrator);
      };
      for (const auto& w : hemisphere(cfg.cap_samples + cfg.disk_spokes,
                                      cfg.disk_spokes)) {
        if (!covered(at(w, rho))) return false;
      }
      for (int k = 1; k < cfg.disk_rings; ++k) {
        for (int j = 0; j < cfg.disk_spokes; ++j) {
          const double a = 2.0 * M_PI * j / cfg.disk_spokes;
          if (!covered(at(V3(0.0, std::cos(a), std::sin(a)),
                          rho * k / cfg.disk_rings))) {
            return false;
          }
        }
      }
      return true;
    } catch (const Error& e) {
      if (e.code() == Errc::StepFailure || e.code() == Errc::DomainError ||
          e.code() == Errc::NotPositiveDefinite) {
        return false;
      }
      throw;
    }
  }

  // Largest rho in [0, limit] passing `ok`, assuming monotonicity.
  std::pair<double, double> bisect(const std::function<bool(double)>& ok) const {
    double lo = 0.0, hi = limit;
    if (ok(hi)) return {hi, 0.0};
    for (int i = 0; i < cfg.bisection_steps; ++i) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? lo : hi) = mid;
    }
    return {lo, hi - lo};
  }

  std::pair<double, double> family(int total, int equator) const {
    const auto dirs = hemisphere(total, equator);
    return bisect([&](double rho) {
      for (const auto& d : dirs) {
        if (!ball_inside(d, rho)) return false;
      }
      return true;
    });
  }
};

}  // namespace

double heart_size_R1(const MetricField& m, const HeartSample& h,
                     const SizeConfig& cfg) {
  SizeContext ctx(m, h, cfg);
  return ctx.family(cfg.tangent_directions, cfg.tangent_directions).first;
}

double heart_size_R2(const MetricField& m, const HeartSample& h,
                     const SizeConfig& cfg) {
  SizeContext ctx(m, h, cfg);
  return ctx.bisect([&](double rho) { return ctx.half_ball_inside(rho); }).first;
}

SizeEstimate heart_size_R(const MetricField& m, const HeartSample& h,
                          const SizeConfig& cfg) {
  SizeContext ctx(m, h, cfg);
  SizeEstimate s;
  const auto r1 = ctx.family(cfg.tangent_directions, cfg.tangent_directions);
  const auto r2 = ctx.bisect([&](double rho) { return ctx.half_ball_inside(rho); });
  const auto r = ctx.family(cfg.center_directions, cfg.tangent_directions);
  s.R1 = r1.first;
  s.R2 = r2.first;
  s.R = r.first;
  s.bracket = std::max({r1.second, r2.second, r.second});
  s.search_limit = ctx.limit;
  s.mesh_resolution = h.resolution();
  s.mesh_vertices = h.vertex_count();
  s.max_chord = h.max_chord();
  s.cusp_radius = h.cusp_radius();
  s.boundary_tol = ctx.tol;
  s.center_directions = cfg.center_directions;
  s.tangent_directions = cfg.tangent_directions;
  s.sphere_samples = (cfg.sphere_rings - 1) * cfg.sphere_azimuths + 1;
  return s;
}

void write_json(std::ostream& os, const SizeEstimate& s) {
  ojson j;
  j["R"] = s.R;
  j["R1"] = s.R1;
  j["R2"] = s.R2;
  j["consistent"] = std::min(s.R1, 0.5 * s.R2) <= s.R + s.bracket;
  j["bracket"] = s.bracket;
  j["search_limit"] = s.search_limit;
  j["sampling"] = {{"mesh_resolution", s.mesh_resolution},
                   {"mesh_vertices", s.mesh_vertices},
                   {"max_chord", s.max_chord},
                   {"cusp_radius", s.cusp_radius},
                   {"boundary_tol", s.boundary_tol},
                   {"center_directions", s.center_directions},
                   {"tangent_directions", s.tangent_directions},
                   {"sphere_samples", s.sphere_samples}};
  os << j.dump(1) << '\n';
}

BoundScanReport compact_bound_scan(const MetricField& m,
                                   const BoundScanConfig& cfg) {
  const int d = m.dim();
  if (d != 3) throw Error(Errc::Unsupported, "bound scans need d = 3");
  if (cfg.lo.size() != d || cfg.hi.size() != d) {
    throw Error(Errc::InvalidArgument, "region box has wrong dimension");
  }
  for (int k = 0; k < d; ++k) {
    if (!(cfg.lo(k) <= cfg.hi(k))) {
      throw Error(Errc::InvalidArgument, "region box is empty");
    }
  }
  if (cfg.points_per_axis < 1 || cfg.directions < 1) {
    throw Error(Errc::InvalidArgument, "region grid is empty");
  }
  const int n = cfg.points_per_axis;
  std::vector<ChartPoint> points;
  for (int i = 0; i < n * n * n; ++i) {
    Vec x(3);
    int rem = i;
    for (int k = 0; k < 3; ++k) {
      const double f = n == 1 ? 0.5 : double(rem % n) / (n - 1);
      x(k) = cfg.lo(k) + f * (cfg.hi(k) - cfg.lo(k));
      rem /= n;
    }
    points.push_back(x);
  }
  std::vector<V3> dirs;
  if (cfg.directions == 26) {
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c)
          if (a || b || c) dirs.push_back(V3(a, b, c).normalized());
  } else {
    dirs = fibonacci_sphere(cfg.directions);
  }

  BoundScanReport rep;
  rep.entries.resize(points.size() * dirs.size());
  parallel_for(rep.entries.size(), [&](std::size_t i) {
    auto& e = rep.entries[i];
    e.p = points[i / dirs.size()];
    const Vec dir = Vec(dirs[i % dirs.size()]);
    e.u0 = dir / norm(m.metric(e.p), dir);
    const HeartSample h = trace_heart_boundary(m, e.p, e.u0, cfg.r, cfg.heart);
    e.R = heart_size_R(m, h, cfg.size).R;
  });
  const auto best = std::min_element(
      rep.entries.begin(), rep.entries.end(),
      [](const BoundScanEntry& a, const BoundScanEntry& b) { return a.R < b.R; });
  rep.min_R = best->R;
  rep.argmin_p = best->p;
  rep.argmin_u0 = best->u0;
  rep.positive = rep.min_R > 0.0;
  for (int k = 0; k < d; ++k) {
    if (n > 1) rep.grid_spacing = std::max(rep.grid_spacing, (cfg.hi(k) - cfg.lo(k)) / (n - 1));
  }
  return rep;
}

void write_json(std::ostream& os, const BoundScanReport& rep) {
  ojson j;
  j["min_R"] = rep.min_R;
  j["argmin_p"] = vec_json(rep.argmin_p);
  j["argmin_u0"] = vec_json(rep.argmin_u0);
  j["grid_spacing"] = rep.grid_spacing;
  j["positive"] = rep.positive;
  auto arr = ojson::array();
  for (const auto& e : rep.entries) {
    arr.push_back({{"p", vec_json(e.p)}, {"u0", vec_json(e.u0)}, {"R", e.R}});
  }
  j["entries"] = std::move(arr);
  os << j.dump(1) << '\n';
}

}  // namespace cgeo
