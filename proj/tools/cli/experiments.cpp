#include "cli/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

namespace cgeo::cli {

ojson vec_json(const Vec& v) {
  ojson a = ojson::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ojson state_json(const CGState& s) {
  ojson j;
  j["x"] = vec_json(s.x);
  j["u"] = vec_json(s.u);
  j["a"] = vec_json(s.a);
  return j;
}

ojson injectivity_json(const InjectivityReport& rep) {
  ojson j;
  j["est_r"] = rep.est_r;
  j["last_clean_r"] = rep.last_clean_r;
  j["levels_scanned"] = rep.levels_scanned;
  j["samples_per_level"] = rep.samples_per_level;
  j["chart_exit"] = rep.chart_exit;
  if (rep.witness) {
    const auto& w = *rep.witness;
    ojson c;
    c["r"] = w.r;
    c["A1"] = vec_json(w.A1);
    c["A2"] = vec_json(w.A2);
    c["image1"] = vec_json(w.image1);
    c["image2"] = vec_json(w.image2);
    c["domain_distance"] = w.domain_distance;
    c["image_distance"] = w.image_distance;
    j["witness"] = std::move(c);
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

ojson exit_json(const HeartExit& e) {
  ojson j;
  j["t_exit"] = e.t_exit;
  j["point"] = vec_json(e.point);
  j["domain"] = vec_json(e.domain);
  j["refined"] = e.refined;
  j["residual"] = e.residual;
  j["within_4pi_r"] = e.within_4pi_r;
  j["within_2pi_r"] = e.within_2pi_r;
  return j;
}

template <class T>
ojson embed(const T& obj) {
  std::ostringstream os;
  if constexpr (requires { obj.write_json(os); }) {
    obj.write_json(os);
  } else {
    write_json(os, obj);
  }
  return ojson::parse(os.str());
}

template ojson embed(const HeartSample&);
template ojson embed(const SizeEstimate&);
template ojson embed(const BoundScanReport&);

CGState random_state(Rng& rng, const MetricField& m, const ChartPoint& x,
                     double a_lo, double a_hi) {
  const int d = m.dim();
  const Mat g = m.metric(x);
  Vec u = rng.normal_vec(d);
  while (u.norm() < 1e-3) u = rng.normal_vec(d);
  u /= norm(g, u);
  Vec a = rng.normal_vec(d);
  a -= inner(g, u, a) * u;
  while (norm(g, a) < 1e-3) {
    a = rng.normal_vec(d);
    a -= inner(g, u, a) * u;
  }
  a *= rng.uniform(a_lo, a_hi) / norm(g, a);
  return {x, u, a};
}

std::pair<TangentVector, TangentVector> unit_pair(const Mat& g, const Vec& u,
                                                  const Vec& a) {
  Mat seed(g.rows(), 2);
  seed.col(0) = u;
  seed.col(1) = a;
  const Mat f = orthonormal_frame(g, seed);
  return {f.col(0), f.col(1)};
}

CardioidDeviation cardioid_deviation(const HeartSample& h) {
  CardioidDeviation out;
  const Vec u = h.u0().normalized();
  for (std::size_t i = 1; i < h.vertex_count(); ++i) {
    const Vec x = h.image(i) - h.p();
    const double rho = x.norm();
    const double phi = std::acos(std::clamp(x.dot(u) / rho, -1.0, 1.0));
    out.max_deviation = std::max(
        out.max_deviation, std::abs(rho - cardioid_boundary(h.r(), phi)));
  }
  out.pole_error =
      (h.image(h.pole_vertex()) - (h.p() + 4 * std::numbers::pi * h.r() * u)).norm();
  return out;
}

NoSpiralRun no_spiral_run(const MetricField& m, const CGState& s0, double t_end,
                          const std::vector<double>& radii,
                          std::vector<ChartPoint> centres, int count,
                          double offset, Rng& rng,
                          const IntegratorConfig& cfg, bool retry) {
  NoSpiralRun run;
  run.start = s0;
  run.t_end = t_end;
  const Trace tr = integrate_cg(m, s0, t_end, cfg);
  run.max_res_unit = tr.max_res_unit();
  run.max_res_perp = tr.max_res_perp();
  if (centres.empty()) {
    for (int k = 0; k < count; ++k) {
      Vec c = tr.position_at(rng.uniform(0.0, t_end)) + rng.in_ball(m.dim(), offset);
      while (!m.in_domain(c)) c = tr.position_at(rng.uniform(0.0, t_end));
      centres.push_back(c);
    }
  }
  std::optional<Trace> longer;
  for (const auto& c : centres) {
    CentreVerdicts cv;
    cv.center = c;
    cv.report = spiral_diagnostic(tr, c, radii, m);
    for (const auto& v : cv.report.radii) {
      bool ok = v.verdict != Verdict::TrappedAtHorizon;
      if (!ok) {
        ++run.truncated;
        if (retry) {
          if (!longer) {
            longer = integrate_cg(m, s0, 2 * t_end, cfg);
            run.max_res_unit = std::max(run.max_res_unit, longer->max_res_unit());
            run.max_res_perp = std::max(run.max_res_perp, longer->max_res_perp());
          }
          ok = trapped_cleared(v, *longer, c, m);
        }
        if (!ok) ++run.unresolved;
      }
      cv.cleared.push_back(ok);
    }
    run.centres.push_back(std::move(cv));
  }
  return run;
}

ojson no_spiral_json(const NoSpiralRun& run) {
  ojson j;
  j["start"] = state_json(run.start);
  j["t_end"] = run.t_end;
  j["max_res_unit"] = run.max_res_unit;
  j["max_res_perp"] = run.max_res_perp;
  j["truncated"] = run.truncated;
  j["unresolved"] = run.unresolved;
  ojson cs = ojson::array();
  for (const auto& c : run.centres) {
    ojson cj;
    cj["center"] = vec_json(c.center);
    ojson rs = ojson::array();
    for (std::size_t i = 0; i < c.report.radii.size(); ++i) {
      const auto& v = c.report.radii[i];
      ojson vj;
      vj["radius"] = v.radius;
      vj["verdict"] = std::string(verdict_name(v.verdict));
      vj["starts_inside"] = v.starts_inside;
      vj["entries"] = v.entries;
      vj["exits"] = v.exits;
      vj["last_entry_t"] = v.last_entry_t;
      if (v.verdict == Verdict::TrappedAtHorizon) {
        vj["remaining_arc"] = v.remaining_arc;
        vj["cleared_by_longer_trace"] = bool(c.cleared[i]);
      }
      rs.push_back(std::move(vj));
    }
    cj["radii"] = std::move(rs);
    cs.push_back(std::move(cj));
  }
  j["centres"] = std::move(cs);
  return j;
}

}  // namespace cgeo::cli
