#include "cgeo/expmap.hpp"

#include "cgeo/error.hpp"
#include "cgeo/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace cgeo {

namespace {

double sinc(double z) {
  if (std::abs(z) < 1e-4) return 1.0 - z * z / 6.0;
  return std::sin(z) / z;
}

void require_unit(const Mat& g, const TangentVector& u0) {
  if (std::abs(inner(g, u0, u0) - 1.0) > 1e-8) {
    throw Error(Errc::ConstraintViolation, "u0 must be a unit vector");
  }
}

}  // namespace

RayCoords ray_coords(const Mat& g, const TangentVector& u0,
                     const TangentVector& A) {
  RayCoords rc;
  rc.mag = norm(g, A);
  const double along = inner(g, A, u0);
  const Vec perp = A - along * u0;
  const double pn = norm(g, perp);
  rc.theta = std::atan2(pn, along);
  if (pn > 0.0) rc.ahat = perp / pn;
  return rc;
}

CGState exp_initial_state(const Mat& g, const ChartPoint& p,
                          const TangentVector& u0, const TangentVector& A) {
  const double mag2 = inner(g, A, A);
  const Vec perp = A - inner(g, A, u0) * u0;
  return {p, u0, perp / mag2};
}

ChartPoint exp_cg(const MetricField& m, const ChartPoint& p,
                  const TangentVector& u0, const TangentVector& A,
                  const IntegratorConfig& cfg) {
  if (A.size() != m.dim()) {
    throw Error(Errc::InvalidArgument, "A has wrong dimension");
  }
  const Mat g = m.metric(p);
  const double mag = norm(g, A);
  if (mag == 0.0) return p;
  const Trace tr =
      integrate_cg(m, exp_initial_state(g, p, u0, A), 2.0 * M_PI * mag, cfg);
  return tr.state(tr.size() - 1).x;
}

TangentVector dexp_zero(const Mat& g, const TangentVector& u0,
                        const TangentVector& A) {
  const double mag = norm(g, A);
  if (mag == 0.0) throw Error(Errc::ZeroVector, "dexp_zero needs A != 0");
  const Vec perp = A - inner(g, A, u0) * u0;
  const double q = norm(g, perp) / mag;  // sin(theta)
  // u0 |A|^2/|A_perp| sin(2 pi q) + A_perp |A|^2/|A_perp|^2 (1 - cos(2 pi q)),
  // rewritten with sinc so that A_perp -> 0 is regular.
  const double sq = sinc(M_PI * q);
  return (2.0 * M_PI * mag * sinc(2.0 * M_PI * q)) * u0 +
         (2.0 * M_PI * M_PI * sq * sq) * perp;
}

TangentVector dexp_zero(const TangentVector& u0, const TangentVector& A) {
  const int d = static_cast<int>(u0.size());
  return dexp_zero(Mat::Identity(d, d), u0, A);
}

double ray_image_angle(const MetricField& m, const ChartPoint& p,
                       const TangentVector& u0, const TangentVector& ahat0,
                       double theta0, double h, const IntegratorConfig& cfg) {
  if (!(theta0 >= 0.0) || theta0 >= M_PI / 2) {
    throw Error(Errc::DegenerateDirection,
                "theta0 must lie in [0, pi/2), got " + std::to_string(theta0));
  }
  if (!(h > 0.0)) throw Error(Errc::InvalidArgument, "h must be positive");
  const Mat g = m.metric(p);
  require_unit(g, u0);
  Vec dir = std::cos(theta0) * u0;
  if (theta0 > 0.0) {
    Vec a = ahat0 - inner(g, ahat0, u0) * u0;
    const double an = norm(g, a);
    if (an < 1e-12) {
      throw Error(Errc::DegenerateDirection, "ahat0 is parallel to u0");
    }
    dir += std::sin(theta0) * (a / an);
  }
  const Vec c1 = exp_cg(m, p, u0, h * dir, cfg) - p;
  const Vec c2 = exp_cg(m, p, u0, 0.5 * h * dir, cfg) - p;
  // chord(h)/h = T + O(h); eliminate the O(h) term
  const Vec v = 4.0 * c2 - c1;
  const double c = inner(g, v, u0) / norm(g, v);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

FValues f_functions(double theta) {
  const double s = std::sin(theta);
  FValues f;
  f.f1 = M_PI * sinc(M_PI * s);
  f.f3 = f.f1 * f.f1;
  double f2sq;
  if (std::abs(s) < 1e-2) {
    const double p2 = M_PI * M_PI, s2 = s * s;
    f2sq = p2 * p2 *
           (1.0 + s2 * p2 * (-2.0 / 9 + s2 * p2 * (1.0 / 45 - s2 * p2 * 2.0 / 1575)));
  } else {
    const double sp = std::sin(M_PI * s);
    f2sq = sp * sp / (s * s * s * s) + M_PI * M_PI / (s * s) -
           M_PI * std::sin(2.0 * M_PI * s) / (s * s * s);
  }
  f.f2 = std::sqrt(std::max(0.0, f2sq));
  return f;
}

double cardioid_boundary(double R, double phi) {
  if (!(phi > -M_PI && phi <= M_PI)) {
    throw Error(Errc::InvalidArgument, "phi must lie in (-pi, pi]");
  }
  return 4.0 * R * std::sqrt(std::max(0.0, M_PI * M_PI - phi * phi)) *
         sinc(phi);
}

// ---------------------------------------------------------------------------
// Injectivity scan

InjectivityReport injectivity_scan(const MetricField& m, const ChartPoint& p,
                                   const TangentVector& u0,
                                   const InjectivityConfig& cfg) {
  if (!(cfg.r_max > 0.0)) throw Error(Errc::InvalidArgument, "r_max must be positive");
  if (cfg.levels < 1) throw Error(Errc::InvalidArgument, "levels must be >= 1");
  if (cfg.resolution < 1) {
    throw Error(Errc::InvalidArgument, "resolution must be positive");
  }
  if (!(cfg.image_tol > 0.0) || !(cfg.sep_fraction > 0.0)) {
    throw Error(Errc::InvalidArgument, "thresholds must be positive");
  }
  const int d = m.dim();
  const Mat g = m.metric(p);
  require_unit(g, u0);
  const Mat frame = frame_from(g, u0);
  const int n = cfg.resolution;

  // Cell-centred grid of the unit cube [-1,1]^d, kept if inside the open
  // unit ball around e0 shifted to the origin and within the theta cutoff.
  std::vector<Vec> unit_pts;
  const long long total = [&] {
    long long t = 1;
    for (int k = 0; k < d; ++k) t *= n;
    return t;
  }();
  for (long long lin = 0; lin < total; ++lin) {
    long long rem = lin;
    Vec c(d);
    for (int k = 0; k < d; ++k) {
      c(k) = -1.0 + (2.0 * double(rem % n) + 1.0) / n;
      rem /= n;
    }
    if (c.squaredNorm() >= 1.0) continue;
    Vec a = c;
    a(0) += 1.0;
    const double theta = std::atan2(a.tail(d - 1).norm(), a(0));
    if (theta > cfg.max_theta) continue;
    unit_pts.push_back(a);
  }
  if (static_cast<int>(unit_pts.size()) < cfg.min_samples) {
    throw Error(Errc::ResolutionTooCoarse,
                "only " + std::to_string(unit_pts.size()) +
                    " grid points fit in the domain ball, need " +
                    std::to_string(cfg.min_samples));
  }

  InjectivityReport rep;
  rep.samples_per_level = static_cast<int>(unit_pts.size());
  for (int level = 1; level <= cfg.levels; ++level) {
    const double r = cfg.r_max * level / cfg.levels;
    const std::size_t N = unit_pts.size();
    std::vector<Vec> A(N), img(N);
    std::vector<char> failed(N, 0);
    parallel_for(N, [&](std::size_t i) {
      A[i] = frame * (r * unit_pts[i]);
      try {
        img[i] = exp_cg(m, p, u0, A[i], cfg.integrator);
      } catch (const Error& e) {
        if (e.code() != Errc::StepFailure) throw;
        failed[i] = 1;
      }
    });
    ++rep.levels_scanned;
    if (std::find(failed.begin(), failed.end(), 1) != failed.end()) {
      rep.chart_exit = true;
      break;
    }

    std::map<std::vector<long long>, std::vector<int>> cells;
    auto key = [&](const Vec& x) {
      std::vector<long long> k(d);
      for (int j = 0; j < d; ++j) {
        k[j] = static_cast<long long>(std::floor(x(j) / cfg.image_tol));
      }
      return k;
    };
    for (std::size_t i = 0; i < N; ++i) cells[key(img[i])].push_back(int(i));

    std::optional<Collision> hit;
    const double sep = cfg.sep_fraction * r;
    for (std::size_t i = 0; i < N && !hit; ++i) {
      const auto k0 = key(img[i]);
      long long nb = 1;
      for (int j = 0; j < d; ++j) nb *= 3;
      for (long long c = 0; c < nb && !hit; ++c) {
        auto k = k0;
        long long rem = c;
        for (int j = 0; j < d; ++j) {
          k[j] += rem % 3 - 1;
          rem /= 3;
        }
        auto it = cells.find(k);
        if (it == cells.end()) continue;
        for (int jdx : it->second) {
          if (jdx <= static_cast<int>(i)) continue;
          const double di = (img[i] - img[jdx]).norm();
          if (di >= cfg.image_tol) continue;
          const double dd = norm(g, A[i] - A[jdx]);
          if (dd <= sep) continue;
          hit = Collision{r, A[i], A[jdx], img[i], img[jdx], dd, di};
          break;
        }
      }
    }
    if (hit) {
      rep.witness = hit;
      break;
    }
    rep.last_clean_r = r;
  }
  rep.est_r = 0.5 * std::min(1.0, rep.last_clean_r);
  return rep;
}

// ---------------------------------------------------------------------------
// Heart boundary

TangentVector HeartSample::domain_point(double beta, double psi) const {
  Vec y(3);
  y << r_ * (1.0 - std::cos(beta)), r_ * std::sin(beta) * std::cos(psi),
      r_ * std::sin(beta) * std::sin(psi);
  return frame_ * y;
}

bool HeartSample::inside(const ChartPoint& x) const {
  return mesh_.inside(P3(x(0), x(1), x(2))) != inverted_;
}

bool HeartSample::in_closure(const ChartPoint& x, double boundary_tol) const {
  if (norm(gp_, x - p_) <= cusp_radius_) return true;
  const P3 q(x(0), x(1), x(2));
  if (mesh_.inside(q) != inverted_) return true;
  return mesh_.distance_within(q, boundary_tol) <= boundary_tol;
}

namespace {

struct RingSpec {
  double beta;
  int count;
};

// Triangles between two concentric rings whose vertices sit at psi = 2 pi j /
// count, both starting at psi = 0.
void zip_rings(int a0, int na, int b0, int nb,
               std::vector<std::array<int, 3>>& out) {
  int i = 0, j = 0;
  while (i < na || j < nb) {
    const double next_a = double(i + 1) / na;
    const double next_b = double(j + 1) / nb;
    const int ai = a0 + i % na, bj = b0 + j % nb;
    if (j >= nb || (i < na && next_a <= next_b)) {
      out.push_back({ai, bj, a0 + (i + 1) % na});
      ++i;
    } else {
      out.push_back({ai, bj, b0 + (j + 1) % nb});
      ++j;
    }
  }
}

void fan(int apex, int r0, int n, std::vector<std::array<int, 3>>& out) {
  for (int j = 0; j < n; ++j) out.push_back({apex, r0 + j, r0 + (j + 1) % n});
}

}  // namespace

HeartSample trace_heart_boundary(const MetricField& m, const ChartPoint& p,
                                 const TangentVector& u0, double r,
                                 const HeartConfig& cfg) {
  if (m.dim() != 3) {
    throw Error(Errc::Unsupported, "heart meshes are implemented for d = 3 only");
  }
  if (cfg.resolution < 4) {
    throw Error(Errc::ResolutionTooCoarse,
                "heart resolution must be at least 4, got " +
                    std::to_string(cfg.resolution));
  }
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw Error(Errc::InvalidArgument, "heart radius must be positive");
  }
  const Mat g = m.metric(p);
  require_unit(g, u0);

  HeartSample h;
  h.p_ = p;
  h.u0_ = u0;
  h.r_ = r;
  h.frame_ = frame_from(g, u0);
  h.gp_ = g;
  h.resolution_ = cfg.resolution;
  h.chord_bound_ = cfg.chord_bound > 0.0 ? cfg.chord_bound
                                          : 12.0 * M_PI * r / cfg.resolution;
  h.cusp_radius_ = cfg.cusp_fraction * r;

  const int n = cfg.resolution;
  std::vector<RingSpec> rings;
  for (int i = 1; i <= n; ++i) rings.push_back({M_PI * i / (n + 1), 2 * n});

  std::map<std::pair<double, double>, ChartPoint> cache;
  const ChartPoint pole_img =
      exp_cg(m, p, u0, h.domain_point(M_PI, 0.0), cfg.integrator);

  auto image_rings = [&](const std::vector<RingSpec>& rs) {
    std::vector<std::pair<double, double>> todo;
    for (const auto& rg : rs) {
      for (int j = 0; j < rg.count; ++j) {
        const std::pair<double, double> key{rg.beta, 2.0 * M_PI * j / rg.count};
        if (!cache.count(key)) todo.push_back(key);
      }
    }
    std::vector<ChartPoint> imgs(todo.size());
    parallel_for(todo.size(), [&](std::size_t i) {
      imgs[i] = exp_cg(m, p, u0, h.domain_point(todo[i].first, todo[i].second),
                       cfg.integrator);
    });
    for (std::size_t i = 0; i < todo.size(); ++i) cache[todo[i]] = imgs[i];
  };
  auto img = [&](const RingSpec& rg, int j) -> const ChartPoint& {
    return cache.at({rg.beta, 2.0 * M_PI * (j % rg.count) / rg.count});
  };

  auto vertex_total = [](const std::vector<RingSpec>& rs) {
    int t = 2;
    for (const auto& rg : rs) t += rg.count;
    return t;
  };

  // Edge lengths are measured with g at the midpoint and divided by a factor
  // that shrinks towards p, where size estimates need the finest mesh. Away
  // from p the chart length is used when smaller, so charts that run off to
  // infinity (sphere) or metrics that blow up at the chart edge (hyperbolic)
  // do not demand unbounded refinement.
  const Mat gp = m.metric(p);
  const double near_scale = 2.0 * M_PI * r;
  auto chord = [&](const ChartPoint& a, const ChartPoint& b) {
    const Vec mid = 0.5 * (a + b), dx = b - a;
    const double dist = norm(gp, mid - p);
    double len = dx.norm();
    if (m.in_domain(mid)) {
      try {
        const double lg = norm(m.metric(mid), dx);
        len = dist <= 2.0 * r ? lg : std::min(len, lg);
      } catch (const Error&) {
      }
    }
    return len / std::clamp(dist / near_scale, cfg.near_floor, 1.0);
  };

  // Refine until every mesh edge is within the chord bound.
  double max_chord = 0.0;
  for (;;) {
    image_rings(rings);
    max_chord = 0.0;
    std::vector<char> split_ring(rings.size(), 0);
    std::vector<char> split_band(rings.size() + 1, 0);  // band k below ring k
    for (std::size_t k = 0; k < rings.size(); ++k) {
      for (int j = 0; j < rings[k].count; ++j) {
        const double c = chord(img(rings[k], j), img(rings[k], j + 1));
        max_chord = std::max(max_chord, c);
        if (c > h.chord_bound_) split_ring[k] = 1;
      }
    }
    auto band_chord = [&](std::size_t k) {
      // band k joins ring k-1 (cusp if k = 0) and ring k (pole if k = size)
      double c = 0.0;
      if (k == 0) {
        for (int j = 0; j < rings[0].count; ++j)
          c = std::max(c, chord(img(rings[0], j), p));
      } else if (k == rings.size()) {
        for (int j = 0; j < rings.back().count; ++j)
          c = std::max(c, chord(img(rings.back(), j), pole_img));
      } else {
        std::vector<std::array<int, 3>> tris;
        const int na = rings[k - 1].count, nb = rings[k].count;
        zip_rings(0, na, na, nb, tris);
        auto at = [&](int v) -> const ChartPoint& {
          return v < na ? img(rings[k - 1], v) : img(rings[k], v - na);
        };
        for (const auto& t : tris)
          for (int e = 0; e < 3; ++e)
            c = std::max(c, chord(at(t[e]), at(t[(e + 1) % 3])));
      }
      return c;
    };
    for (std::size_t k = 0; k <= rings.size(); ++k) {
      const double c = band_chord(k);
      max_chord = std::max(max_chord, c);
      if (c > h.chord_bound_) split_band[k] = 1;
    }

    std::vector<RingSpec> next;
    for (std::size_t k = 0; k <= rings.size(); ++k) {
      if (split_band[k]) {
        const double lo = k == 0 ? 0.0 : rings[k - 1].beta;
        const double hi = k == rings.size() ? M_PI : rings[k].beta;
        int cnt = std::max(k == 0 ? 0 : rings[k - 1].count,
                           k == rings.size() ? 0 : rings[k].count);
        next.push_back({0.5 * (lo + hi), cnt});
      }
      if (k < rings.size()) {
        RingSpec rg = rings[k];
        if (split_ring[k]) rg.count *= 2;
        next.push_back(rg);
      }
    }
    if (next.size() == rings.size() &&
        std::equal(next.begin(), next.end(), rings.begin(),
                   [](const RingSpec& a, const RingSpec& b) {
                     return a.beta == b.beta && a.count == b.count;
                   })) {
      break;
    }
    if (vertex_total(next) > cfg.max_vertices) break;
    rings = std::move(next);
  }
  h.max_chord_ = max_chord;

  // assemble
  auto add_vertex = [&](double beta, double psi, const ChartPoint& x) {
    h.domain_.push_back(h.domain_point(beta, psi));
    h.image_.push_back(x);
    h.beta_.push_back(beta);
    h.psi_.push_back(psi);
  };
  add_vertex(0.0, 0.0, p);
  h.domain_[0].setZero();
  for (const auto& rg : rings) {
    HeartSample::Ring ring{rg.beta, static_cast<int>(h.domain_.size()), rg.count};
    for (int j = 0; j < rg.count; ++j) {
      add_vertex(rg.beta, 2.0 * M_PI * j / rg.count, img(rg, j));
    }
    h.rings_.push_back(ring);
  }
  add_vertex(M_PI, 0.0, pole_img);

  fan(0, h.rings_.front().first, h.rings_.front().count, h.triangles_);
  for (std::size_t k = 1; k < h.rings_.size(); ++k) {
    zip_rings(h.rings_[k - 1].first, h.rings_[k - 1].count, h.rings_[k].first,
              h.rings_[k].count, h.triangles_);
  }
  fan(h.pole_vertex(), h.rings_.back().first, h.rings_.back().count,
      h.triangles_);

  std::vector<P3> verts;
  verts.reserve(h.image_.size());
  for (const auto& x : h.image_) verts.emplace_back(x(0), x(1), x(2));
  h.mesh_ = TriangleMesh(std::move(verts), h.triangles_);
  // The image of the domain ball centre is interior. If parity says
  // otherwise the heart contains the chart's point at infinity.
  const ChartPoint centre = exp_cg(m, p, u0, r * u0, cfg.integrator);
  h.inverted_ = !h.mesh_.inside(P3(centre(0), centre(1), centre(2)));
  return h;
}

std::vector<ChartPoint> heart_meridian(const MetricField& m,
                                       const HeartSample& h, double psi,
                                       int samples,
                                       const IntegratorConfig& cfg) {
  if (samples < 2) throw Error(Errc::InvalidArgument, "need at least 2 samples");
  std::vector<ChartPoint> out(samples);
  parallel_for(std::size_t(samples), [&](std::size_t k) {
    const double beta = M_PI * double(k) / (samples - 1);
    out[k] = exp_cg(m, h.p(), h.u0(), h.domain_point(beta, psi), cfg);
  });
  return out;
}

namespace {

std::string fmt(double v, const char* f = "%.17g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

nlohmann::ordered_json vec_json(const Vec& v) {
  auto a = nlohmann::ordered_json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

void HeartSample::write_json(std::ostream& os) const {
  nlohmann::ordered_json j;
  j["p"] = vec_json(p_);
  j["u0"] = vec_json(u0_);
  j["r"] = r_;
  j["resolution"] = resolution_;
  j["chord_bound"] = chord_bound_;
  j["max_chord"] = max_chord_;
  j["cusp_vertex"] = cusp_vertex();
  j["pole_vertex"] = pole_vertex();
  auto verts = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < domain_.size(); ++i) {
    nlohmann::ordered_json v;
    v["beta"] = beta_[i];
    v["psi"] = psi_[i];
    v["A"] = vec_json(domain_[i]);
    v["image"] = vec_json(image_[i]);
    verts.push_back(std::move(v));
  }
  j["vertices"] = std::move(verts);
  auto tris = nlohmann::ordered_json::array();
  for (const auto& t : triangles_) tris.push_back({t[0], t[1], t[2]});
  j["triangles"] = std::move(tris);
  os << j.dump(1) << '\n';
}

void HeartSample::write_svg(std::ostream& os) const {
  // in-plane meridians psi = 0 and psi = pi from the mesh vertices
  const Vec eu = u0_.normalized();
  Vec e1 = frame_.col(1) - frame_.col(1).dot(eu) * eu;
  e1.normalize();
  std::vector<std::pair<double, double>> pts;
  auto add = [&](const ChartPoint& x) {
    pts.emplace_back((x - p_).dot(eu), (x - p_).dot(e1));
  };
  add(image_[0]);
  for (const auto& rg : rings_) add(image_[rg.first]);
  add(image_[pole_vertex()]);
  for (auto it = rings_.rbegin(); it != rings_.rend(); ++it) {
    add(image_[it->first + it->count / 2]);
  }
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  for (const auto& [x, y] : pts) {
    xmin = std::min(xmin, x), xmax = std::max(xmax, x);
    ymin = std::min(ymin, y), ymax = std::max(ymax, y);
  }
  const double pad = 0.05 * std::max({xmax - xmin, ymax - ymin, 1e-12});
  const double w = xmax - xmin + 2 * pad, hgt = ymax - ymin + 2 * pad;
  const double scale = 480.0 / std::max(w, hgt);
  auto X = [&](double x) { return fmt((x - xmin + pad) * scale, "%.4f"); };
  auto Y = [&](double y) { return fmt((ymax + pad - y) * scale, "%.4f"); };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
     << fmt(w * scale, "%.1f") << "\" height=\"" << fmt(hgt * scale, "%.1f")
     << "\">\n";
  os << "<polygon fill=\"#f4c7c3\" stroke=\"#b0302a\" stroke-width=\"1\" "
        "points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) os << ' ';
    os << X(pts[i].first) << ',' << Y(pts[i].second);
  }
  os << "\"/>\n";
  os << "<circle cx=\"" << X(0) << "\" cy=\"" << Y(0)
     << "\" r=\"3\" fill=\"black\"/>\n";
  os << "<line x1=\"" << X(0) << "\" y1=\"" << Y(0) << "\" x2=\""
     << X(2.0 * r_) << "\" y2=\"" << Y(0)
     << "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";
  os << "</svg>\n";
}

// ---------------------------------------------------------------------------
// Heart exit

HeartExit heart_exit(const MetricField& m, const Trace& trace,
                     const HeartSample& h, const IntegratorConfig& cfg) {
  if (trace.dim() != 3) {
    throw Error(Errc::Unsupported, "heart_exit needs d = 3");
  }
  const CGState& s0 = trace.state(0);
  if ((s0.x - h.p()).norm() > 1e-9 || (s0.u - h.u0()).norm() > 1e-8) {
    throw Error(Errc::InvalidArgument,
                "trace must start at the heart's base point with tangent u0");
  }
  const auto& ts = trace.times();
  const double skip = 1e-3 * h.r();
  std::size_t k = 1;
  while (k < ts.size() && (trace.state(k).x - h.p()).norm() <= skip) ++k;
  for (; k < ts.size(); ++k) {
    if (!h.inside(trace.state(k).x)) break;
  }
  if (k >= ts.size()) {
    std::ostringstream os;
    os << "trace ends at t = " << trace.t_end() << " still inside the heart";
    throw Error(Errc::NoExitWithinTrace, os.str());
  }

  double lo = ts[k - 1], hi = ts[k];
  for (int it = 0; it < 60 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (h.inside(trace.position_at(mid)) ? lo : hi) = mid;
  }

  HeartExit ex;
  ex.t_exit = 0.5 * (lo + hi);
  ex.point = trace.position_at(ex.t_exit);

  // Domain guess from the nearest mesh triangle, projected to the sphere.
  const auto& mesh = h.mesh();
  const auto near = mesh.nearest(P3(ex.point(0), ex.point(1), ex.point(2)));
  const auto& tri = mesh.triangles()[near.triangle];
  Vec A = near.bary[0] * h.domain(tri[0]) + near.bary[1] * h.domain(tri[1]) +
          near.bary[2] * h.domain(tri[2]);
  const Mat frame = h.frame();
  const Mat finv = frame.inverse();
  const double r = h.r();
  Eigen::Vector3d center(r, 0, 0);
  Eigen::Vector3d n0 = Eigen::Vector3d(finv * A) - center;
  if (n0.norm() < 1e-12) n0 = Eigen::Vector3d(1, 0, 0);
  n0.normalize();
  const Eigen::Vector3d t1 = n0.unitOrthogonal();
  const Eigen::Vector3d t2 = n0.cross(t1);
  auto domain_of = [&](double x1, double x2) -> Vec {
    const Eigen::Vector3d y = center + r * (n0 + x1 * t1 + x2 * t2).normalized();
    return frame * Vec(y);
  };

  Eigen::Vector3d z(ex.t_exit, 0.0, 0.0);
  auto F = [&](const Eigen::Vector3d& zz) -> Eigen::Vector3d {
    const Vec x = trace.position_at(zz(0)) -
                  exp_cg(m, h.p(), h.u0(), domain_of(zz(1), zz(2)), cfg);
    return Eigen::Vector3d(x(0), x(1), x(2));
  };
  Eigen::Vector3d Fz;
  double res = std::numeric_limits<double>::infinity();
  try {
    Fz = F(z);
    res = Fz.norm();
    for (int it = 0; it < 25 && res > 1e-10; ++it) {
      Eigen::Matrix3d J;
      for (int c = 0; c < 3; ++c) {
        Eigen::Vector3d zp = z;
        const double step = 1e-6 * (c == 0 ? std::max(1.0, std::abs(z(0))) : 1.0);
        zp(c) += step;
        J.col(c) = (F(zp) - Fz) / step;
      }
      const Eigen::Vector3d dz = J.fullPivLu().solve(-Fz);
      double lam = 1.0;
      bool improved = false;
      for (int ls = 0; ls < 12; ++ls, lam *= 0.5) {
        const Eigen::Vector3d zn = z + lam * dz;
        if (zn(0) <= 0.0 || zn(0) > trace.t_end()) continue;
        const Eigen::Vector3d Fn = F(zn);
        if (Fn.norm() < res) {
          z = zn, Fz = Fn, res = Fn.norm();
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
  } catch (const Error& e) {
    if (e.code() != Errc::StepFailure) throw;
  }
  // Accept the refinement only if it stays near the bracketed crossing.
  const double bracket_tol = 0.05 * std::max(ts[k] - ts[k - 1], 4.0 * M_PI * r / h.resolution());
  if (res < 1e-8 && std::abs(z(0) - ex.t_exit) < bracket_tol + h.max_chord()) {
    ex.refined = true;
    ex.t_exit = z(0);
    ex.point = trace.position_at(z(0));
    ex.domain = domain_of(z(1), z(2));
  } else {
    ex.domain = domain_of(0.0, 0.0);
  }
  ex.residual = res;
  const double tol = 1e-9 * (1.0 + ex.t_exit);
  ex.within_4pi_r = ex.t_exit <= 4.0 * M_PI * r + tol;
  ex.within_2pi_r = ex.t_exit <= 2.0 * M_PI * r + tol;
  return ex;
}

// ---------------------------------------------------------------------------

RemainderFit remainder_order(const MetricField& m, const ChartPoint& p,
                             const TangentVector& u0,
                             const TangentVector& direction, int samples) {
  if (samples < 2) throw Error(Errc::InvalidArgument, "need at least 2 samples");
  const Mat g = m.metric(p);
  require_unit(g, u0);
  const RayCoords rc = ray_coords(g, u0, direction);
  if (rc.mag == 0.0) throw Error(Errc::ZeroVector, "direction is zero");
  if (rc.theta >= M_PI / 2) {
    throw Error(Errc::DegenerateDirection,
                "direction must make an angle below pi/2 with u0");
  }
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-12;
  cfg.abs_tol = 1e-15;
  RemainderFit fit;
  fit.lambdas.resize(samples);
  fit.remainders.resize(samples);
  parallel_for(std::size_t(samples), [&](std::size_t i) {
    const double lam = std::pow(10.0, -3.0 + 2.0 * double(i) / (samples - 1));
    const Vec A = lam * direction;
    const ChartPoint x = exp_cg(m, p, u0, A, cfg);
    const ChartPoint lead = metric_exp(m, p, dexp_zero(g, u0, A), cfg);
    fit.lambdas[i] = lam;
    fit.remainders[i] = (x - lead).norm();
  });
  const double top = *std::max_element(fit.remainders.begin(), fit.remainders.end());
  fit.degenerate = top < 1e-11;
  // least squares on the points above the rounding floor
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int i = 0; i < samples; ++i) {
    if (fit.remainders[i] <= 1e-14) continue;
    const double x = std::log(fit.lambdas[i]), y = std::log(fit.remainders[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++cnt;
  }
  if (cnt >= 2) {
    fit.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  } else {
    fit.degenerate = true;
  }
  return fit;
}

}  // namespace cgeo
