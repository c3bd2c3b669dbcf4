#include "doctest.h"

#include "cgeo/error.hpp"
#include "cgeo/expmap.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

using namespace cgeo;

namespace {

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::InvalidArgument;
}

double angle_between(const Vec& a, const Vec& b) {
  return std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0));
}

// Unit u0 under g at p and a g-unit vector perpendicular to it.
std::pair<Vec, Vec> unit_pair(const Mat& g, Vec u, Vec a) {
  u /= norm(g, u);
  a -= inner(g, a, u) * u;
  a /= norm(g, a);
  return {u, a};
}

}  // namespace

TEST_CASE("exp_cg examples") {
  const auto flat = MetricField::euclidean(3);
  const Vec p = v3(0.3, -0.2, 0.1);
  const Vec u0 = v3(1, 2, 2) / 3.0;
  const Vec ahat = v3(2, -2, 1) / 3.0;
  CHECK((exp_cg(flat, p, u0, Vec::Zero(3)) - p).norm() == 0.0);
  for (double s : {0.1, 0.5, 1.3}) {
    CHECK((exp_cg(flat, p, u0, s * u0) - (p + 2 * M_PI * s * u0)).norm() <
          1e-9);
    const Vec A = s * (std::cos(M_PI / 6) * u0 + std::sin(M_PI / 6) * ahat);
    CHECK((exp_cg(flat, p, u0, A) - (p + 4 * s * ahat)).norm() < 1e-9);
  }
}

TEST_CASE("ray_coords") {
  const Mat g = Mat::Identity(3, 3) * 4.0;
  const Vec u0 = v3(0.5, 0, 0);
  const Vec A = v3(1, 0.5, 0);  // along 2 u0, perp (0, 0.5, 0)
  const auto rc = ray_coords(g, u0, A);
  CHECK(rc.mag == doctest::Approx(std::sqrt(5.0)));
  CHECK(std::sin(rc.theta) == doctest::Approx(1.0 / std::sqrt(5.0)));
  CHECK((rc.ahat - v3(0, 0.5, 0)).norm() < 1e-15);
  const Vec back = rc.mag * (std::cos(rc.theta) * u0 + std::sin(rc.theta) * rc.ahat);
  CHECK((back - A).norm() < 1e-14);
  CHECK(ray_coords(g, u0, u0).ahat.size() == 0);
}

TEST_CASE("dexp_zero examples") {
  const Vec u0 = v3(0, 0, 1);
  const Vec ahat = v3(1, 0, 0);
  for (double s : {1e-3, 0.4, 2.0}) {
    CHECK((dexp_zero(u0, s * u0) - 2 * M_PI * s * u0).norm() < 1e-14);
  }
  const Vec A = std::cos(M_PI / 6) * u0 + std::sin(M_PI / 6) * ahat;
  CHECK((dexp_zero(u0, A) - 4 * ahat).norm() < 1e-14);
  CHECK(dexp_zero(u0, 3.0 * ahat).norm() < 1e-14);
  CHECK(code_of([&] { dexp_zero(u0, Vec::Zero(3)); }) == Errc::ZeroVector);

  // continuity into the A_perp -> 0 limit against the unsimplified display
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    const Vec B = u0 + eps * ahat;
    const double m = B.norm(), ap = eps;
    const Vec raw = u0 * (m * m / ap) * std::sin(2 * M_PI * ap / m) +
                    (eps * ahat) * (m * m / (ap * ap)) *
                        (1 - std::cos(2 * M_PI * ap / m));
    CHECK((dexp_zero(u0, B) - raw).norm() < 1e-6);
  }
}

TEST_CASE("dexp_zero matches finite differences of exp_cg") {
  const double h = 1e-4;
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-12;
  cfg.abs_tol = 1e-15;
  std::vector<MetricField> metrics = {
      MetricField::euclidean(3), MetricField::sphere(3),
      MetricField::hyperbolic(3),
      MetricField::conformally_flat(Expr::parse("1 + 0.1*x1*x2 + 0.2*x3^2", 3))};
  const Vec p = v3(0.1, -0.2, 0.15);
  for (const auto& m : metrics) {
    const Mat g = m.metric(p);
    const auto [u0, ahat] = unit_pair(g, v3(1, 0.2, 0), v3(0, 1, 0.3));
    for (double th = 0.0; th <= 1.5 + 1e-12; th += 0.25) {
      const Vec A = std::cos(th) * u0 + std::sin(th) * ahat;
      // The chord has an O(h) curvature term from the Christoffel symbols
      // at p; one Richardson step removes it.
      const Vec c1 = exp_cg(m, p, u0, h * A, cfg) - p;
      const Vec c2 = exp_cg(m, p, u0, 0.5 * h * A, cfg) - p;
      const Vec fd = (4.0 * c2 - c1) / h;
      CHECK_MESSAGE(norm(g, fd - dexp_zero(g, u0, A)) < 1e-4,
                    m.description() << " theta " << th);
      if (m.kind() == MetricKind::Euclidean) {
        CHECK(norm(g, c1 / h - dexp_zero(g, u0, A)) < 1e-4);
      }
    }
  }
}

TEST_CASE("ray image angle law") {
  std::vector<MetricField> metrics = {
      MetricField::euclidean(3), MetricField::sphere(3),
      MetricField::hyperbolic(3),
      MetricField::conformally_flat(Expr::parse("1 + 0.1*x1*x2 + 0.2*x3^2", 3))};
  const Vec p = v3(0.2, 0.1, -0.1);
  for (const auto& m : metrics) {
    const Mat g = m.metric(p);
    const auto [u0, ahat] = unit_pair(g, v3(0.3, 1, 0), v3(0, 0.5, 1));
    for (double th = 0.0; th <= 1.4 + 1e-12; th += 0.1) {
      const double ang = ray_image_angle(m, p, u0, ahat, th);
      CHECK_MESSAGE(std::abs(ang - M_PI * std::sin(th)) <= 5e-3,
                    m.description() << " theta " << th);
    }
  }
  const auto sphere = MetricField::sphere(3);
  const Vec o = Vec::Zero(3);
  const auto [u0, ahat] = unit_pair(sphere.metric(o), v3(1, 0, 0), v3(0, 1, 0));
  CHECK(std::abs(ray_image_angle(sphere, o, u0, ahat, M_PI / 6, 1e-3) -
                 M_PI / 2) < 5e-3);
  CHECK(code_of([&] { ray_image_angle(sphere, o, u0, ahat, M_PI / 2); }) ==
        Errc::DegenerateDirection);
}

TEST_CASE("f functions") {
  const auto f0 = f_functions(0.0);
  CHECK(f0.f1 == doctest::Approx(M_PI).epsilon(1e-15));
  CHECK(f0.f2 == doctest::Approx(M_PI * M_PI).epsilon(1e-15));
  CHECK(f0.f3 == doctest::Approx(M_PI * M_PI).epsilon(1e-15));
  const auto fe = f_functions(M_PI / 2);
  CHECK(std::abs(fe.f1) < 1e-15);
  CHECK(std::abs(fe.f3) < 1e-15);
  CHECK(fe.f2 == doctest::Approx(M_PI).epsilon(1e-14));

  for (double th = 0.0; th <= 1.4 + 1e-12; th += 0.01) {
    const auto f = f_functions(th);
    CHECK(f.f1 > 0);
    CHECK(f.f2 > 0);
    CHECK(f.f3 > 0);
  }

  // Oracle: with F(m, s, a) = m (u0 sin(2 pi s)/s + a (1 - cos(2 pi s))/s),
  // the f_i are half the norms of the partial derivatives of F, scaled.
  auto F = [](double m, double s, double ang) {
    Eigen::Vector3d u(1, 0, 0), a(0, std::cos(ang), std::sin(ang));
    return Eigen::Vector3d(m * (u * std::sin(2 * M_PI * s) / s +
                                a * (1 - std::cos(2 * M_PI * s)) / s));
  };
  for (double th : {0.05, 0.3, 0.7, 1.0, 1.3, 1.5}) {
    const double s = std::sin(th), m = 0.7, e = 1e-6;
    const double o1 = 0.5 * ((F(m + e, s, 0) - F(m - e, s, 0)) / (2 * e)).norm();
    const double o2 =
        0.5 * ((F(m, s + e, 0) - F(m, s - e, 0)) / (2 * e)).norm() / m;
    const double o3 =
        0.5 * ((F(m, s, e) - F(m, s, -e)) / (2 * e)).norm() / (m * s);
    const auto f = f_functions(th);
    CHECK(f.f1 == doctest::Approx(o1).epsilon(1e-7));
    CHECK(f.f2 == doctest::Approx(o2).epsilon(1e-7));
    CHECK(f.f3 == doctest::Approx(o3).epsilon(1e-7));
  }

  // series branch joins the closed form
  const double s0 = 1e-2;
  const auto below = f_functions(std::asin(s0 * (1 - 1e-12)));
  const auto above = f_functions(std::asin(s0 * (1 + 1e-12)));
  CHECK(below.f2 == doctest::Approx(above.f2).epsilon(1e-11));
}

TEST_CASE("cardioid_boundary") {
  CHECK(cardioid_boundary(1.0, M_PI) == 0.0);
  CHECK(cardioid_boundary(1.0, M_PI / 2) == doctest::Approx(4 * std::sqrt(3.0)));
  CHECK(cardioid_boundary(1.0, 0.0) == doctest::Approx(4 * M_PI));
  CHECK(cardioid_boundary(1.0, 1e-9) == doctest::Approx(4 * M_PI));
  CHECK(cardioid_boundary(2.0, -0.7) == doctest::Approx(cardioid_boundary(2.0, 0.7)));
}

TEST_CASE("reflection symmetry of exp") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0, 1);
  const auto m = MetricField::sphere(3);
  const Vec p = v3(0.1, 0.3, -0.2);
  const Mat g = m.metric(p);
  for (int i = 0; i < 10; ++i) {
    const auto [u0, a] = unit_pair(g, v3(n(rng), n(rng), n(rng)),
                                   v3(n(rng), n(rng), n(rng)));
    const double along = 0.3 * std::abs(n(rng)) + 0.05;
    const Vec perp = (0.2 + 0.2 * std::abs(n(rng))) * a;
    const Vec A = along * u0 + perp, B = -along * u0 + perp;
    CHECK((exp_cg(m, p, u0, A) - exp_cg(m, p, u0, B)).norm() < 1e-9);
  }
}

TEST_CASE("conformal geodesics are exp images of rescaled rays") {
  // Fixing ahat and sin(theta)/|A| = k fixes a0 = k ahat; exp then walks
  // the conformal geodesic with that a0.
  const auto m =
      MetricField::conformally_flat(Expr::parse("1 + 0.1*x1*x2 + 0.2*x3^2", 3));
  const Vec p = v3(0.1, 0.0, 0.2);
  const Mat g = m.metric(p);
  const auto [u0, ahat] = unit_pair(g, v3(1, 0, 0.2), v3(0, 1, 0));
  const double k = 0.6;
  const Trace tr = integrate_cg(m, {p, u0, k * ahat}, 2 * M_PI * 1.2);
  for (double mag = 0.05; mag <= 1.2; mag += 0.05) {
    const double s = k * mag;
    if (s >= 1.0) break;
    const Vec A = mag * (std::sqrt(1 - s * s) * u0 + s * ahat);
    const Vec x = exp_cg(m, p, u0, A);
    CHECK((x - tr.position_at(2 * M_PI * mag)).norm() < 1e-6);
  }
}

TEST_CASE("injectivity scan") {
  const auto flat = MetricField::euclidean(3);
  const Vec p = v3(0.4, 0.0, -1.0);
  const Vec u0 = v3(0, 0.6, 0.8);
  InjectivityConfig cfg;
  cfg.r_max = 3.0;
  const auto rep = injectivity_scan(flat, p, u0, cfg);
  CHECK(rep.est_r == 0.5);
  CHECK_FALSE(rep.witness.has_value());
  CHECK_FALSE(rep.chart_exit);
  CHECK(rep.levels_scanned == cfg.levels);
  CHECK(rep.samples_per_level >= cfg.min_samples);

  cfg.resolution = 2;
  CHECK(code_of([&] { injectivity_scan(flat, p, u0, cfg); }) ==
        Errc::ResolutionTooCoarse);

  // a loose image tolerance finds collisions where a strict one does not
  const auto sphere = MetricField::sphere(3);
  const Vec o = Vec::Zero(3);
  const Vec su = v3(0.5, 0, 0);
  InjectivityConfig sc;
  sc.levels = 4;
  sc.resolution = 6;
  double prev = 0.0;
  for (double tol : {0.5, 1e-1, 1e-4, 1e-6}) {
    sc.image_tol = tol;
    const auto r = injectivity_scan(sphere, o, su, sc);
    CHECK(r.est_r > 0.0 - 1e-300);
    CHECK(r.est_r <= 0.5);
    CHECK(r.est_r >= prev);
    if (r.est_r < 0.5 && !r.chart_exit) {
      REQUIRE(r.witness.has_value());
      CHECK(r.witness->image_distance < tol);
      CHECK(r.witness->domain_distance > sc.sep_fraction * r.witness->r);
    }
    prev = r.est_r;
  }
}

TEST_CASE("Euclidean heart is the cardioid solid") {
  const auto flat = MetricField::euclidean(3);
  const Vec p = v3(0.3, -0.2, 0.1);
  const Vec u0 = v3(1, 2, 2) / 3.0;
  const double r = 0.8;
  const auto h = trace_heart_boundary(flat, p, u0, r);
  REQUIRE(h.vertex_count() > 100);
  CHECK(h.image(h.cusp_vertex()) == p);
  CHECK((h.image(h.pole_vertex()) - (p + 4 * M_PI * r * u0)).norm() < 1e-9);
  CHECK(h.max_chord() <= h.chord_bound());

  // every vertex lies on the surface of revolution of the cardioid
  for (std::size_t i = 1; i < h.vertex_count(); ++i) {
    const Vec d = h.image(i) - p;
    const double phi = angle_between(d, u0);
    CHECK(std::abs(d.norm() - cardioid_boundary(r, phi)) < 1e-6);
    // images equal exp of the stored domain point
    if (i % 37 == 0) {
      CHECK((exp_cg(flat, p, u0, h.domain(i)) - h.image(i)).norm() < 1e-9);
    }
  }

  CHECK(h.inside(p + 2 * M_PI * r * u0));
  CHECK(h.inside(p + 0.5 * r * u0));
  CHECK_FALSE(h.inside(p - 0.5 * r * u0));
  CHECK_FALSE(h.inside(p + 4.4 * M_PI * r * u0));
  CHECK(h.in_closure(p - 0.05 * r * u0, 1e-6));
  CHECK(h.in_closure(p + 4 * M_PI * r * u0, 1e-6));

  // random points against the analytic solid
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  const Mat frame = h.frame();
  int agree = 0, total = 0;
  for (int i = 0; i < 400; ++i) {
    const Vec q = p + frame * v3(4 * M_PI * r * (0.5 + 0.6 * U(rng)),
                                 7 * r * U(rng), 7 * r * U(rng));
    const Vec d = q - p;
    const double rad = cardioid_boundary(r, angle_between(d, u0));
    if (std::abs(d.norm() - rad) < 0.1 * r) continue;  // facet error band
    ++total;
    agree += h.inside(q) == (d.norm() < rad);
  }
  CHECK(agree == total);
}

TEST_CASE("heart cusp tangents point along -u0") {
  const auto flat = MetricField::euclidean(3);
  const Vec p = v3(0, 0, 0);
  const Vec u0 = v3(1, 0, 0);
  HeartConfig hc;
  hc.resolution = 4;
  const auto h = trace_heart_boundary(flat, p, u0, 1.0, hc);
  const int n = 257;
  const auto m0 = heart_meridian(flat, h, 0.0, n);
  const auto m1 = heart_meridian(flat, h, M_PI, n);
  CHECK(m0.front() == p);
  double prev = 10.0;
  for (int k : {16, 8, 4, 2, 1}) {
    const double a0 = angle_between(m0[k] - p, -u0);
    const double a1 = angle_between(m1[k] - p, -u0);
    const double between = angle_between(m0[k] - p, m1[k] - p);
    CHECK(a0 < prev);
    CHECK(between <= a0 + a1 + 1e-12);
    prev = a0;
  }
  CHECK(angle_between(m0[1] - p, m1[1] - p) < 1e-3);
}

TEST_CASE("heart sample errors and output") {
  const auto flat = MetricField::euclidean(3);
  const Vec p = v3(0, 0, 0), u0 = v3(1, 0, 0);
  HeartConfig hc;
  hc.resolution = 3;
  CHECK(code_of([&] { trace_heart_boundary(flat, p, u0, 1.0, hc); }) ==
        Errc::ResolutionTooCoarse);
  const auto flat4 = MetricField::euclidean(4);
  Vec p4 = Vec::Zero(4), u4 = Vec::Zero(4);
  u4(0) = 1;
  CHECK(code_of([&] { trace_heart_boundary(flat4, p4, u4, 1.0); }) ==
        Errc::Unsupported);

  hc.resolution = 4;
  const auto h = trace_heart_boundary(flat, p, u0, 1.0, hc);
  std::ostringstream js, svg;
  h.write_json(js);
  h.write_svg(svg);
  CHECK(js.str().find("\"triangles\"") != std::string::npos);
  CHECK(svg.str().rfind("<svg", 0) == 0);
  std::ostringstream js2;
  trace_heart_boundary(flat, p, u0, 1.0, hc).write_json(js2);
  CHECK(js.str() == js2.str());
}

TEST_CASE("heart exit in flat space") {
  const auto flat = MetricField::euclidean(3);
  const Vec p = v3(0, 0, 0), u0 = v3(1, 0, 0);
  HeartConfig hc;
  hc.resolution = 24;
  const auto h = trace_heart_boundary(flat, p, u0, 0.5, hc);

  const Trace line = integrate_cg(flat, {p, u0, Vec::Zero(3)}, 8.0);
  const auto e1 = heart_exit(flat, line, h);
  CHECK(e1.refined);
  CHECK(std::abs(e1.t_exit - 2 * M_PI) < 1e-4);
  CHECK(e1.within_4pi_r);
  CHECK_FALSE(e1.within_2pi_r);

  const Trace circ = integrate_cg(flat, {p, u0, v3(0, 1, 0)}, 2 * M_PI);
  const auto e2 = heart_exit(flat, circ, h);
  CHECK(e2.refined);
  CHECK(std::abs(e2.t_exit - 2 * M_PI / std::sqrt(2.0)) < 1e-4);
  CHECK(std::abs(e2.domain.norm() - 1 / std::sqrt(2.0)) < 1e-6);
  CHECK(e2.within_4pi_r);

  const Trace short_line = integrate_cg(flat, {p, u0, Vec::Zero(3)}, 2.0);
  CHECK(code_of([&] { heart_exit(flat, short_line, h); }) ==
        Errc::NoExitWithinTrace);
}

TEST_CASE("remainder order") {
  const auto flat = MetricField::euclidean(3);
  const Vec p = v3(0.2, 0.1, -0.1);
  const Vec e1 = v3(1, 0, 0), e2 = v3(0, 1, 0);
  const auto fe = remainder_order(
      flat, p, e1, std::cos(M_PI / 4) * e1 + std::sin(M_PI / 4) * e2);
  CHECK(fe.degenerate);

  const auto sphere = MetricField::sphere(3);
  {
    const auto [u0, a] = unit_pair(sphere.metric(p), e1, e2);
    const auto fit = remainder_order(
        sphere, p, u0, std::cos(M_PI / 4) * u0 + std::sin(M_PI / 4) * a);
    CHECK_FALSE(fit.degenerate);
    CHECK(fit.slope >= 2.7);
  }
  const auto hyp = MetricField::hyperbolic(3);
  {
    const auto [u0, a] = unit_pair(hyp.metric(p), e1, e2);
    const auto fit = remainder_order(
        hyp, p, u0, std::cos(M_PI / 6) * u0 + std::sin(M_PI / 6) * a);
    CHECK_FALSE(fit.degenerate);
    CHECK(fit.slope >= 2.7);
  }
}
