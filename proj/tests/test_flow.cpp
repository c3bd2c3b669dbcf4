#include "doctest.h"

#include "cgeo/error.hpp"
#include "cgeo/flow.hpp"
#include "cgeo/space_forms.hpp"

#include <cmath>
#include <random>
#include <functional>
#include <sstream>

using namespace cgeo;

namespace {

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

// Random unit u and perpendicular a (|a| in [lo, hi]) under g at x.
CGState random_state(std::mt19937_64& rng, const MetricField& m, const Vec& x,
                     double lo, double hi) {
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> mag(lo, hi);
  const Mat g = m.metric(x);
  Vec u(3), a(3);
  for (int i = 0; i < 3; ++i) u(i) = n(rng), a(i) = n(rng);
  u /= norm(g, u);
  a -= inner(g, u, a) * u;
  a *= mag(rng) / norm(g, a);
  return {x, u, a};
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("cg_rhs examples") {
  const auto flat = MetricField::euclidean(3);
  auto r = cg_rhs(flat, {v3(0, 0, 0), v3(1, 0, 0), v3(0, 1, 0)});
  CHECK((r.x - v3(1, 0, 0)).norm() == 0.0);
  CHECK((r.u - v3(0, 1, 0)).norm() == 0.0);
  CHECK((r.a - v3(-1, 0, 0)).norm() == 0.0);

  r = cg_rhs(flat, {v3(1, 2, 3), v3(0, 0, 1), v3(0, 0, 0)});
  CHECK(r.a.norm() == 0.0);

  // great circles: a = 0 stays zero on the unit sphere
  const auto sphere = MetricField::sphere(3);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i) {
    auto s = random_state(rng, sphere, v3(0.3 * i - 1, 0.2, 0.1 * i), 0, 0);
    s.a.setZero();
    CHECK(cg_rhs(sphere, s).a.norm() < 1e-12);
  }
}

TEST_CASE("Euclidean circle oracle") {
  const auto flat = MetricField::euclidean(3);
  const Vec p = v3(0, 0, 0), u = v3(1, 0, 0), a = v3(0, 1, 0);
  const Trace tr = integrate_cg(flat, {p, u, a}, 10.0);
  double err = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const double t = tr.times()[k];
    err = std::max(err, (tr.state(k).x -
                         v3(std::sin(t), 1 - std::cos(t), 0)).lpNorm<Eigen::Infinity>());
  }
  CHECK(err < 1e-8);
  double dense = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double t = 10.0 * i / 1000;
    dense = std::max(dense, (tr.position_at(t) -
                             v3(std::sin(t), 1 - std::cos(t), 0)).norm());
  }
  CHECK(dense < 1e-8);
  CHECK(tr.t_end() == 10.0);
  CHECK(tr.max_res_unit() <= 1e-8);
  CHECK(tr.max_res_perp() <= 1e-8);
  for (std::size_t k = 1; k < tr.size(); ++k) {
    CHECK(tr.times()[k] > tr.times()[k - 1]);
  }
}

TEST_CASE("straight line is exact") {
  const auto flat = MetricField::euclidean(3);
  const Vec p = v3(0.5, -1, 2);
  const Trace tr = integrate_cg(flat, {p, v3(1, 0, 0), v3(0, 0, 0)}, 7.0);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    CHECK((tr.state(k).x - (p + tr.times()[k] * v3(1, 0, 0))).norm() < 1e-12);
  }
}

TEST_CASE("sphere: conformal geodesic with a = 0 is the metric geodesic") {
  const auto sphere = MetricField::sphere(3);
  const Vec x0 = v3(0.3, 0.1, 0);
  Vec u0 = v3(0.2, 1, 0.4);
  u0 /= norm(sphere.metric(x0), u0);
  const double t_end = 2.5;  // stays well inside the chart
  const Trace cg = integrate_cg(sphere, {x0, u0, Vec::Zero(3)}, t_end);
  const Trace geo = integrate_metric_geodesic(sphere, x0, u0, t_end);
  for (int i = 0; i <= 200; ++i) {
    const double t = t_end * i / 200;
    CHECK((cg.position_at(t) - geo.position_at(t)).norm() < 1e-7);
  }
  // both match the closed form
  CHECK((geo.position_at(t_end) - metric_exp(sphere, x0, t_end * u0)).norm() <
        1e-8);
}

TEST_CASE("metric geodesic examples") {
  const auto sphere = MetricField::sphere(3);
  const Vec x0 = v3(0.5, 0, 0);
  Vec u0 = v3(-1, 0, 0);
  u0 /= norm(sphere.metric(x0), u0);
  const Trace tr = integrate_metric_geodesic(sphere, x0, u0, M_PI);
  // antipode of x0 in the stereographic chart is -x0 / |x0|^2
  CHECK((tr.state(tr.size() - 1).x - v3(-2, 0, 0)).norm() < 1e-6);

  const auto hyp = MetricField::hyperbolic(3);
  const Vec h0 = v3(0.1, 0.2, -0.1);
  Vec hu = v3(0.3, -0.5, 1);
  hu /= norm(hyp.metric(h0), hu);
  IntegratorConfig free;
  free.projection = false;
  const Trace ht = integrate_metric_geodesic(hyp, h0, hu, 5.0, free);
  CHECK(ht.max_res_unit() <= 1e-9);
  CHECK(ht.max_drift_unit() == ht.max_res_unit());
  const Trace hp = integrate_metric_geodesic(hyp, h0, hu, 5.0);
  CHECK(hp.max_res_unit() <= 1e-12);
}

TEST_CASE("closed-form metric_exp agrees with integration") {
  // the same metrics as expressions, which forces the integrated path
  const auto sphere_expr = MetricField::conformally_flat(
      Expr::parse("2/(1 + x1^2 + x2^2 + x3^2)", 3));
  const auto hyp_expr = MetricField::conformally_flat(
      Expr::parse("2/(1 - x1^2 - x2^2 - x3^2)", 3));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0, 0.3);
  for (int i = 0; i < 10; ++i) {
    const Vec x = v3(n(rng), n(rng), n(rng));
    const Vec v = v3(n(rng), n(rng), n(rng));
    CHECK((metric_exp(sphere_expr, x, v) -
           space_forms::sphere_exp(x, v, 1.0)).norm() < 1e-8);
    const Vec xh = 0.5 * x, vh = 0.5 * v;
    CHECK((metric_exp(hyp_expr, xh, vh) -
           space_forms::hyperbolic_exp(xh, vh, 1.0)).norm() < 1e-8);
  }
  // radius scaling
  const auto s2 = MetricField::sphere(3, 2.0);
  const Vec x = v3(0.4, -0.3, 1.0);
  const double d = space_forms::sphere_distance(x, metric_exp(s2, x, v3(0.2, 0.3, 0.1)), 2.0);
  CHECK(d == doctest::Approx(norm(s2.metric(x), v3(0.2, 0.3, 0.1))).epsilon(1e-12));
}

TEST_CASE("euclid_circle examples") {
  const Vec p = v3(0, 0, 0), u = v3(1, 0, 0);
  CHECK((euclid_circle(p, u, v3(0, 1, 0), M_PI) - v3(0, 2, 0)).norm() < 1e-15);
  CHECK((euclid_circle(v3(1, 1, 1), u, v3(0, 0, 0), 3) - v3(4, 1, 1)).norm() ==
        0.0);
  for (double s : {0.1, 0.7, 3.0}) {
    const Vec a = v3(0, 0, 1.0 / (2 * s));
    CHECK((euclid_circle(p, u, a, 2 * M_PI * s) - 4 * s * v3(0, 0, 1)).norm() <
          1e-14);
  }
  // tiny curvature: no cancellation
  const Vec x = euclid_circle(p, u, v3(0, 1e-9, 0), 1.0);
  CHECK(x(1) == doctest::Approx(0.5e-9).epsilon(1e-12));
}

TEST_CASE("conformal_pushforward examples") {
  const auto flat = MetricField::euclidean(3);
  const CGState s{v3(0, 0, 0), v3(1, 0, 0), v3(0, 1, 0)};
  auto r = conformal_pushforward(s, flat, ConformalFactor::constant(3, 3));
  CHECK((r.u - s.u / 3).norm() == 0.0);
  CHECK((r.a - s.a / 9).norm() < 1e-16);
  r = conformal_pushforward(
      s, flat, ConformalFactor::expression(Expr::parse("exp(x1)", 3)));
  CHECK((r.u - s.u).norm() < 1e-15);
  CHECK((r.a - s.a).norm() < 1e-15);
}

TEST_CASE("conformal invariance of the flow") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0, 0.2);
  const std::vector<MetricField> metrics = {
      MetricField::euclidean(3), MetricField::sphere(3),
      MetricField::conformally_flat(Expr::parse("1 + 0.1*x1*x2 + 0.2*x3^2", 3))};
  const std::vector<const char*> omegas = {
      "exp(0.2*x1 - 0.1*x2*x3)", "1 + 0.1*(x1^2 + x2^2 + x3^2)",
      "2 + sin(x2)", "1/(1 + 0.3*x3^2)"};
  for (int trial = 0; trial < 6; ++trial) {
    const auto& m = metrics[trial % 3];
    const auto om = ConformalFactor::expression(
        Expr::parse(omegas[trial % omegas.size()], 3));
    const auto mh = conformal_rescale(m, om);
    const CGState s0 = random_state(rng, m, v3(n(rng), n(rng), n(rng)), 0.2, 1.5);
    const Trace tg = integrate_cg(m, s0, 3.0);
    // g-trace length measured in the rescaled metric
    double lhat = 0.0;
    for (std::size_t k = 1; k < tg.size(); ++k) {
      const double h = tg.times()[k] - tg.times()[k - 1];
      lhat += 0.5 * h * (om.eval(tg.state(k).x).value +
                         om.eval(tg.state(k - 1).x).value);
    }
    const Trace th = integrate_cg(mh, conformal_pushforward(s0, m, om), 0.95 * lhat);
    CHECK(one_sided_hausdorff(th, tg) <= 1e-6);
  }
}

TEST_CASE("convergence order on the circle") {
  const auto flat = MetricField::euclidean(3);
  const CGState s{v3(0, 0, 0), v3(1, 0, 0), v3(0, 1, 0)};
  std::vector<double> errs;
  for (double h : {0.2, 0.1, 0.05}) {
    IntegratorConfig cfg;
    cfg.rel_tol = cfg.abs_tol = 1e6;  // accept every step
    cfg.max_step = cfg.initial_step = h;
    cfg.projection = false;
    const Trace tr = integrate_cg(flat, s, 10.0, cfg);
    CHECK(tr.rejected_steps() == 0);
    errs.push_back((tr.state(tr.size() - 1).x -
                    v3(std::sin(10.0), 1 - std::cos(10.0), 0)).norm());
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double order = std::log2(errs[i - 1] / errs[i]);
    CHECK(order >= 4.0);
  }
}

TEST_CASE("time reversal") {
  std::mt19937_64 rng(77);
  for (const auto& m : {MetricField::sphere(3), MetricField::hyperbolic(3)}) {
    const CGState s0 = random_state(rng, m, v3(0.1, -0.2, 0.05), 1.2, 2.0);
    const Trace fwd = integrate_cg(m, s0, 3.0);
    CGState back = fwd.state(fwd.size() - 1);
    back.u = -back.u;
    const Trace bwd = integrate_cg(m, back, 3.0);
    CHECK((bwd.state(bwd.size() - 1).x - s0.x).norm() < 1e-7);
  }
}

TEST_CASE("integration errors") {
  const auto flat = MetricField::euclidean(3);
  CHECK(code_of([&] {
          integrate_cg(flat, {v3(0, 0, 0), v3(2, 0, 0), v3(0, 0, 0)}, 1.0);
        }) == Errc::ConstraintViolation);
  CHECK(code_of([&] {
          integrate_cg(flat, {v3(0, 0, 0), v3(1, 0, 0), v3(0.1, 1, 0)}, 1.0);
        }) == Errc::ConstraintViolation);
  CHECK(code_of([&] {
          IntegratorConfig cfg;
          cfg.max_steps = 5;
          integrate_cg(flat, {v3(0, 0, 0), v3(1, 0, 0), v3(0, 1, 0)}, 10.0, cfg);
        }) == Errc::MaxStepsExceeded);
  CHECK(code_of([&] {
          IntegratorConfig cfg;
          cfg.rel_tol = -1;
          integrate_cg(flat, {v3(0, 0, 0), v3(1, 0, 0), v3(0, 1, 0)}, 1.0, cfg);
        }) == Errc::InvalidArgument);
  // Omega vanishes at x1 = 1, a finite distance from the origin along e1
  const auto walled =
      MetricField::conformally_flat(Expr::parse("log(2 - x1)", 3));
  const Vec x0 = v3(0, 0, 0);
  const Vec u0 = v3(1, 0, 0) / norm(walled.metric(x0), v3(1, 0, 0));
  CHECK(code_of([&] { integrate_metric_geodesic(walled, x0, u0, 10.0); }) ==
        Errc::StepFailure);
}

TEST_CASE("CSV layout") {
  const auto flat = MetricField::euclidean(3);
  const Trace tr =
      integrate_cg(flat, {v3(0, 0, 0), v3(1, 0, 0), v3(0, 1, 0)}, 1.0);
  std::ostringstream os;
  tr.write_csv(os);
  const std::string csv = os.str();
  CHECK(csv.rfind("t,x1,x2,x3,u1,u2,u3,a1,a2,a3,res_unit,res_perp\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == tr.size() + 1);
  std::istringstream is(csv);
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  std::size_t commas = 0;
  for (char c : row) commas += c == ',';
  CHECK(commas == 11);
}
