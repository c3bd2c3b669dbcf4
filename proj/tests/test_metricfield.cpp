#include "doctest.h"

#include "cgeo/error.hpp"
#include "cgeo/metric.hpp"

#include <cmath>
#include <functional>
#include <random>

using namespace cgeo;

namespace {

Vec point(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

MetricField perturbed_flat() {
  const char* diag = "1 + 0.1*sin(x1)*x2^2";
  const char* off = "0.05*cos(x1 + x3)";
  std::vector<Expr> c;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      std::string s = a == b ? diag : off;
      if (a == b) s += " + " + std::to_string(a) + "*0.2*x3^2";
      c.push_back(Expr::parse(s, 3));
    }
  }
  return MetricField::custom(c);
}

// Curvature from nothing but values of g, by nested central differences.
struct FdCurvature {
  std::vector<double> gamma;  // (a*d+b)*d+c
  Mat ricci;
};

std::vector<double> fd_christoffel(const MetricField& m, const Vec& x,
                                   double h) {
  const int d = m.dim();
  std::vector<Mat> dg(d);
  for (int c = 0; c < d; ++c) {
    Vec p = x, q = x;
    p(c) += h;
    q(c) -= h;
    dg[c] = (m.metric(p) - m.metric(q)) / (2 * h);
  }
  const Mat gi = m.metric(x).inverse();
  std::vector<double> out(d * d * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) {
        double s = 0;
        for (int k = 0; k < d; ++k)
          s += 0.5 * gi(a, k) * (dg[b](k, c) + dg[c](k, b) - dg[k](b, c));
        out[(a * d + b) * d + c] = s;
      }
  return out;
}

FdCurvature fd_curvature(const MetricField& m, const Vec& x) {
  const int d = m.dim();
  const double h = 1e-4;
  FdCurvature r;
  r.gamma = fd_christoffel(m, x, h);
  std::vector<std::vector<double>> dgam(d);
  for (int e = 0; e < d; ++e) {
    Vec p = x, q = x;
    p(e) += h;
    q(e) -= h;
    auto gp = fd_christoffel(m, p, h);
    auto gq = fd_christoffel(m, q, h);
    dgam[e].resize(gp.size());
    for (std::size_t i = 0; i < gp.size(); ++i)
      dgam[e][i] = (gp[i] - gq[i]) / (2 * h);
  }
  auto G = [&](int a, int b, int c) { return r.gamma[(a * d + b) * d + c]; };
  r.ricci = Mat::Zero(d, d);
  for (int b = 0; b < d; ++b)
    for (int c = 0; c < d; ++c) {
      double s = 0;
      for (int a = 0; a < d; ++a) {
        s += dgam[a][(a * d + b) * d + c] - dgam[c][(a * d + a) * d + b];
        for (int e = 0; e < d; ++e)
          s += G(a, a, e) * G(e, b, c) - G(a, c, e) * G(e, a, b);
      }
      r.ricci(b, c) = s;
    }
  return r;
}

Vec random_point(std::mt19937_64& rng, int d, double radius) {
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> u(0, 1);
  Vec v(d);
  for (int i = 0; i < d; ++i) v(i) = n(rng);
  return v.normalized() * radius * std::pow(u(rng), 1.0 / d);
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("eval_metric examples") {
  auto e = eval_metric(MetricField::euclidean(3), point({1, 2, 3}));
  CHECK(max_abs(e.g - Mat::Identity(3, 3)) == 0.0);

  e = eval_metric(MetricField::sphere(3), point({0, 0, 0}));
  CHECK(max_abs(e.g - 4 * Mat::Identity(3, 3)) < 1e-15);
  CHECK(max_abs(e.g * e.g_inv - Mat::Identity(3, 3)) < 1e-12);

  const Vec x = point({0.3, -0.2, 0.5});
  e = eval_metric(MetricField::sphere(3), x);
  const double w = 4 / std::pow(1 + x.squaredNorm(), 2);
  CHECK(max_abs(e.g - w * Mat::Identity(3, 3)) < 1e-14);

  try {
    eval_metric(MetricField::hyperbolic(3), point({1.5, 0, 0}));
    FAIL("expected DomainError");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::DomainError);
  }
}

TEST_CASE("construction errors") {
  auto code = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::Unsupported;
  };
  CHECK(code([] { MetricField::euclidean(2); }) == Errc::InvalidArgument);
  CHECK(code([] { MetricField::sphere(3, -1); }) == Errc::InvalidArgument);
  CHECK(code([] {
          std::vector<Expr> c;
          for (int i = 0; i < 9; ++i)
            c.push_back(Expr::parse(i == 1 ? "x1" : (i % 4 ? "0" : "1"), 3));
          MetricField::custom(c);
        }) == Errc::InvalidArgument);
  CHECK(code([] {
          auto m = MetricField::custom(
              {Expr::parse("1", 3), Expr::parse("2", 3), Expr::parse("0", 3),
               Expr::parse("2", 3), Expr::parse("1", 3), Expr::parse("0", 3),
               Expr::parse("0", 3), Expr::parse("0", 3), Expr::parse("1", 3)});
          m.metric(point({0, 0, 0}));
        }) == Errc::NotPositiveDefinite);
  CHECK(code([] {
          auto m = MetricField::conformally_flat(Expr::parse("x1", 3));
          m.metric(point({-1, 0, 0}));
        }) == Errc::NonPositiveFactor);
}

TEST_CASE("not positive definite reports smallest eigenvalue") {
  auto m = MetricField::custom(
      {Expr::parse("1", 3), Expr::parse("2", 3), Expr::parse("0", 3),
       Expr::parse("2", 3), Expr::parse("1", 3), Expr::parse("0", 3),
       Expr::parse("0", 3), Expr::parse("0", 3), Expr::parse("1", 3)});
  try {
    m.metric(point({0, 0, 0}));
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("-1") != std::string::npos);
  }
}

TEST_CASE("flat curvature is exactly zero") {
  const auto cd = curvature(MetricField::euclidean(4), point({1, 2, 3, 4}));
  for (double v : cd.christoffel) CHECK(v == 0.0);
  CHECK(max_abs(cd.ricci) == 0.0);
  CHECK(cd.scalar == 0.0);
  CHECK(max_abs(cd.schouten) == 0.0);
}

TEST_CASE("constant curvature Schouten law") {
  std::mt19937_64 rng(5);
  for (int d = 3; d <= 5; ++d) {
    for (int i = 0; i < 50; ++i) {
      const Vec xs = random_point(rng, d, 2.0);
      const auto s = curvature(MetricField::sphere(d), xs);
      CHECK(max_abs(s.schouten - 0.5 * s.g) < 1e-8);
      CHECK(std::abs(s.scalar - d * (d - 1)) < 1e-8);
      const Vec xh = random_point(rng, d, 0.9);
      const auto h = curvature(MetricField::hyperbolic(d), xh);
      CHECK(max_abs(h.schouten + 0.5 * h.g) < 1e-8 * (1 + max_abs(h.g)));
    }
  }
  // radius r scales L by 1/r^2
  const auto s = curvature(MetricField::sphere(3, 2.0), point({0.5, 1, -1}));
  CHECK(max_abs(s.schouten - s.g / 8.0) < 1e-10);
}

TEST_CASE("symmetry invariants on built-in metrics") {
  std::mt19937_64 rng(17);
  const std::vector<std::pair<MetricField, double>> metrics = {
      {MetricField::euclidean(3), 3.0},
      {MetricField::sphere(3), 2.0},
      {MetricField::hyperbolic(3), 0.9},
      {MetricField::conformally_flat(
           Expr::parse("exp(0.3*x1 - 0.2*x2*x3)", 3)),
       1.0},
      {perturbed_flat(), 1.0},
  };
  for (const auto& [m, rad] : metrics) {
    for (int i = 0; i < 100; ++i) {
      const Vec x = random_point(rng, 3, rad);
      const auto cd = curvature(m, x);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c)
            CHECK(cd.gamma(a, b, c) == cd.gamma(a, c, b));
      CHECK(max_abs(cd.ricci - cd.ricci.transpose()) == 0.0);
      CHECK(max_abs(cd.schouten - cd.schouten.transpose()) < 1e-15);
      CHECK(max_abs(cd.schouten_endo - cd.g_inv * cd.schouten) <= 1e-12);
    }
  }
}

TEST_CASE("finite difference curvature oracle") {
  std::mt19937_64 rng(23);
  const std::vector<std::pair<MetricField, double>> metrics = {
      {MetricField::sphere(3), 1.5},
      {MetricField::hyperbolic(3), 0.7},
      {MetricField::conformally_flat(Expr::parse("1 + 0.2*x1^2 + x2*x3/10", 3)),
       1.0},
      {perturbed_flat(), 1.0},
  };
  for (const auto& [m, rad] : metrics) {
    for (int i = 0; i < 10; ++i) {
      const Vec x = random_point(rng, 3, rad);
      const auto cd = curvature(m, x);
      const auto fd = fd_curvature(m, x);
      double gscale = 1e-3;
      for (double v : fd.gamma) gscale = std::max(gscale, std::abs(v));
      for (std::size_t k = 0; k < fd.gamma.size(); ++k)
        CHECK(std::abs(fd.gamma[k] - cd.christoffel[k]) <= 1e-5 * gscale);
      const double rscale = std::max(1e-3, max_abs(fd.ricci));
      CHECK(max_abs(fd.ricci - cd.ricci) <= 1e-5 * rscale);
    }
  }
}

TEST_CASE("conformal_rescale") {
  const auto flat = MetricField::euclidean(3);
  const auto twice = conformal_rescale(flat, ConformalFactor::constant(2, 3));
  CHECK(max_abs(twice.metric(point({1, 2, 3})) - 4 * Mat::Identity(3, 3)) ==
        0.0);

  const auto stereo = conformal_rescale(
      flat, ConformalFactor::expression(
                Expr::parse("2/(1 + x1^2 + x2^2 + x3^2)", 3)));
  const auto sphere = MetricField::sphere(3);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const Vec x = random_point(rng, 3, 2.0);
    const auto a = stereo.jet(x);
    const auto b = sphere.jet(x);
    CHECK(max_abs(a.g - b.g) < 1e-13);
    for (int c = 0; c < 3; ++c) {
      CHECK(max_abs(a.dg[c] - b.dg[c]) < 1e-12);
      for (int e = 0; e < 3; ++e) CHECK(max_abs(a.ddg[c][e] - b.ddg[c][e]) < 1e-11);
    }
    const auto ca = curvature(stereo, x);
    CHECK(max_abs(ca.schouten - 0.5 * ca.g) < 1e-8);
  }

  const Vec x = point({0.2, 0.1, -0.3});
  const auto base = curvature(sphere, x);
  const auto scaled =
      curvature(conformal_rescale(sphere, ConformalFactor::constant(3, 3)), x);
  CHECK(max_abs(base.schouten - scaled.schouten) < 1e-12);
}

TEST_CASE("transform_conformal_data examples") {
  const auto flat = MetricField::euclidean(3);
  const Vec o = point({0, 0, 0});
  const Vec e1 = unit(3, 0), e2 = unit(3, 1);

  auto cd = transform_conformal_data(flat, ConformalFactor::constant(2, 3), o,
                                     e1, e2);
  CHECK(max_abs(cd.u_hat - e1 / 2) == 0.0);
  CHECK(max_abs(cd.a_hat - e2 / 4) == 0.0);
  CHECK(max_abs(cd.schouten_hat) == 0.0);

  cd = transform_conformal_data(
      flat, ConformalFactor::expression(Expr::parse("exp(x1)", 3)), o, e1, e2);
  CHECK(max_abs(cd.u_hat - e1) < 1e-15);
  CHECK(max_abs(cd.a_hat - e2) < 1e-15);

  try {
    transform_conformal_data(flat, ConformalFactor::constant(2, 3), o, 2 * e1,
                             e2);
    FAIL("expected ConstraintViolation");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConstraintViolation);
  }
}

TEST_CASE("Schouten transformation law against direct curvature") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0, 1);
  const std::vector<std::pair<MetricField, double>> metrics = {
      {MetricField::euclidean(3), 1.0},
      {MetricField::sphere(3), 1.5},
      {MetricField::hyperbolic(3), 0.7},
      {perturbed_flat(), 0.8},
  };
  const std::vector<const char*> omegas = {
      "1 + x1^2/10", "exp(0.3*x2 - 0.1*x1*x3)", "2 + sin(x1 + 2*x2)",
      "cosh_free", "1/(1 + 0.2*(x1^2 + x3^2))"};
  int count = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto& [m, rad] = metrics[trial % metrics.size()];
    const char* src = omegas[trial % omegas.size()];
    if (std::string(src) == "cosh_free") src = "(exp(x3) + exp(-x3))/2";
    const auto omega = ConformalFactor::expression(Expr::parse(src, 3));
    const Vec x = random_point(rng, 3, rad);
    const Mat g = m.metric(x);
    Vec u(3), a(3);
    for (int i = 0; i < 3; ++i) u(i) = n(rng), a(i) = n(rng);
    u /= norm(g, u);
    a -= inner(g, u, a) * u;
    const auto cd = transform_conformal_data(m, omega, x, u, a);
    const auto rescaled = conformal_rescale(m, omega);
    const auto direct = curvature(rescaled, x);
    CHECK(max_abs(cd.schouten_hat - direct.schouten) < 1e-8);
    CHECK(std::abs(inner(direct.g, cd.u_hat, cd.u_hat) - 1) < 1e-10);
    CHECK(std::abs(inner(direct.g, cd.u_hat, cd.a_hat)) < 1e-10);
    ++count;
  }
  CHECK(count == 20);

  // the sphere example with three random points
  const auto omega =
      ConformalFactor::expression(Expr::parse("1 + x1^2/10", 3));
  const auto sphere = MetricField::sphere(3);
  for (int i = 0; i < 3; ++i) {
    const Vec x = random_point(rng, 3, 1.5);
    const Mat g = sphere.metric(x);
    const Vec u = unit(3, 0) / norm(g, unit(3, 0));
    const auto cd = transform_conformal_data(sphere, omega, x, u, zeros(3));
    const auto direct = curvature(conformal_rescale(sphere, omega), x);
    CHECK(max_abs(cd.schouten_hat - direct.schouten) < 1e-8);
  }
}
