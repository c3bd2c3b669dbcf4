#include "cli/verify.hpp"

#include "cli/experiments.hpp"
#include "cgeo/error.hpp"
#include "cgeo/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace cgeo::cli {

namespace {

constexpr double kPi = std::numbers::pi;

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

Check at_most(std::string name, double value, double bound, std::string note = {}) {
  return {std::move(name), value, bound, false, value <= bound, std::move(note)};
}

Check at_least(std::string name, double value, double bound, std::string note = {}) {
  return {std::move(name), value, bound, true, value >= bound, std::move(note)};
}

MetricField perturbed_flat() {
  return MetricField::conformally_flat(Expr::parse("1 + 0.1*x1*x2 + 0.2*x3^2", 3));
}

std::vector<MetricField> four_metrics() {
  return {MetricField::euclidean(3), MetricField::sphere(3),
          MetricField::hyperbolic(3), perturbed_flat()};
}

IntegratorConfig tight() {
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-12;
  cfg.abs_tol = 1e-15;
  return cfg;
}

using Suite = std::function<std::vector<Check>(Rng&)>;

std::vector<Check> circle(Rng&) {
  const auto flat = MetricField::euclidean(3);
  const Trace tr = integrate_cg(flat, {v3(0, 0, 0), v3(1, 0, 0), v3(0, 1, 0)}, 10.0);
  double err = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double t = 10.0 * i / 2000;
    err = std::max(err, (tr.position_at(t) - v3(std::sin(t), 1 - std::cos(t), 0)).norm());
  }
  const Trace line = integrate_cg(flat, {v3(0, 0, 0), v3(1, 0, 0), v3(0, 0, 0)}, 10.0);
  double lerr = 0.0;
  for (std::size_t k = 0; k < line.size(); ++k) {
    lerr = std::max(lerr, (line.state(k).x - line.times()[k] * v3(1, 0, 0)).norm());
  }
  return {at_most("circle sup error on [0,10]", err, 1e-8),
          at_most("straight line sup error", lerr, 1e-12)};
}

std::vector<Check> constraints(Rng& rng) {
  std::vector<Check> out;
  const std::vector<std::pair<MetricField, double>> metrics = {
      {MetricField::euclidean(3), 0.2}, {MetricField::sphere(3), 0.2},
      {MetricField::hyperbolic(3), 1.1}, {perturbed_flat(), 0.2}};
  for (const auto& [m, a_lo] : metrics) {
    double res = 0.0;
    for (int k = 0; k < 3; ++k) {
      const auto s0 = random_state(rng, m, rng.in_ball(3, 0.3), a_lo, a_lo + 1.0);
      const Trace tr = integrate_cg(m, s0, 20.0);
      res = std::max({res, tr.max_res_unit(), tr.max_res_perp()});
    }
    out.push_back(at_most(m.description() + ": max constraint residual", res, 1e-8));
  }
  return out;
}

std::vector<Check> conformal_invariance(Rng& rng) {
  const std::vector<MetricField> metrics = {
      MetricField::euclidean(3), MetricField::sphere(3), perturbed_flat()};
  const std::vector<const char*> omegas = {
      "exp(0.2*x1 - 0.1*x2*x3)", "1 + 0.1*(x1^2 + x2^2 + x3^2)",
      "2 + sin(x2)", "1/(1 + 0.3*x3^2)", "(exp(x3) + exp(-x3))/2"};
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto& m = metrics[trial % metrics.size()];
    const auto om = ConformalFactor::expression(
        Expr::parse(omegas[trial % omegas.size()], 3));
    const auto mh = conformal_rescale(m, om);
    const CGState s0 = random_state(rng, m, rng.in_ball(3, 0.4), 0.2, 1.5);
    const Trace tg = integrate_cg(m, s0, 3.0);
    // length of the g-trace in the rescaled metric, trapezoidal
    double lhat = 0.0;
    for (std::size_t k = 1; k < tg.size(); ++k) {
      const double h = tg.times()[k] - tg.times()[k - 1];
      lhat += 0.5 * h * (om.eval(tg.state(k).x).value + om.eval(tg.state(k - 1).x).value);
    }
    const Trace th = integrate_cg(mh, conformal_pushforward(s0, m, om), 0.95 * lhat);
    worst = std::max(worst, one_sided_hausdorff(th, tg));
  }
  return {at_most("max point-set deviation over 10 triples", worst, 1e-6)};
}

std::vector<Check> schouten(Rng& rng) {
  const auto sphere = MetricField::sphere(3);
  const auto hyp = MetricField::hyperbolic(3);
  double es = 0.0, eh = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto s = curvature(sphere, rng.in_ball(3, 2.0));
    es = std::max(es, max_abs(s.schouten - 0.5 * s.g));
    const auto h = curvature(hyp, rng.in_ball(3, 0.9));
    eh = std::max(eh, max_abs(h.schouten + 0.5 * h.g) / (1 + max_abs(h.g)));
  }
  const std::vector<std::pair<MetricField, double>> metrics = {
      {MetricField::euclidean(3), 1.0}, {sphere, 1.5}, {hyp, 0.7}, {perturbed_flat(), 0.8}};
  const std::vector<const char*> omegas = {"1 + x1^2/10", "exp(0.3*x2 - 0.1*x1*x3)",
                                           "2 + sin(x1 + 2*x2)",
                                           "1/(1 + 0.2*(x1^2 + x3^2))"};
  double et = 0.0;
  for (int trial = 0; trial < 12; ++trial) {
    const auto& [m, rad] = metrics[trial % metrics.size()];
    const auto om = ConformalFactor::expression(
        Expr::parse(omegas[trial % omegas.size()], 3));
    const Vec x = rng.in_ball(3, rad);
    const CGState s = random_state(rng, m, x, 0.1, 1.0);
    const auto cd = transform_conformal_data(m, om, x, s.u, s.a);
    const auto direct = curvature(conformal_rescale(m, om), x);
    et = std::max(et, max_abs(cd.schouten_hat - direct.schouten));
  }
  return {at_most("sphere: |L - g/2| at 50 points", es, 1e-8),
          at_most("hyperbolic: |L + g/2| / (1 + |g|) at 50 points", eh, 1e-8),
          at_most("transformation rule vs direct Schouten", et, 1e-8)};
}

std::vector<Check> ray_angle(Rng&) {
  std::vector<Check> out;
  const Vec p = v3(0.2, 0.1, -0.1);
  for (const auto& m : four_metrics()) {
    const auto [u0, ahat] = unit_pair(m.metric(p), v3(0.3, 1, 0), v3(0, 0.5, 1));
    double err = 0.0;
    for (int i = 0; i <= 14; ++i) {
      const double th = 0.1 * i;
      err = std::max(err, std::abs(ray_image_angle(m, p, u0, ahat, th) - kPi * std::sin(th)));
    }
    out.push_back(at_most(m.description() + ": max |angle - pi sin theta0|", err, 5e-3));
  }
  return out;
}

std::vector<Check> dexp(Rng&) {
  std::vector<Check> out;
  const double h = 1e-4;
  const auto cfg = tight();
  const Vec p = v3(0.1, -0.2, 0.15);
  for (const auto& m : four_metrics()) {
    const Mat g = m.metric(p);
    const auto [u0, ahat] = unit_pair(g, v3(1, 0.2, 0), v3(0, 1, 0.3));
    double err = 0.0, plain = 0.0;
    for (int i = 0; i <= 6; ++i) {
      const double th = 0.25 * i;
      const Vec A = std::cos(th) * u0 + std::sin(th) * ahat;
      const Vec c1 = exp_cg(m, p, u0, h * A, cfg) - p;
      const Vec c2 = exp_cg(m, p, u0, 0.5 * h * A, cfg) - p;
      const Vec ref = dexp_zero(g, u0, A);
      err = std::max(err, norm(g, (4.0 * c2 - c1) / h - ref));
      plain = std::max(plain, norm(g, c1 / h - ref));
    }
    out.push_back(at_most(m.description() + ": Richardson difference quotient", err, 1e-4));
    if (m.kind() == MetricKind::Euclidean) {
      out.push_back(at_most("euclidean: forward difference quotient", plain, 1e-4));
    }
  }
  return out;
}

std::vector<Check> f_functions_suite(Rng&) {
  double m1 = std::numeric_limits<double>::infinity(), m2 = m1, m3 = m1;
  for (int i = 0; i <= 140; ++i) {
    const auto f = f_functions(0.01 * i);
    m1 = std::min(m1, f.f1);
    m2 = std::min(m2, f.f2);
    m3 = std::min(m3, f.f3);
  }
  const auto h = f_functions(kPi / 2);
  const double tiny = std::numeric_limits<double>::min();
  return {at_least("min f1 on [0, 1.4]", m1, tiny), at_least("min f2 on [0, 1.4]", m2, tiny),
          at_least("min f3 on [0, 1.4]", m3, tiny),
          at_most("|f1(pi/2)|", std::abs(h.f1), 1e-10),
          at_most("|f2(pi/2) - pi|", std::abs(h.f2 - kPi), 1e-10),
          at_most("|f3(pi/2)|", std::abs(h.f3), 1e-10)};
}

std::vector<Check> cardioid(Rng&) {
  const auto flat = MetricField::euclidean(3);
  const auto h = trace_heart_boundary(flat, v3(0.2, -0.4, 0.1), v3(2, 1, 2) / 3.0, 0.5);
  const auto dev = cardioid_deviation(h);
  return {at_most("max vertex deviation from the cardioid solid", dev.max_deviation, 1e-6),
          at_most("far pole vs p + 4 pi r u0", dev.pole_error, 1e-6)};
}

std::vector<Check> remainder(Rng&) {
  const Vec p = v3(0.2, 0.1, -0.1);
  const Vec e1 = v3(1, 0, 0), e2 = v3(0, 1, 0);
  std::vector<Check> out;
  const auto fe = remainder_order(MetricField::euclidean(3), p, e1,
                                  std::cos(kPi / 4) * e1 + std::sin(kPi / 4) * e2);
  out.push_back(at_most("euclidean: max remainder",
                        *std::max_element(fe.remainders.begin(), fe.remainders.end()),
                        1e-11, fe.degenerate ? "degenerate fit" : ""));
  for (auto [m, th] : {std::pair{MetricField::sphere(3), kPi / 4},
                       std::pair{MetricField::hyperbolic(3), kPi / 6}}) {
    const auto [u0, a] = unit_pair(m.metric(p), e1, e2);
    const auto fit = remainder_order(m, p, u0, std::cos(th) * u0 + std::sin(th) * a);
    out.push_back(at_least(m.description() + ": log-log slope",
                           fit.degenerate ? 0.0 : fit.slope, 2.7));
  }
  return out;
}

std::vector<Check> heart_exit_suite(Rng& rng) {
  std::vector<Check> out;
  const auto flat = MetricField::euclidean(3);
  const Vec o = v3(0, 0, 0), e1 = v3(1, 0, 0);
  HeartConfig hc;
  hc.resolution = 24;
  const auto hf = trace_heart_boundary(flat, o, e1, 0.5, hc);
  const auto ax = heart_exit(flat, integrate_cg(flat, {o, e1, v3(0, 0, 0)}, 8.0), hf);
  const auto ci = heart_exit(flat, integrate_cg(flat, {o, e1, v3(0, 1, 0)}, 2 * kPi), hf);
  out.push_back(at_most("euclidean axis line: |t_exit - 2 pi|", std::abs(ax.t_exit - 2 * kPi), 1e-4));
  out.push_back(at_most("euclidean |a0| = 1: |t_exit - 2 pi/sqrt 2|",
                        std::abs(ci.t_exit - 2 * kPi / std::sqrt(2.0)), 1e-4));

  for (auto [m, r] : {std::pair{MetricField::sphere(3), 0.25},
                      std::pair{MetricField::hyperbolic(3), 0.5}}) {
    const Vec p = v3(0.1, -0.05, 0.2);
    const auto [u0, ahat] = unit_pair(m.metric(p), v3(1, 0.3, -0.2), v3(0, 1, 0));
    hc.resolution = 16;
    const auto h = trace_heart_boundary(m, p, u0, r, hc);
    double worst = -1e300;
    int within_2pi = 0;
    const int launches = 4;
    for (int k = 0; k < launches; ++k) {
      CGState s = random_state(rng, m, p, 0.0, 2.0);
      s.u = u0;
      const Mat g = m.metric(p);
      s.a -= inner(g, u0, s.a) * u0;
      const Trace tr = integrate_cg(m, s, 1.1 * 4 * kPi * r);
      const auto e = heart_exit(m, tr, h);
      worst = std::max(worst, e.t_exit - 4 * kPi * r);
      within_2pi += e.within_2pi_r;
    }
    out.push_back(at_most(m.description() + ": max t_exit - 4 pi r", worst, 1e-6,
                          std::to_string(within_2pi) + "/" + std::to_string(launches) +
                              " launches also within 2 pi r"));
  }
  return out;
}

std::vector<Check> injectivity(Rng&) {
  InjectivityConfig cfg;
  cfg.r_max = 3.0;
  const auto rep = injectivity_scan(MetricField::euclidean(3), v3(0.1, 0.2, -0.3),
                                    v3(1, 0, 0), cfg);
  return {at_most("euclidean: |est_r - 0.5|", std::abs(rep.est_r - 0.5), 0.0,
                  rep.witness ? "collision found" : "no collision")};
}

std::vector<Check> no_spiral(Rng& rng) {
  std::vector<Check> out;
  const std::vector<std::tuple<MetricField, double, double>> metrics = {
      {MetricField::euclidean(3), 0.2, 1.5},
      {MetricField::sphere(3), 0.2, 1.5},
      // |a| > 1 keeps hyperbolic conformal geodesics closed inside the chart
      {MetricField::hyperbolic(3), 1.1, 2.0}};
  const std::vector<double> radii{0.4, 0.2, 0.1, 0.05};
  for (const auto& [m, lo, hi] : metrics) {
    const int n = 20;
    std::vector<std::uint64_t> seeds(n);
    for (auto& s : seeds) s = rng.next();
    std::vector<NoSpiralRun> runs(n);
    parallel_for(n, [&](std::size_t i) {
      Rng local(seeds[i]);
      const auto s0 = random_state(local, m, local.in_ball(3, 0.5), lo, hi);
      runs[i] = no_spiral_run(m, s0, 200.0, radii, {}, 5, 0.1, local, {}, true);
    });
    int truncated = 0, unresolved = 0;
    double res = 0.0;
    for (const auto& r : runs) {
      truncated += r.truncated;
      unresolved += r.unresolved;
      res = std::max({res, r.max_res_unit, r.max_res_perp});
    }
    out.push_back(at_most(m.description() + ": unresolved TRAPPED verdicts", unresolved, 0.0,
                          std::to_string(truncated) + " truncations before doubling t_end"));
    out.push_back(at_most(m.description() + ": max constraint residual", res, 1e-8));
  }
  return out;
}

std::vector<Check> size(Rng&) {
  std::vector<Check> out;
  // off the origin: the sphere heart at r = 1/4 reaches the antipode of p,
  // which for p = 0 is the chart's point at infinity
  const Vec p = v3(0.1, -0.05, 0.2);
  for (const auto& m : {MetricField::euclidean(3), MetricField::sphere(3),
                        MetricField::hyperbolic(3)}) {
    const Vec u0 = v3(1, 0, 0) / norm(m.metric(p), v3(1, 0, 0));
    const double r = injectivity_scan(m, p, u0).est_r;
    HeartConfig hc;
    hc.resolution = 16;
    const auto s16 = heart_size_R(m, trace_heart_boundary(m, p, u0, r, hc));
    hc.resolution = 32;
    const auto s32 = heart_size_R(m, trace_heart_boundary(m, p, u0, r, hc));
    const std::string name = m.description();
    const double tiny = std::numeric_limits<double>::min();
    out.push_back(at_least(name + ": R", s32.R, tiny));
    out.push_back(at_least(name + ": R1", s32.R1, tiny));
    out.push_back(at_least(name + ": R2", s32.R2, tiny));
    auto rel = [](double a, double b) { return std::abs(a - b) / b; };
    out.push_back(at_most(name + ": R change under refinement", rel(s16.R, s32.R), 0.05));
    out.push_back(at_most(name + ": R1 change under refinement", rel(s16.R1, s32.R1), 0.05));
    out.push_back(at_most(name + ": R2 change under refinement", rel(s16.R2, s32.R2), 0.05));
    out.push_back(at_most(name + ": min(R1, R2/2) - R - bracket",
                          std::min(s32.R1, 0.5 * s32.R2) - s32.R - s32.bracket, 0.0));
  }
  return out;
}

std::vector<Check> determinism(Rng& rng) {
  const auto sphere = MetricField::sphere(3);
  const std::uint64_t seed = rng.next();
  auto trace_csv = [&] {
    Rng local(seed);
    const auto s0 = random_state(local, sphere, local.in_ball(3, 0.5), 0.2, 1.5);
    std::ostringstream os;
    integrate_cg(sphere, s0, 20.0).write_csv(os);
    return os.str();
  };
  auto heart_json = [&] {
    HeartConfig hc;
    hc.resolution = 8;
    const Vec p = v3(0.1, 0, 0);
    const Vec u0 = v3(1, 0, 0) / norm(sphere.metric(p), v3(1, 0, 0));
    const auto h = trace_heart_boundary(sphere, p, u0, 0.2, hc);
    return embed(h).dump();
  };
  auto spiral_json = [&] {
    Rng local(seed);
    const auto s0 = random_state(local, sphere, local.in_ball(3, 0.5), 0.2, 1.5);
    return no_spiral_json(no_spiral_run(sphere, s0, 20.0, {0.2}, {}, 3, 0.1, local, {}, true))
        .dump();
  };
  return {at_most("trace CSV mismatches", trace_csv() != trace_csv(), 0.0),
          at_most("heart JSON mismatches", heart_json() != heart_json(), 0.0),
          at_most("spiral JSON mismatches", spiral_json() != spiral_json(), 0.0)};
}

const std::vector<std::pair<std::string, Suite>>& registry() {
  static const std::vector<std::pair<std::string, Suite>> r = {
      {"circle", circle},
      {"constraints", constraints},
      {"conformal-invariance", conformal_invariance},
      {"schouten", schouten},
      {"ray-angle", ray_angle},
      {"dexp", dexp},
      {"f-functions", f_functions_suite},
      {"cardioid", cardioid},
      {"remainder", remainder},
      {"heart-exit", heart_exit_suite},
      {"injectivity", injectivity},
      {"no-spiral", no_spiral},
      {"size", size},
      {"determinism", determinism},
  };
  return r;
}

}  // namespace

bool SuiteResult::pass() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : registry()) n.push_back(name);
    return n;
  }();
  return names;
}

SuiteResult run_suite(const std::string& name, std::uint64_t seed) {
  const auto& r = registry();
  const auto it = std::find_if(r.begin(), r.end(), [&](const auto& e) { return e.first == name; });
  if (it == r.end()) throw Error(Errc::InvalidArgument, "unknown suite '" + name + "'");
  // per-suite stream so results do not depend on which suites were selected
  std::uint64_t h = 1469598103934665603ull;
  for (char c : name) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
  Rng rng(seed ^ h);
  SuiteResult res;
  res.name = name;
  try {
    res.checks = it->second(rng);
  } catch (const Error& e) {
    res.checks.push_back({"completed without error", 0.0, 0.0, false, false, e.what()});
  }
  return res;
}

void write_json(std::ostream& os, const std::vector<SuiteResult>& results) {
  ojson j;
  bool all = true;
  ojson suites = ojson::array();
  for (const auto& s : results) {
    ojson sj;
    sj["name"] = s.name;
    sj["pass"] = s.pass();
    all = all && s.pass();
    ojson cs = ojson::array();
    for (const auto& c : s.checks) {
      ojson cj;
      cj["name"] = c.name;
      cj["value"] = c.value;
      cj[c.at_least ? "lower_bound" : "upper_bound"] = c.bound;
      cj["pass"] = c.pass;
      if (!c.note.empty()) cj["note"] = c.note;
      cs.push_back(std::move(cj));
    }
    sj["checks"] = std::move(cs);
    suites.push_back(std::move(sj));
  }
  j["pass"] = all;
  j["suites"] = std::move(suites);
  os << j.dump(1) << '\n';
}

}  // namespace cgeo::cli
