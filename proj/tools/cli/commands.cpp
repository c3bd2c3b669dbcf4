#include "cli/commands.hpp"

#include "cli/config.hpp"
#include "cli/experiments.hpp"
#include "cli/verify.hpp"
#include "cgeo/error.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

namespace cgeo::cli {

namespace {

namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

struct Context {
  RunConfig cfg;
  MetricField metric = MetricField::euclidean(3);
  fs::path out;
  std::set<std::string> formats;
  std::ostream* log = nullptr;

  bool wants(const std::string& f) const { return formats.count(f) > 0; }

  void write(const std::string& name, const std::function<void(std::ostream&)>& fn) const {
    const fs::path path = out / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(Errc::InvalidArgument, "cannot write " + path.string());
    fn(os);
    if (!os) throw Error(Errc::InvalidArgument, "write failed for " + path.string());
    *log << "wrote " << path.string() << '\n';
  }

  void write_json(const std::string& name, const ojson& j) const {
    write(name, [&](std::ostream& os) { os << j.dump(1) << '\n'; });
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Polylines in a plane, scaled into a 600 x 600 viewport.
void write_polyline_svg(std::ostream& os,
                        const std::vector<std::vector<std::pair<double, double>>>& lines) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& l : lines) {
    for (const auto& [x, y] : l) {
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  }
  if (x0 > x1) x0 = x1 = y0 = y1 = 0.0;
  const double span = std::max({x1 - x0, y1 - y0, 1e-12});
  const double s = 560.0 / span;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" "
        "viewBox=\"0 0 600 600\">\n";
  for (const auto& l : lines) {
    os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < l.size(); ++i) {
      if (i) os << ' ';
      os << num(20 + (l[i].first - x0) * s) << ',' << num(580 - (l[i].second - y0) * s);
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
}

// Chart-orthonormal basis of the (u0, a0) plane; a0 = 0 falls back to the
// coordinate axis least aligned with u0.
std::pair<Vec, Vec> projection_plane(const Vec& u0, const Vec& a0) {
  const Vec e1 = u0.normalized();
  Vec e2 = a0 - a0.dot(e1) * e1;
  if (e2.norm() < 1e-12 * std::max(1.0, a0.norm())) {
    int k = 0;
    e1.cwiseAbs().minCoeff(&k);
    e2 = unit(int(u0.size()), k);
    e2 -= e2.dot(e1) * e1;
  }
  return {e1, e2.normalized()};
}

CGState initial_or_default(const Context& c) {
  if (c.cfg.initial.given) return initial_state(c.metric, c.cfg.initial);
  InitialData d;
  d.given = true;
  d.p = Vec::Zero(c.metric.dim());
  d.u0 = unit(c.metric.dim(), 0);
  d.a0 = Vec::Zero(c.metric.dim());
  return initial_state(c.metric, d);
}

ojson metric_json(const RunConfig& cfg, const MetricField& m) {
  ojson j;
  j["kind"] = cfg.metric.kind;
  j["dim"] = cfg.metric.dim;
  j["description"] = m.description();
  return j;
}

// ---------------------------------------------------------------------------

int cmd_trace(const Context& c) {
  const CGState s0 = initial_state(c.metric, c.cfg.initial);
  const Trace tr = integrate_cg(c.metric, s0, c.cfg.trace.t_end, c.cfg.integrator);

  ojson j;
  j["command"] = "trace";
  j["metric"] = metric_json(c.cfg, c.metric);
  j["initial"] = state_json(s0);
  j["t_end"] = tr.t_end();
  j["samples"] = tr.size();
  j["accepted_steps"] = tr.accepted_steps();
  j["rejected_steps"] = tr.rejected_steps();
  j["max_res_unit"] = tr.max_res_unit();
  j["max_res_perp"] = tr.max_res_perp();
  j["max_drift_unit"] = tr.max_drift_unit();
  j["max_drift_perp"] = tr.max_drift_perp();
  j["final"] = state_json(tr.state(tr.size() - 1));

  // With a0 = 0 the conformal geodesic must be the metric geodesic.
  ojson geo;
  const double a_len = norm(c.metric.metric(s0.x), s0.a);
  geo["applicable"] = a_len == 0.0;
  if (a_len == 0.0) {
    const bool closed = c.metric.kind() == MetricKind::Euclidean ||
                        c.metric.kind() == MetricKind::Sphere ||
                        c.metric.kind() == MetricKind::Hyperbolic;
    std::optional<Trace> ref;
    if (!closed) {
      ref = integrate_metric_geodesic(c.metric, s0.x, s0.u, tr.t_end(), c.cfg.integrator);
    }
    double dev = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      const double t = tr.times()[k];
      const Vec x = closed ? metric_exp(c.metric, s0.x, t * s0.u) : ref->position_at(t);
      dev = std::max(dev, (tr.state(k).x - x).norm());
    }
    geo["reference"] = closed ? "closed form" : "integrated metric geodesic";
    geo["max_deviation"] = dev;
    geo["tolerance"] = 1e-6;
    geo["matches_metric_geodesic"] = dev <= 1e-6;
  }
  j["geodesic_check"] = std::move(geo);

  if (c.wants("csv")) c.write("trace.csv", [&](std::ostream& os) { tr.write_csv(os); });
  if (c.wants("json")) c.write_json("trace.json", j);
  if (c.wants("svg")) {
    const auto [e1, e2] = projection_plane(s0.u, s0.a);
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      const Vec x = tr.state(k).x - s0.x;
      pts.emplace_back(x.dot(e1), x.dot(e2));
    }
    c.write("trace.svg", [&](std::ostream& os) { write_polyline_svg(os, {pts}); });
  }
  return 0;
}

struct HeartChoice {
  double r = 0.0;
  ojson scan = nullptr;
};

HeartChoice choose_r(const Context& c, const CGState& s0) {
  HeartChoice h;
  if (c.cfg.heart.r) {
    h.r = *c.cfg.heart.r;
  } else {
    const auto rep = injectivity_scan(c.metric, s0.x, s0.u, c.cfg.heart.injectivity);
    h.r = rep.est_r;
    h.scan = injectivity_json(rep);
  }
  return h;
}

ojson heart_summary(const Context& c, const HeartSample& h, const HeartChoice& ch) {
  ojson j;
  j["metric"] = metric_json(c.cfg, c.metric);
  j["p"] = vec_json(h.p());
  j["u0"] = vec_json(h.u0());
  j["r"] = h.r();
  j["r_source"] = ch.scan.is_null() ? "config" : "injectivity_scan";
  if (!ch.scan.is_null()) j["injectivity"] = ch.scan;
  j["resolution"] = h.resolution();
  j["vertices"] = h.vertex_count();
  j["chord_bound"] = h.chord_bound();
  j["max_chord"] = h.max_chord();
  j["inverted"] = h.inverted();
  return j;
}

int cmd_heart(const Context& c) {
  const CGState s0 = initial_or_default(c);
  const auto ch = choose_r(c, s0);
  const auto h = trace_heart_boundary(c.metric, s0.x, s0.u, ch.r, c.cfg.heart.heart);
  ojson summary = heart_summary(c, h, ch);
  if (c.metric.kind() == MetricKind::Euclidean) {
    const auto dev = cardioid_deviation(h);
    ojson o;
    o["max_deviation"] = dev.max_deviation;
    o["pole_error"] = dev.pole_error;
    summary["cardioid_oracle"] = std::move(o);
  }
  if (c.cfg.heart.exit) {
    const Trace tr = integrate_cg(c.metric, s0, 1.25 * 4 * kPi * h.r() + 1.0, c.cfg.integrator);
    summary["exit"] = exit_json(heart_exit(c.metric, tr, h, c.cfg.integrator));
  }
  if (c.wants("json")) {
    ojson j;
    j["command"] = "heart";
    j["summary"] = std::move(summary);
    j["heart"] = embed(h);
    c.write_json("heart.json", j);
  }
  if (c.wants("svg")) c.write("heart.svg", [&](std::ostream& os) { h.write_svg(os); });
  return 0;
}

int cmd_verify(const Context& c) {
  std::vector<std::string> names = c.cfg.verify.suites;
  if (names.empty()) names = suite_names();
  std::vector<SuiteResult> results;
  bool all = true;
  for (const auto& n : names) {
    results.push_back(run_suite(n, c.cfg.seed));
    all = all && results.back().pass();
    *c.log << (results.back().pass() ? "PASS " : "FAIL ") << n << '\n';
  }
  if (c.wants("json")) {
    c.write("verify.json", [&](std::ostream& os) { write_json(os, results); });
  }
  return all ? 0 : 1;
}

int cmd_expmap(const Context& c) {
  const CGState s0 = initial_or_default(c);
  const auto& m = c.metric;
  const int d = m.dim();
  const Mat g = m.metric(s0.x);
  const Mat frame = frame_from(g, s0.u);
  Rng rng(c.cfg.seed);
  const auto& ex = c.cfg.expmap;

  std::vector<Vec> vectors = ex.vectors;
  for (int i = 0; i < ex.random_vectors; ++i) {
    Vec w = rng.normal_vec(d);
    while (w.norm() < 1e-3) w = rng.normal_vec(d);
    // g-uniform direction with |A| uniform in (0, scale]
    vectors.push_back(frame * w.normalized() * ex.scale * (1.0 - rng.uniform()));
  }

  ojson j;
  j["command"] = "expmap";
  j["metric"] = metric_json(c.cfg, m);
  j["p"] = vec_json(s0.x);
  j["u0"] = vec_json(s0.u);
  ojson imgs = ojson::array();
  for (const auto& A : vectors) {
    const auto rc = ray_coords(g, s0.u, A);
    ojson e;
    e["A"] = vec_json(A);
    e["mag"] = rc.mag;
    e["theta"] = rc.theta;
    e["image"] = vec_json(exp_cg(m, s0.x, s0.u, A, c.cfg.integrator));
    e["dexp_zero"] = vec_json(dexp_zero(g, s0.u, A));
    imgs.push_back(std::move(e));
  }
  j["images"] = std::move(imgs);

  ojson angles = ojson::array();
  for (double th : ex.thetas) {
    const double a = ray_image_angle(m, s0.x, s0.u, frame.col(1), th, 1e-3, c.cfg.integrator);
    ojson e;
    e["theta0"] = th;
    e["measured"] = a;
    e["predicted"] = kPi * std::sin(th);
    e["error"] = std::abs(a - kPi * std::sin(th));
    angles.push_back(std::move(e));
  }
  j["ray_angles"] = std::move(angles);

  if (ex.injectivity) {
    j["injectivity"] =
        injectivity_json(injectivity_scan(m, s0.x, s0.u, c.cfg.heart.injectivity));
  }
  ojson rem = ojson::array();
  for (int i = 0; i < ex.remainder_directions; ++i) {
    const double th = rng.uniform(0.3, 1.2);
    const double az = rng.uniform(0.0, 2 * kPi);
    Vec perp = std::cos(az) * frame.col(1);
    if (d > 2) perp += std::sin(az) * frame.col(2);
    const Vec dir = std::cos(th) * frame.col(0) + std::sin(th) * perp;
    const auto fit = remainder_order(m, s0.x, s0.u, dir);
    ojson e;
    e["direction"] = vec_json(dir);
    e["theta"] = th;
    e["slope"] = fit.slope;
    e["degenerate"] = fit.degenerate;
    rem.push_back(std::move(e));
  }
  j["remainder"] = std::move(rem);
  if (c.wants("json")) c.write_json("expmap.json", j);
  return 0;
}

int cmd_fscan(const Context& c) {
  const auto& f = c.cfg.fscan;
  std::vector<std::pair<double, FValues>> rows;
  for (int i = 0; i < f.points; ++i) {
    const double th = f.theta_max * i / (f.points - 1);
    rows.emplace_back(th, f_functions(th));
  }
  FValues lo{1e300, 1e300, 1e300};
  for (const auto& [th, v] : rows) {
    lo.f1 = std::min(lo.f1, v.f1);
    lo.f2 = std::min(lo.f2, v.f2);
    lo.f3 = std::min(lo.f3, v.f3);
  }
  if (c.wants("csv")) {
    c.write("fscan.csv", [&](std::ostream& os) {
      os << "theta,f1,f2,f3\n";
      char buf[128];
      for (const auto& [th, v] : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", th, v.f1, v.f2, v.f3);
        os << buf;
      }
    });
  }
  if (c.wants("json")) {
    ojson j;
    j["command"] = "fscan";
    j["points"] = f.points;
    j["theta_max"] = f.theta_max;
    j["min_f1"] = lo.f1;
    j["min_f2"] = lo.f2;
    j["min_f3"] = lo.f3;
    j["positive"] = lo.f1 > 0 && lo.f2 > 0 && lo.f3 > 0;
    const auto h = f_functions(kPi / 2);
    j["at_half_pi"] = {{"f1", h.f1}, {"f2", h.f2}, {"f3", h.f3}};
    c.write_json("fscan.json", j);
  }
  return 0;
}

int cmd_size(const Context& c) {
  const CGState s0 = initial_or_default(c);
  const auto ch = choose_r(c, s0);
  const auto h = trace_heart_boundary(c.metric, s0.x, s0.u, ch.r, c.cfg.heart.heart);
  const auto est = heart_size_R(c.metric, h, c.cfg.size.size);
  ojson j;
  j["command"] = "size";
  j["heart"] = heart_summary(c, h, ch);
  j["size"] = embed(est);
  if (c.cfg.size.scan) {
    const auto& sp = *c.cfg.size.scan;
    BoundScanConfig bc;
    bc.lo = sp.lo;
    bc.hi = sp.hi;
    bc.points_per_axis = sp.points_per_axis;
    bc.directions = sp.directions;
    bc.r = sp.r;
    bc.heart = c.cfg.heart.heart;
    bc.size = c.cfg.size.size;
    j["scan"] = embed(compact_bound_scan(c.metric, bc));
  }
  if (c.wants("json")) c.write_json("size.json", j);
  return 0;
}

int cmd_spiral(const Context& c) {
  const auto& sp = c.cfg.spiral;
  const auto& m = c.metric;
  Rng rng(c.cfg.seed);
  std::vector<CGState> starts;
  if (c.cfg.initial.given) {
    starts.push_back(initial_state(m, c.cfg.initial));
  } else {
    for (int i = 0; i < sp.traces; ++i) {
      Vec x = rng.in_ball(m.dim(), sp.start_radius);
      while (!m.in_domain(x)) x = rng.in_ball(m.dim(), sp.start_radius);
      starts.push_back(random_state(rng, m, x, sp.a_min, sp.a_max));
    }
  }
  ojson runs = ojson::array();
  int truncated = 0, unresolved = 0;
  for (const auto& s0 : starts) {
    const auto run = no_spiral_run(m, s0, sp.t_end, sp.radii, sp.p_star, sp.p_star_count,
                                   sp.p_star_radius, rng, c.cfg.integrator, sp.retry);
    truncated += run.truncated;
    unresolved += run.unresolved;
    runs.push_back(no_spiral_json(run));
  }
  ojson j;
  j["command"] = "spiral";
  j["metric"] = metric_json(c.cfg, m);
  j["t_end"] = sp.t_end;
  j["radii"] = sp.radii;
  j["truncated"] = truncated;
  j["unresolved"] = unresolved;
  j["note"] = "verdicts are finite-trace evidence; TRAPPED_AT_HORIZON means the trace "
              "ended inside the ball";
  j["traces"] = std::move(runs);
  if (c.wants("json")) c.write_json("spiral.json", j);
  *c.log << "unresolved trapped verdicts: " << unresolved << '\n';
  return 0;
}

struct Command {
  std::function<int(const Context&)> fn;
  std::vector<std::string> formats;   // supported
  std::vector<std::string> defaults;
};

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> c = {
      {"trace", {cmd_trace, {"csv", "json", "svg"}, {"csv", "json"}}},
      {"heart", {cmd_heart, {"json", "svg"}, {"json", "svg"}}},
      {"verify", {cmd_verify, {"json"}, {"json"}}},
      {"expmap", {cmd_expmap, {"json"}, {"json"}}},
      {"fscan", {cmd_fscan, {"csv", "json"}, {"csv", "json"}}},
      {"size", {cmd_size, {"json"}, {"json"}}},
      {"spiral", {cmd_spiral, {"json"}, {"json"}}},
  };
  return c;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"trace", "heart",  "verify", "expmap",
                                                 "fscan", "size", "spiral"};
  return names;
}

int run(const Options& opt, std::ostream& log, std::ostream& err) {
  Context c;
  c.log = &log;
  const Command* cmd = nullptr;
  try {
    const auto it = commands().find(opt.command);
    if (it == commands().end()) throw ConfigError("command", "unknown command '" + opt.command + "'");
    cmd = &it->second;

    std::ifstream in(opt.config_path, std::ios::binary);
    if (!in) throw ConfigError("--config", "cannot read '" + opt.config_path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    c.cfg = parse_config(buf.str());
    if (opt.seed) c.cfg.seed = *opt.seed;

    for (const auto& f : opt.formats) {
      if (std::find(cmd->formats.begin(), cmd->formats.end(), f) == cmd->formats.end()) {
        throw ConfigError("--format", "'" + f + "' is not produced by " + opt.command);
      }
      c.formats.insert(f);
    }
    if (c.formats.empty()) c.formats.insert(cmd->defaults.begin(), cmd->defaults.end());

    c.metric = make_metric(c.cfg.metric);
    if (opt.command == "trace") initial_state(c.metric, c.cfg.initial);
    if (c.cfg.initial.given) initial_state(c.metric, c.cfg.initial);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    c.out = opt.out_dir;
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec) throw Error(Errc::InvalidArgument, "cannot create " + c.out.string() + ": " + ec.message());
    return cmd->fn(c);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace cgeo::cli
