#include "cli/config.hpp"

#include "cli/verify.hpp"
#include "cgeo/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cgeo::cli {

namespace {

using json = nlohmann::json;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Typed, bounds-checked access to one JSON object, remembering its path for
// error messages.
class Section {
 public:
  Section(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) throw ConfigError(where(), "expected an object");
  }

  bool present() const { return j_ != nullptr; }
  bool has(const char* key) const { return j_ && j_->contains(key); }

  std::string where(const char* key = nullptr) const {
    if (!key) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  Section child(const char* key) const {
    return Section(has(key) ? &(*j_)[key] : nullptr, where(key));
  }

  void allow(std::initializer_list<const char*> keys) const {
    if (!j_) return;
    for (const auto& [k, v] : j_->items()) {
      if (std::none_of(keys.begin(), keys.end(),
                       [&](const char* a) { return k == a; })) {
        throw ConfigError(where(k.c_str()), "unknown field");
      }
    }
  }

  double number(const char* key, double def, double lo, double hi,
                bool lo_open = false) const {
    if (!has(key)) return def;
    return number_value((*j_)[key], where(key), lo, hi, lo_open);
  }

  int integer(const char* key, int def, long lo, long hi) const {
    if (!has(key)) return def;
    const json& v = (*j_)[key];
    if (!v.is_number_integer()) throw ConfigError(where(key), "expected an integer");
    const long long x = v.get<long long>();
    if (x < lo || x > hi) {
      throw ConfigError(where(key), "must be in [" + std::to_string(lo) + ", " +
                                        std::to_string(hi) + "]");
    }
    return static_cast<int>(x);
  }

  bool boolean(const char* key, bool def) const {
    if (!has(key)) return def;
    const json& v = (*j_)[key];
    if (!v.is_boolean()) throw ConfigError(where(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const char* key, const std::string& def) const {
    if (!has(key)) return def;
    const json& v = (*j_)[key];
    if (!v.is_string()) throw ConfigError(where(key), "expected a string");
    return v.get<std::string>();
  }

  Vec vec(const char* key, int d) const {
    return vec_value((*j_)[key], where(key), d);
  }

  std::vector<Vec> vecs(const char* key, int d) const {
    std::vector<Vec> out;
    if (!has(key)) return out;
    const json& v = (*j_)[key];
    if (!v.is_array()) throw ConfigError(where(key), "expected an array of vectors");
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(vec_value(v[i], where(key) + "[" + std::to_string(i) + "]", d));
    }
    return out;
  }

  std::vector<double> numbers(const char* key, const std::vector<double>& def,
                              double lo, double hi, bool lo_open) const {
    if (!has(key)) return def;
    const json& v = (*j_)[key];
    if (!v.is_array() || v.empty()) {
      throw ConfigError(where(key), "expected a non-empty array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(number_value(v[i], where(key) + "[" + std::to_string(i) + "]",
                                 lo, hi, lo_open));
    }
    return out;
  }

  std::vector<std::string> strings(const char* key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const json& v = (*j_)[key];
    if (!v.is_array()) throw ConfigError(where(key), "expected an array of strings");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) {
        throw ConfigError(where(key) + "[" + std::to_string(i) + "]",
                          "expected a string");
      }
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  const json* raw(const char* key) const { return has(key) ? &(*j_)[key] : nullptr; }

 private:
  static double number_value(const json& v, const std::string& path, double lo,
                             double hi, bool lo_open) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double x = v.get<double>();
    const bool low_ok = lo_open ? x > lo : x >= lo;
    if (!std::isfinite(x) || !low_ok || x > hi) {
      throw ConfigError(path, "must be in " + std::string(lo_open ? "(" : "[") +
                                  fmt(lo) + ", " + fmt(hi) + "]");
    }
    return x;
  }

  static Vec vec_value(const json& v, const std::string& path, int d) {
    if (!v.is_array() || static_cast<int>(v.size()) != d) {
      throw ConfigError(path, "expected an array of " + std::to_string(d) + " numbers");
    }
    Vec out(d);
    for (int i = 0; i < d; ++i) {
      if (!v[i].is_number()) throw ConfigError(path, "expected numbers");
      out(i) = v[i].get<double>();
      if (!std::isfinite(out(i))) throw ConfigError(path, "non-finite component");
    }
    return out;
  }

  const json* j_;
  std::string path_;
};

void read_integrator(const Section& s, IntegratorConfig& c) {
  s.allow({"rel_tol", "abs_tol", "max_step", "initial_step", "projection", "max_steps"});
  c.rel_tol = s.number("rel_tol", c.rel_tol, 0.0, 1.0, true);
  c.abs_tol = s.number("abs_tol", c.abs_tol, 0.0, 1.0, true);
  c.max_step = s.number("max_step", c.max_step, 0.0, 100.0, true);
  c.initial_step = s.number("initial_step", c.initial_step, 0.0, c.max_step, true);
  c.projection = s.boolean("projection", c.projection);
  c.max_steps = s.integer("max_steps", static_cast<int>(c.max_steps), 1, 1'000'000'000);
}

void read_metric(const Section& s, MetricSpec& m) {
  if (!s.present()) return;  // euclidean, d = 3
  s.allow({"kind", "dim", "radius", "omega", "components"});
  m.kind = s.string("kind", "");
  m.dim = s.integer("dim", 3, 3, kMaxDim);
  if (m.kind == "euclidean") {
    s.allow({"kind", "dim"});
  } else if (m.kind == "sphere" || m.kind == "hyperbolic") {
    s.allow({"kind", "dim", "radius"});
    m.radius = s.number("radius", 1.0, 0.0, 1e6, true);
  } else if (m.kind == "conformally_flat") {
    s.allow({"kind", "dim", "omega"});
    if (!s.has("omega")) throw ConfigError(s.where("omega"), "missing");
    m.omega = s.string("omega", "");
  } else if (m.kind == "custom") {
    s.allow({"kind", "dim", "components"});
    m.components = s.strings("components");
    if (static_cast<int>(m.components.size()) != m.dim * m.dim) {
      throw ConfigError(s.where("components"),
                        "expected " + std::to_string(m.dim * m.dim) + " expressions");
    }
  } else {
    throw ConfigError(s.where("kind"),
                      "expected one of euclidean, sphere, hyperbolic, "
                      "conformally_flat, custom");
  }
}

void read_heart(const Section& s, HeartParams& h) {
  s.allow({"r", "resolution", "chord_bound", "near_floor", "max_vertices",
           "cusp_fraction", "exit", "injectivity"});
  if (s.has("r")) h.r = s.number("r", 0.5, 0.0, 10.0, true);
  h.heart.resolution = s.integer("resolution", h.heart.resolution, 1, 512);
  h.heart.chord_bound = s.number("chord_bound", h.heart.chord_bound, 0.0, kInf);
  h.heart.near_floor = s.number("near_floor", h.heart.near_floor, 0.0, 1.0, true);
  h.heart.max_vertices = s.integer("max_vertices", h.heart.max_vertices, 3, 10'000'000);
  h.heart.cusp_fraction = s.number("cusp_fraction", h.heart.cusp_fraction, 0.0, 1.0, true);
  h.exit = s.boolean("exit", h.exit);

  const Section inj = s.child("injectivity");
  inj.allow({"r_max", "levels", "resolution", "sep_fraction", "image_tol",
             "min_samples", "max_theta"});
  auto& c = h.injectivity;
  c.r_max = inj.number("r_max", c.r_max, 0.0, 10.0, true);
  c.levels = inj.integer("levels", c.levels, 1, 100);
  c.resolution = inj.integer("resolution", c.resolution, 1, 256);
  c.sep_fraction = inj.number("sep_fraction", c.sep_fraction, 0.0, 1.0, true);
  c.image_tol = inj.number("image_tol", c.image_tol, 0.0, 1.0, true);
  c.min_samples = inj.integer("min_samples", c.min_samples, 1, 10'000'000);
  c.max_theta = inj.number("max_theta", c.max_theta, 0.0, std::numbers::pi / 2, true);
  if (c.max_theta >= std::numbers::pi / 2) {
    throw ConfigError(inj.where("max_theta"), "must be below pi/2");
  }
}

void read_spiral(const Section& s, int d, SpiralParams& sp) {
  s.allow({"traces", "t_end", "start_radius", "a_min", "a_max", "p_star",
           "p_star_count", "p_star_radius", "radii", "retry"});
  sp.traces = s.integer("traces", sp.traces, 1, 10000);
  sp.t_end = s.number("t_end", sp.t_end, 0.0, 1e6, true);
  sp.start_radius = s.number("start_radius", sp.start_radius, 0.0, 1e3);
  sp.a_min = s.number("a_min", sp.a_min, 0.0, 1e3);
  sp.a_max = s.number("a_max", sp.a_max, sp.a_min, 1e3);
  sp.p_star = s.vecs("p_star", d);
  sp.p_star_count = s.integer("p_star_count", sp.p_star_count, 1, 1000);
  sp.p_star_radius = s.number("p_star_radius", sp.p_star_radius, 0.0, 1e3);
  sp.radii = s.numbers("radii", sp.radii, 0.0, 1e3, true);
  sp.retry = s.boolean("retry", sp.retry);
}

void read_size(const Section& s, int d, SizeParams& sz) {
  s.allow({"center_directions", "tangent_directions", "sphere_rings",
           "sphere_azimuths", "cap_samples", "disk_rings", "disk_spokes",
           "boundary_fraction", "bisection_steps", "scan"});
  auto& c = sz.size;
  c.center_directions = s.integer("center_directions", c.center_directions, 1, 100000);
  c.tangent_directions = s.integer("tangent_directions", c.tangent_directions, 1, 100000);
  c.sphere_rings = s.integer("sphere_rings", c.sphere_rings, 1, 10000);
  c.sphere_azimuths = s.integer("sphere_azimuths", c.sphere_azimuths, 3, 10000);
  c.cap_samples = s.integer("cap_samples", c.cap_samples, 1, 1000000);
  c.disk_rings = s.integer("disk_rings", c.disk_rings, 1, 10000);
  c.disk_spokes = s.integer("disk_spokes", c.disk_spokes, 3, 10000);
  c.boundary_fraction = s.number("boundary_fraction", c.boundary_fraction, 0.0, 1.0);
  c.bisection_steps = s.integer("bisection_steps", c.bisection_steps, 1, 200);

  const Section sc = s.child("scan");
  if (!sc.present()) return;
  sc.allow({"lo", "hi", "points_per_axis", "directions", "r"});
  ScanParams p;
  if (!sc.has("lo")) throw ConfigError(sc.where("lo"), "missing");
  if (!sc.has("hi")) throw ConfigError(sc.where("hi"), "missing");
  p.lo = sc.vec("lo", d);
  p.hi = sc.vec("hi", d);
  p.points_per_axis = sc.integer("points_per_axis", p.points_per_axis, 1, 50);
  p.directions = sc.integer("directions", p.directions, 1, 10000);
  p.r = sc.number("r", p.r, 0.0, 10.0, true);
  sz.scan = p;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  const Section s(&root, "");
  s.allow({"metric", "integrator", "initial", "trace", "heart", "expmap",
           "fscan", "spiral", "size", "verify", "seed"});

  RunConfig c;
  read_metric(s.child("metric"), c.metric);
  const int d = c.metric.dim;
  read_integrator(s.child("integrator"), c.integrator);

  if (s.has("seed")) {
    const json& v = root["seed"];
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError("seed", "expected a non-negative 64-bit integer");
    }
    c.seed = v.get<std::uint64_t>();
  }

  const Section init = s.child("initial");
  if (init.present()) {
    init.allow({"p", "u0", "a0"});
    c.initial.given = true;
    c.initial.p = init.has("p") ? init.vec("p", d) : Vec(Vec::Zero(d));
    c.initial.u0 = init.has("u0") ? init.vec("u0", d) : unit(d, 0);
    c.initial.a0 = init.has("a0") ? init.vec("a0", d) : Vec(Vec::Zero(d));
    if (c.initial.u0.norm() == 0.0) throw ConfigError("initial.u0", "must be nonzero");
  }

  const Section tr = s.child("trace");
  tr.allow({"t_end"});
  c.trace.t_end = tr.number("t_end", c.trace.t_end, 0.0, 1e6, true);

  read_heart(s.child("heart"), c.heart);
  c.heart.heart.integrator = c.integrator;
  c.heart.injectivity.integrator = c.integrator;

  const Section ex = s.child("expmap");
  ex.allow({"vectors", "random_vectors", "scale", "thetas", "injectivity",
            "remainder_directions"});
  c.expmap.vectors = ex.vecs("vectors", d);
  for (std::size_t i = 0; i < c.expmap.vectors.size(); ++i) {
    if (c.expmap.vectors[i].norm() == 0.0) {
      throw ConfigError("expmap.vectors[" + std::to_string(i) + "]", "must be nonzero");
    }
  }
  c.expmap.random_vectors = ex.integer("random_vectors", 0, 0, 100000);
  c.expmap.scale = ex.number("scale", c.expmap.scale, 0.0, 10.0, true);
  c.expmap.thetas = ex.numbers("thetas", {}, 0.0, 1.5, false);
  c.expmap.injectivity = ex.boolean("injectivity", false);
  c.expmap.remainder_directions = ex.integer("remainder_directions", 0, 0, 100);

  const Section fs = s.child("fscan");
  fs.allow({"points", "theta_max"});
  c.fscan.points = fs.integer("points", c.fscan.points, 2, 1'000'000);
  c.fscan.theta_max = fs.number("theta_max", c.fscan.theta_max, 0.0, 1.57, true);

  read_spiral(s.child("spiral"), d, c.spiral);
  read_size(s.child("size"), d, c.size);
  c.size.size.integrator = c.integrator;

  const Section ve = s.child("verify");
  ve.allow({"suites"});
  c.verify.suites = ve.strings("suites");
  const auto& known = suite_names();
  for (std::size_t i = 0; i < c.verify.suites.size(); ++i) {
    if (std::find(known.begin(), known.end(), c.verify.suites[i]) == known.end()) {
      throw ConfigError("verify.suites[" + std::to_string(i) + "]",
                        "unknown suite '" + c.verify.suites[i] + "'");
    }
  }
  return c;
}

MetricField make_metric(const MetricSpec& spec) {
  std::string field = "metric";
  try {
    if (spec.kind == "euclidean") return MetricField::euclidean(spec.dim);
    if (spec.kind == "sphere") return MetricField::sphere(spec.dim, spec.radius);
    if (spec.kind == "hyperbolic") return MetricField::hyperbolic(spec.dim, spec.radius);
    if (spec.kind == "conformally_flat") {
      field = "metric.omega";
      return MetricField::conformally_flat(Expr::parse(spec.omega, spec.dim));
    }
    if (spec.kind == "custom") {
      std::vector<Expr> comps;
      for (std::size_t i = 0; i < spec.components.size(); ++i) {
        field = "metric.components[" + std::to_string(i) + "]";
        comps.push_back(Expr::parse(spec.components[i], spec.dim));
      }
      field = "metric.components";
      return MetricField::custom(comps);
    }
  } catch (const Error& e) {
    throw ConfigError(field, e.what());
  }
  throw ConfigError("metric.kind", "unknown kind '" + spec.kind + "'");
}

CGState initial_state(const MetricField& m, const InitialData& init) {
  if (!init.given) throw ConfigError("initial", "missing");
  if (!m.in_domain(init.p)) throw ConfigError("initial.p", "outside the chart");
  Mat g;
  try {
    g = m.metric(init.p);
  } catch (const Error& e) {
    throw ConfigError("initial.p", e.what());
  }
  CGState s{init.p, init.u0 / norm(g, init.u0), init.a0};
  s.a -= inner(g, s.u, s.a) * s.u;
  return s;
}

}  // namespace cgeo::cli
