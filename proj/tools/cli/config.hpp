#pragma once

// Run configuration for the command-line tool. A config is one JSON document;
// parse_config validates every field before any computation and reports the
// first offending field by its dotted path.

#include "cgeo/expmap.hpp"
#include "cgeo/spiral.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cgeo::cli {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct MetricSpec {
  std::string kind = "euclidean";
  int dim = 3;
  double radius = 1.0;                  // sphere, hyperbolic
  std::string omega;                    // conformally_flat
  std::vector<std::string> components;  // custom, row-major d*d
};

struct InitialData {
  bool given = false;
  Vec p, u0, a0;
};

struct TraceParams {
  double t_end = 10.0;
};

struct HeartParams {
  std::optional<double> r;  // absent: est_r from the injectivity scan
  HeartConfig heart;
  InjectivityConfig injectivity;
  bool exit = false;  // also locate the exit of the configured trace
};

struct ExpmapParams {
  std::vector<Vec> vectors;
  int random_vectors = 0;
  double scale = 0.5;
  std::vector<double> thetas;
  bool injectivity = false;
  int remainder_directions = 0;
};

struct FscanParams {
  int points = 141;
  double theta_max = 1.4;
};

struct SpiralParams {
  int traces = 1;  // random initial data when initial is absent
  double t_end = 200.0;
  double start_radius = 0.5;
  double a_min = 0.2;
  double a_max = 1.5;
  std::vector<Vec> p_star;  // empty: p_star_count random centres
  int p_star_count = 5;
  double p_star_radius = 0.1;  // offset of random centres from the trace
  std::vector<double> radii{0.4, 0.2, 0.1, 0.05};
  bool retry = true;  // rerun truncated traces with doubled t_end
};

struct ScanParams {
  Vec lo, hi;
  int points_per_axis = 3;
  int directions = 26;
  double r = 0.5;
};

struct SizeParams {
  SizeConfig size;
  std::optional<ScanParams> scan;
};

struct VerifyParams {
  std::vector<std::string> suites;  // empty: all
};

struct RunConfig {
  MetricSpec metric;
  IntegratorConfig integrator;
  InitialData initial;
  TraceParams trace;
  HeartParams heart;
  ExpmapParams expmap;
  FscanParams fscan;
  SpiralParams spiral;
  SizeParams size;
  VerifyParams verify;
  std::uint64_t seed = 0;
};

RunConfig parse_config(std::string_view json_text);

// Builds the metric; expression errors become ConfigError on the field.
MetricField make_metric(const MetricSpec& spec);

// Initial data with u0 normalised and a0 projected perpendicular to it under
// g(p). Throws ConfigError when absent or degenerate.
CGState initial_state(const MetricField& m, const InitialData& init);

}  // namespace cgeo::cli
