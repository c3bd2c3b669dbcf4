#pragma once

// Distances, ball entry/exit bookkeeping along traces, no-spiral evidence and
// numerical estimates of the size of a heart.

#include "cgeo/expmap.hpp"

#include <iosfwd>
#include <string_view>
#include <vector>

namespace cgeo {

struct DistanceOptions {
  // Chart distance up to which geodesic shooting is trusted for metrics
  // without a closed form.
  double safe_radius = 0.5;
  IntegratorConfig integrator;
};

// Closed form for euclidean, sphere and hyperbolic kinds. Other metrics are
// handled by Newton shooting on the initial velocity, which throws
// OutOfSafeRadius when |x - y| exceeds safe_radius or shooting fails.
double riemannian_distance(const MetricField& m, const ChartPoint& x,
                           const ChartPoint& y, const DistanceOptions& opt = {});

// Chart radius within which riemannian_distance is valid (infinite for the
// closed forms).
double distance_validity_radius(const MetricField& m,
                                const DistanceOptions& opt = {});

enum class EventKind { Entry, Exit };

struct BallEvent {
  EventKind kind = EventKind::Entry;
  double t = 0.0;
  ChartPoint point;
};

// Crossings of d(trace(t), center) = radius, located to 1e-8 in t. Events
// alternate; the first is an Exit exactly when the trace starts inside.
std::vector<BallEvent> ball_events(const Trace& trace, const ChartPoint& center,
                                   double radius, const MetricField& m,
                                   const DistanceOptions& opt = {});

enum class Verdict { NeverEntered, ExitedAfterLastEntry, TrappedAtHorizon };

// NEVER_ENTERED, EXITED_AFTER_LAST_ENTRY, TRAPPED_AT_HORIZON
std::string_view verdict_name(Verdict v);

struct RadiusVerdict {
  double radius = 0.0;
  Verdict verdict = Verdict::NeverEntered;
  bool starts_inside = false;
  int entries = 0;
  int exits = 0;
  double last_entry_t = 0.0;   // 0 when the trace starts inside and never re-enters
  double remaining_arc = 0.0;  // t_end - last_entry_t for trapped verdicts
  std::vector<BallEvent> events;
};

// Trapped means only "not exited before the trace ends".
struct SpiralReport {
  ChartPoint center;
  double t_end = 0.0;
  std::vector<RadiusVerdict> radii;
};

SpiralReport spiral_diagnostic(const Trace& trace, const ChartPoint& p_star,
                               const std::vector<double>& radii,
                               const MetricField& m,
                               const DistanceOptions& opt = {});

// A trapped verdict is cleared by a longer trace from the same initial data
// if that trace leaves the ball after the recorded last entry.
bool trapped_cleared(const RadiusVerdict& trapped, const Trace& longer,
                     const ChartPoint& p_star, const MetricField& m,
                     const DistanceOptions& opt = {});

void write_json(std::ostream& os, const SpiralReport& rep);

// ---------------------------------------------------------------------------
// Heart sizes

struct SizeConfig {
  int center_directions = 64;   // ball family k(p, u0, r), equator included
  int tangent_directions = 16;  // equator ring, used alone for R1
  int sphere_rings = 24;        // boundary rings per candidate ball
  int sphere_azimuths = 24;     // samples per ring
  int cap_samples = 192;        // curved face of the half ball
  int disk_rings = 8;           // flat face of the half ball
  int disk_spokes = 24;
  double boundary_fraction = 1e-6;  // closure tolerance, times r
  int bisection_steps = 30;
  IntegratorConfig integrator;
};

struct SizeEstimate {
  double R = 0.0;
  double R1 = 0.0;
  double R2 = 0.0;
  double bracket = 0.0;  // width of the final bisection interval
  double search_limit = 0.0;  // estimates equal to this are saturated
  int mesh_resolution = 0;
  std::size_t mesh_vertices = 0;
  double max_chord = 0.0;
  double cusp_radius = 0.0;
  double boundary_tol = 0.0;
  int center_directions = 0;
  int tangent_directions = 0;
  int sphere_samples = 0;
};

// Largest radius of a ball tangent to u0 at p inside the heart closure.
// Throws MeshTooCoarse if the mesh missed its chord bound.
double heart_size_R1(const MetricField& m, const HeartSample& h,
                     const SizeConfig& cfg = {});
// Largest radius of the half ball {exp_p(v) : |v| <= r, g(v, u0) >= 0}.
double heart_size_R2(const MetricField& m, const HeartSample& h,
                     const SizeConfig& cfg = {});
// R over the whole family k(p, u0, r), with R1 and R2 alongside.
SizeEstimate heart_size_R(const MetricField& m, const HeartSample& h,
                          const SizeConfig& cfg = {});

void write_json(std::ostream& os, const SizeEstimate& s);

struct BoundScanConfig {
  Vec lo, hi;                 // chart box
  int points_per_axis = 3;
  int directions = 26;        // 26 uses the cube neighbour directions
  double r = 0.5;             // domain radius of every heart
  HeartConfig heart;
  SizeConfig size;
};

struct BoundScanEntry {
  ChartPoint p;
  TangentVector u0;
  double R = 0.0;
};

struct BoundScanReport {
  double min_R = 0.0;
  ChartPoint argmin_p;
  TangentVector argmin_u0;
  double grid_spacing = 0.0;
  bool positive = false;
  std::vector<BoundScanEntry> entries;
};

// Grid over (p, u0) in the box; throws InvalidArgument for an empty region.
BoundScanReport compact_bound_scan(const MetricField& m,
                                   const BoundScanConfig& cfg);

void write_json(std::ostream& os, const BoundScanReport& rep);

}  // namespace cgeo
