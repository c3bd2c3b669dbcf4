#pragma once

// Building blocks shared by the commands and the verify suites.

#include "cli/rng.hpp"
#include "cgeo/expmap.hpp"
#include "cgeo/spiral.hpp"

#include <json.hpp>

#include <vector>

namespace cgeo::cli {

using ojson = nlohmann::ordered_json;

ojson vec_json(const Vec& v);
ojson state_json(const CGState& s);
ojson injectivity_json(const InjectivityReport& rep);
ojson exit_json(const HeartExit& e);
// Round-trips a library writer through ordered JSON so it can be embedded.
template <class T>
ojson embed(const T& obj);

// Unit u and g-perpendicular a with |a| uniform in [a_lo, a_hi].
CGState random_state(Rng& rng, const MetricField& m, const ChartPoint& x,
                     double a_lo, double a_hi);

// g-orthonormal (u0, ahat) from two chart seeds.
std::pair<TangentVector, TangentVector> unit_pair(const Mat& g, const Vec& u,
                                                  const Vec& a);

// Max over mesh vertices (cusp excluded) of the radial distance to the
// Euclidean cardioid solid, and the far-pole error against p + 4 pi r u0.
struct CardioidDeviation {
  double max_deviation = 0.0;
  double pole_error = 0.0;
};
CardioidDeviation cardioid_deviation(const HeartSample& h);

struct CentreVerdicts {
  ChartPoint center;
  SpiralReport report;
  std::vector<bool> cleared;  // per radius; true unless still trapped
};

struct NoSpiralRun {
  CGState start;
  double t_end = 0.0;
  std::vector<CentreVerdicts> centres;
  int truncated = 0;   // TRAPPED_AT_HORIZON verdicts on the first trace
  int unresolved = 0;  // still trapped after doubling t_end
  double max_res_unit = 0.0;
  double max_res_perp = 0.0;
};

// Centres given explicitly, or `count` random ones: trace positions at
// random arc length offset by up to `offset`.
NoSpiralRun no_spiral_run(const MetricField& m, const CGState& s0, double t_end,
                          const std::vector<double>& radii,
                          std::vector<ChartPoint> centres, int count,
                          double offset, Rng& rng,
                          const IntegratorConfig& cfg, bool retry);

ojson no_spiral_json(const NoSpiralRun& run);

}  // namespace cgeo::cli
