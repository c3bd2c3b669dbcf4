#pragma once

// The conformal exponential map exp_{p,u0}(A): follow the conformal geodesic
// from p with tangent u0 and initial acceleration A_perp / |A|^2 for arc
// length 2 pi |A|. Everything here identifies T_{u0}(T_pM) with T_pM.

#include "cgeo/flow.hpp"
#include "cgeo/mesh.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace cgeo {

struct RayCoords {
  double mag = 0.0;    // |A|
  double theta = 0.0;  // angle to u0, sin(theta) = |A_perp| / |A|
  TangentVector ahat;  // unit A_perp, empty when theta = 0
};

RayCoords ray_coords(const Mat& g, const TangentVector& u0,
                     const TangentVector& A);

// Initial data (p, u0, A_perp/|A|^2) of the curve behind exp(A).
CGState exp_initial_state(const Mat& g, const ChartPoint& p,
                          const TangentVector& u0, const TangentVector& A);

ChartPoint exp_cg(const MetricField& m, const ChartPoint& p,
                  const TangentVector& u0, const TangentVector& A,
                  const IntegratorConfig& cfg = {});

// Closed-form derivative of exp at 0 in direction A, lengths measured by g
// (identity if omitted). Throws ZeroVector for A = 0.
TangentVector dexp_zero(const Mat& g, const TangentVector& u0,
                        const TangentVector& A);
TangentVector dexp_zero(const TangentVector& u0, const TangentVector& A);

// Angle at p between u0 and the image of the ray s -> s (cos(theta0) u0 +
// sin(theta0) ahat0), from a Richardson-extrapolated chord at scale h.
// Throws DegenerateDirection for theta0 >= pi/2.
double ray_image_angle(const MetricField& m, const ChartPoint& p,
                       const TangentVector& u0, const TangentVector& ahat0,
                       double theta0, double h = 1e-3,
                       const IntegratorConfig& cfg = {});

struct FValues {
  double f1 = 0.0;
  double f2 = 0.0;
  double f3 = 0.0;
};

// f1 = sin(pi s)/s, f2 = sqrt(sin^2(pi s)/s^4 + pi^2/s^2 - pi sin(2 pi s)/s^3),
// f3 = f1^2 with s = sin(theta); theta = 0 gives the limits (pi, pi^2, pi^2).
FValues f_functions(double theta);

// Radius of the Euclidean heart cross-section at polar angle phi from u0.
double cardioid_boundary(double R, double phi);

// ---------------------------------------------------------------------------
// Injectivity scan

struct InjectivityConfig {
  double r_max = 1.0;
  int levels = 8;
  int resolution = 8;          // grid points per axis of the bounding cube
  double sep_fraction = 0.1;   // domain separation = sep_fraction * r
  double image_tol = 1e-4;     // chart distance counted as coincidence
  int min_samples = 20;
  double max_theta = 1.47;
  IntegratorConfig integrator;
};

struct Collision {
  double r = 0.0;
  TangentVector A1, A2;
  ChartPoint image1, image2;
  double domain_distance = 0.0;
  double image_distance = 0.0;
};

struct InjectivityReport {
  double est_r = 0.0;
  double last_clean_r = 0.0;
  int levels_scanned = 0;
  int samples_per_level = 0;  // at the largest level
  bool chart_exit = false;
  std::optional<Collision> witness;
};

// est_r = 1/2 min{1, largest scanned r without collisions}. Throws
// ResolutionTooCoarse if a level holds fewer than min_samples points.
InjectivityReport injectivity_scan(const MetricField& m, const ChartPoint& p,
                                   const TangentVector& u0,
                                   const InjectivityConfig& cfg = {});

// ---------------------------------------------------------------------------
// Heart boundary

struct HeartConfig {
  int resolution = 16;       // rings in beta; 2 * resolution vertices per ring
  // Edge length bound, measured with g at the edge midpoint. Edges at g(p)
  // distance D from p must satisfy length <= bound * clamp(D / (2 pi r),
  // near_floor, 1), which concentrates vertices around the cusp.
  double chord_bound = 0.0;  // 0 means 12 pi r / resolution
  double near_floor = 1.0 / 32;
  int max_vertices = 40000;
  double cusp_fraction = 0.1;  // closure test: ball of this many r around p
  IntegratorConfig integrator;
};

// Images of a polar mesh of the sphere |A - r u0| = r. Vertex 0 is the cusp
// A = 0, the last vertex the far pole A = 2 r u0. Only d = 3.
class HeartSample {
 public:
  struct Ring {
    double beta = 0.0;
    int first = 0;
    int count = 0;
  };

  const ChartPoint& p() const { return p_; }
  const TangentVector& u0() const { return u0_; }
  double r() const { return r_; }
  // g-orthonormal frame at p, first column u0.
  const Mat& frame() const { return frame_; }

  std::size_t vertex_count() const { return domain_.size(); }
  const TangentVector& domain(std::size_t i) const { return domain_[i]; }
  const ChartPoint& image(std::size_t i) const { return image_[i]; }
  double beta(std::size_t i) const { return beta_[i]; }
  double psi(std::size_t i) const { return psi_[i]; }
  const std::vector<Ring>& rings() const { return rings_; }
  int cusp_vertex() const { return 0; }
  int pole_vertex() const { return static_cast<int>(domain_.size()) - 1; }

  const TriangleMesh& mesh() const { return mesh_; }
  double chord_bound() const { return chord_bound_; }
  double max_chord() const { return max_chord_; }
  int resolution() const { return resolution_; }
  double cusp_radius() const { return cusp_radius_; }

  // Point on the domain sphere with polar angle beta from the cusp and
  // azimuth psi around u0.
  TangentVector domain_point(double beta, double psi) const;

  // Strict interior by ray-cast parity, flipped when the heart contains the
  // chart's point at infinity (see inverted()).
  bool inside(const ChartPoint& x) const;
  bool inverted() const { return inverted_; }
  // Membership in the closure: inside, within boundary_tol of the mesh, or
  // within cusp_radius (g at p) of p.
  bool in_closure(const ChartPoint& x, double boundary_tol) const;

  void write_json(std::ostream& os) const;
  // Cross-section in the plane spanned by u0 and the first frame vector
  // perpendicular to it.
  void write_svg(std::ostream& os) const;

 private:
  friend HeartSample trace_heart_boundary(const MetricField&,
                                          const ChartPoint&,
                                          const TangentVector&, double,
                                          const HeartConfig&);

  ChartPoint p_;
  TangentVector u0_;
  double r_ = 0.0;
  Mat frame_;
  Mat gp_;
  bool inverted_ = false;
  std::vector<TangentVector> domain_;
  std::vector<ChartPoint> image_;
  std::vector<double> beta_, psi_;
  std::vector<Ring> rings_;
  std::vector<std::array<int, 3>> triangles_;
  TriangleMesh mesh_;
  double chord_bound_ = 0.0;
  double max_chord_ = 0.0;
  int resolution_ = 0;
  double cusp_radius_ = 0.0;
};

// Throws Unsupported for d != 3, ResolutionTooCoarse for resolution < 4.
HeartSample trace_heart_boundary(const MetricField& m, const ChartPoint& p,
                                 const TangentVector& u0, double r,
                                 const HeartConfig& cfg = {});

// Images along the meridian of the domain sphere at azimuth psi, for
// beta in [0, pi].
std::vector<ChartPoint> heart_meridian(const MetricField& m,
                                       const HeartSample& h, double psi,
                                       int samples,
                                       const IntegratorConfig& cfg = {});

struct HeartExit {
  double t_exit = 0.0;
  ChartPoint point;
  TangentVector domain;  // A on the domain sphere with exp(A) = point
  bool refined = false;  // Newton on (t, A) converged
  double residual = 0.0;
  bool within_4pi_r = false;
  bool within_2pi_r = false;
};

// First crossing of the heart boundary by a trace launched at (p, u0).
// Throws NoExitWithinTrace if the trace ends inside.
HeartExit heart_exit(const MetricField& m, const Trace& trace,
                     const HeartSample& h, const IntegratorConfig& cfg = {});

struct RemainderFit {
  double slope = 0.0;
  bool degenerate = false;  // remainder at rounding level, slope meaningless
  std::vector<double> lambdas;
  std::vector<double> remainders;
};

// Fits log |exp_cg(l A) - exp_p(dexp_zero(l A))| against log l over
// l in [1e-3, 1e-1].
RemainderFit remainder_order(const MetricField& m, const ChartPoint& p,
                             const TangentVector& u0,
                             const TangentVector& direction, int samples = 9);

}  // namespace cgeo
