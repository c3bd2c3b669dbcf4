#include "cgeo/metric.hpp"

#include "cgeo/error.hpp"

#include <cmath>
#include <sstream>

namespace cgeo {

std::string_view kind_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::Euclidean: return "euclidean";
    case MetricKind::Sphere: return "sphere";
    case MetricKind::Hyperbolic: return "hyperbolic";
    case MetricKind::ConformallyFlat: return "conformally_flat";
    case MetricKind::Custom: return "custom";
    case MetricKind::Rescaled: return "rescaled";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// ConformalFactor

ConformalFactor ConformalFactor::constant(double c, int d) {
  std::ostringstream os;
  os << c;
  return ConformalFactor(
      d, [c, d](const ChartPoint&) { return Jet2::constant(c, d); }, os.str());
}

ConformalFactor ConformalFactor::expression(const Expr& omega) {
  return ConformalFactor(
      omega.dim(), [omega](const ChartPoint& x) { return omega.eval_jet2(x); },
      omega.unparse());
}

ConformalFactor ConformalFactor::from_function(int d, Fn fn,
                                               std::string description) {
  return ConformalFactor(d, std::move(fn), std::move(description));
}

Jet2 ConformalFactor::eval(const ChartPoint& x) const {
  Jet2 j = fn_(x);
  if (!(j.value > 0.0)) {
    throw Error(Errc::NonPositiveFactor,
                "conformal factor " + description_ + " evaluates to " +
                    std::to_string(j.value));
  }
  return j;
}

Vec ConformalFactor::upsilon(const ChartPoint& x) const {
  Jet2 j = eval(x);
  return j.grad / j.value;
}

// ---------------------------------------------------------------------------
// Metric sources

class MetricField::Source {
 public:
  virtual ~Source() = default;

  virtual MetricKind kind() const = 0;
  virtual std::string description() const = 0;
  virtual double radius() const { return 0.0; }
  virtual bool in_domain(const ChartPoint& x) const { return x.allFinite(); }
  virtual Mat value(const ChartPoint& x) const = 0;
  virtual MetricJet jet(const ChartPoint& x) const = 0;

  int dim() const { return d_; }

 protected:
  explicit Source(int d) : d_(d) {}
  int d_;
};

namespace {

void zero_derivatives(MetricJet& j, int d) {
  for (int c = 0; c < d; ++c) {
    j.dg[c] = Mat::Zero(d, d);
    for (int e = 0; e < d; ++e) j.ddg[c][e] = Mat::Zero(d, d);
  }
}

class FlatSource final : public MetricField::Source {
 public:
  explicit FlatSource(int d) : Source(d) {}
  MetricKind kind() const override { return MetricKind::Euclidean; }
  std::string description() const override { return "euclidean"; }
  Mat value(const ChartPoint&) const override { return Mat::Identity(d_, d_); }
  MetricJet jet(const ChartPoint&) const override {
    MetricJet j;
    j.g = Mat::Identity(d_, d_);
    zero_derivatives(j, d_);
    return j;
  }
};

// g = Omega^2 delta with Omega supplied as a jet.
class ConformallyFlatSource : public MetricField::Source {
 public:
  using Source::Source;

  Mat value(const ChartPoint& x) const override {
    const double w = omega(x).value;
    return Mat::Identity(d_, d_) * (w * w);
  }

  MetricJet jet(const ChartPoint& x) const override {
    const Jet2 om = omega(x);
    const Jet2 w = om * om;
    MetricJet j;
    j.g = Mat::Identity(d_, d_) * w.value;
    for (int c = 0; c < d_; ++c) {
      j.dg[c] = Mat::Identity(d_, d_) * w.grad(c);
      for (int e = 0; e < d_; ++e) {
        j.ddg[c][e] = Mat::Identity(d_, d_) * w.hess(c, e);
      }
    }
    return j;
  }

 protected:
  virtual Jet2 omega(const ChartPoint& x) const = 0;
};

Jet2 squared_radius(const ChartPoint& x) {
  const int d = static_cast<int>(x.size());
  Jet2 s;
  s.value = x.squaredNorm();
  s.grad = 2.0 * x;
  s.hess = 2.0 * Mat::Identity(d, d);
  return s;
}

// Omega = 2 r^2 / (r^2 + sign |x|^2)
Jet2 space_form_factor(const ChartPoint& x, double r, double sign) {
  Jet2 den = (r * r) + sign * squared_radius(x);
  const double inv = 1.0 / den.value;
  return (2.0 * r * r) * compose(den, inv, -inv * inv, 2.0 * inv * inv * inv);
}

class SphereSource final : public ConformallyFlatSource {
 public:
  SphereSource(int d, double r) : ConformallyFlatSource(d), r_(r) {}
  MetricKind kind() const override { return MetricKind::Sphere; }
  double radius() const override { return r_; }
  std::string description() const override {
    std::ostringstream os;
    os << "sphere(radius=" << r_ << ")";
    return os.str();
  }

 protected:
  Jet2 omega(const ChartPoint& x) const override {
    return space_form_factor(x, r_, 1.0);
  }

 private:
  double r_;
};

class HyperbolicSource final : public ConformallyFlatSource {
 public:
  HyperbolicSource(int d, double r) : ConformallyFlatSource(d), r_(r) {}
  MetricKind kind() const override { return MetricKind::Hyperbolic; }
  double radius() const override { return r_; }
  std::string description() const override {
    std::ostringstream os;
    os << "hyperbolic(radius=" << r_ << ")";
    return os.str();
  }
  bool in_domain(const ChartPoint& x) const override {
    return x.allFinite() && x.squaredNorm() < r_ * r_;
  }

 protected:
  Jet2 omega(const ChartPoint& x) const override {
    return space_form_factor(x, r_, -1.0);
  }

 private:
  double r_;
};

class ExprFactorSource final : public ConformallyFlatSource {
 public:
  explicit ExprFactorSource(const Expr& e)
      : ConformallyFlatSource(e.dim()), factor_(ConformalFactor::expression(e)) {}
  MetricKind kind() const override { return MetricKind::ConformallyFlat; }
  std::string description() const override {
    return "conformally_flat(" + factor_.description() + ")";
  }
  Mat value(const ChartPoint& x) const override {
    // value-only path still needs the sign check
    return ConformallyFlatSource::value(x);
  }

 protected:
  Jet2 omega(const ChartPoint& x) const override { return factor_.eval(x); }

 private:
  ConformalFactor factor_;
};

class CustomSource final : public MetricField::Source {
 public:
  explicit CustomSource(std::vector<Expr> comps, int d)
      : Source(d), comps_(std::move(comps)) {}
  MetricKind kind() const override { return MetricKind::Custom; }
  std::string description() const override {
    std::string s = "custom(";
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      if (i) s += ", ";
      s += comps_[i].unparse();
    }
    return s + ")";
  }
  Mat value(const ChartPoint& x) const override {
    Mat g(d_, d_);
    for (int a = 0; a < d_; ++a) {
      for (int b = a; b < d_; ++b) {
        g(a, b) = g(b, a) = comps_[a * d_ + b].eval(x);
      }
    }
    return g;
  }
  MetricJet jet(const ChartPoint& x) const override {
    MetricJet j;
    j.g.resize(d_, d_);
    for (int c = 0; c < d_; ++c) {
      j.dg[c].resize(d_, d_);
      for (int e = 0; e < d_; ++e) j.ddg[c][e].resize(d_, d_);
    }
    for (int a = 0; a < d_; ++a) {
      for (int b = a; b < d_; ++b) {
        const Jet2 v = comps_[a * d_ + b].eval_jet2(x);
        j.g(a, b) = j.g(b, a) = v.value;
        for (int c = 0; c < d_; ++c) {
          j.dg[c](a, b) = j.dg[c](b, a) = v.grad(c);
          for (int e = 0; e < d_; ++e) {
            j.ddg[c][e](a, b) = j.ddg[c][e](b, a) = v.hess(c, e);
          }
        }
      }
    }
    return j;
  }

 private:
  std::vector<Expr> comps_;
};

class RescaledSource final : public MetricField::Source {
 public:
  RescaledSource(std::shared_ptr<const Source> base, ConformalFactor omega)
      : Source(base->dim()), base_(std::move(base)), omega_(std::move(omega)) {}
  MetricKind kind() const override { return MetricKind::Rescaled; }
  std::string description() const override {
    return "(" + omega_.description() + ")^2 * " + base_->description();
  }
  bool in_domain(const ChartPoint& x) const override {
    return base_->in_domain(x);
  }
  Mat value(const ChartPoint& x) const override {
    const double w = omega_.eval(x).value;
    return base_->value(x) * (w * w);
  }
  MetricJet jet(const ChartPoint& x) const override {
    const Jet2 om = omega_.eval(x);
    const Jet2 w = om * om;
    const MetricJet b = base_->jet(x);
    MetricJet j;
    j.g = w.value * b.g;
    for (int c = 0; c < d_; ++c) {
      j.dg[c] = w.grad(c) * b.g + w.value * b.dg[c];
      for (int e = 0; e < d_; ++e) {
        j.ddg[c][e] = w.hess(c, e) * b.g + w.grad(c) * b.dg[e] +
                      w.grad(e) * b.dg[c] + w.value * b.ddg[c][e];
      }
    }
    return j;
  }

 private:
  std::shared_ptr<const Source> base_;
  ConformalFactor omega_;
};

void check_dim(int d) {
  if (d < 3) {
    throw Error(Errc::InvalidArgument,
                "dimension must be at least 3 (the Schouten tensor divides by "
                "d - 2), got " +
                    std::to_string(d));
  }
  if (d > kMaxDim) {
    throw Error(Errc::InvalidArgument,
                "dimension " + std::to_string(d) + " exceeds supported maximum " +
                    std::to_string(kMaxDim));
  }
}

void check_radius(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw Error(Errc::InvalidArgument, "radius must be positive and finite");
  }
}

void check_point(const MetricField::Source& s, const ChartPoint& x) {
  if (x.size() != s.dim()) {
    throw Error(Errc::InvalidArgument,
                "chart point has " + std::to_string(x.size()) +
                    " coordinates, metric dimension is " +
                    std::to_string(s.dim()));
  }
  if (!s.in_domain(x)) {
    std::ostringstream os;
    os << "point (" << x.transpose() << ") outside the chart of "
       << s.description();
    throw Error(Errc::DomainError, os.str());
  }
}

void check_positive_definite(const Mat& g, const ChartPoint& x) {
  if (!g.allFinite()) {
    throw Error(Errc::DomainError, "metric components are not finite");
  }
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
    std::ostringstream os;
    os << "smallest eigenvalue " << es.eigenvalues()(0) << " at ("
       << x.transpose() << ")";
    throw Error(Errc::NotPositiveDefinite, os.str());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// MetricField

MetricField MetricField::euclidean(int d) {
  check_dim(d);
  return MetricField(std::make_shared<FlatSource>(d));
}

MetricField MetricField::sphere(int d, double radius) {
  check_dim(d);
  check_radius(radius);
  return MetricField(std::make_shared<SphereSource>(d, radius));
}

MetricField MetricField::hyperbolic(int d, double radius) {
  check_dim(d);
  check_radius(radius);
  return MetricField(std::make_shared<HyperbolicSource>(d, radius));
}

MetricField MetricField::conformally_flat(const Expr& omega) {
  check_dim(omega.dim());
  return MetricField(std::make_shared<ExprFactorSource>(omega));
}

MetricField MetricField::custom(const std::vector<Expr>& components) {
  const auto n = components.size();
  int d = 0;
  while (static_cast<std::size_t>(d * d) < n) ++d;
  if (static_cast<std::size_t>(d * d) != n) {
    throw Error(Errc::InvalidArgument,
                "custom metric needs d*d components, got " + std::to_string(n));
  }
  check_dim(d);
  for (const Expr& e : components) {
    if (e.dim() != d) {
      throw Error(Errc::InvalidArgument,
                  "component expression dimension does not match metric");
    }
  }
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) {
      if (!components[a * d + b].structurally_equal(components[b * d + a])) {
        throw Error(Errc::InvalidArgument,
                    "custom metric components (" + std::to_string(a + 1) +
                        "," + std::to_string(b + 1) + ") and (" +
                        std::to_string(b + 1) + "," + std::to_string(a + 1) +
                        ") differ");
      }
    }
  }
  return MetricField(std::make_shared<CustomSource>(components, d));
}

int MetricField::dim() const { return source_->dim(); }
MetricKind MetricField::kind() const { return source_->kind(); }
double MetricField::radius() const { return source_->radius(); }
std::string MetricField::description() const {
  return source_->description();
}

bool MetricField::in_domain(const ChartPoint& x) const {
  return x.size() == dim() && source_->in_domain(x);
}

Mat MetricField::metric(const ChartPoint& x) const {
  check_point(*source_, x);
  Mat g = source_->value(x);
  check_positive_definite(g, x);
  return g;
}

MetricJet MetricField::jet(const ChartPoint& x) const {
  check_point(*source_, x);
  MetricJet j = source_->jet(x);
  check_positive_definite(j.g, x);
  return j;
}

MetricEval eval_metric(const MetricField& m, const ChartPoint& x) {
  MetricEval e;
  e.g = m.metric(x);
  e.g_inv = e.g.llt().solve(Mat::Identity(m.dim(), m.dim()));
  // symmetrise away round-off so downstream contractions stay symmetric
  e.g_inv = 0.5 * (e.g_inv + e.g_inv.transpose()).eval();
  return e;
}

MetricField conformal_rescale(const MetricField& m,
                              const ConformalFactor& omega) {
  if (omega.dim() != m.dim()) {
    throw Error(Errc::InvalidArgument,
                "conformal factor dimension does not match metric");
  }
  return MetricField(std::make_shared<RescaledSource>(m.source_, omega));
}

// ---------------------------------------------------------------------------
// Curvature

Vec CurvatureData::contract(const Vec& v, const Vec& w) const {
  Vec r = Vec::Zero(dim);
  for (int a = 0; a < dim; ++a) {
    double s = 0.0;
    for (int b = 0; b < dim; ++b) {
      for (int c = 0; c < dim; ++c) s += gamma(a, b, c) * v(b) * w(c);
    }
    r(a) = s;
  }
  return r;
}

CurvatureData curvature(const MetricField& m, const ChartPoint& x) {
  const int d = m.dim();
  CurvatureData cd;
  cd.dim = d;

  if (m.kind() == MetricKind::Euclidean) {
    check_point(*m.source(), x);
    cd.g = Mat::Identity(d, d);
    cd.g_inv = Mat::Identity(d, d);
    cd.ricci = Mat::Zero(d, d);
    cd.schouten = Mat::Zero(d, d);
    cd.schouten_endo = Mat::Zero(d, d);
    return cd;
  }

  const MetricJet j = m.jet(x);
  cd.g = j.g;
  cd.g_inv = j.g.llt().solve(Mat::Identity(d, d));
  cd.g_inv = 0.5 * (cd.g_inv + cd.g_inv.transpose()).eval();

  auto idx3 = [d](int a, int b, int c) { return (a * d + b) * d + c; };
  auto idx4 = [d](int e, int a, int b, int c) {
    return ((e * d + a) * d + b) * d + c;
  };

  // first kind: gamma1[k][b][c] = 1/2 (d_b g_kc + d_c g_kb - d_k g_bc)
  std::array<double, kMaxDim * kMaxDim * kMaxDim> gamma1{};
  for (int k = 0; k < d; ++k) {
    for (int b = 0; b < d; ++b) {
      for (int c = b; c < d; ++c) {
        const double v =
            0.5 * (j.dg[b](k, c) + j.dg[c](k, b) - j.dg[k](b, c));
        gamma1[idx3(k, b, c)] = gamma1[idx3(k, c, b)] = v;
      }
    }
  }
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      for (int c = b; c < d; ++c) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += cd.g_inv(a, k) * gamma1[idx3(k, b, c)];
        cd.christoffel[idx3(a, b, c)] = cd.christoffel[idx3(a, c, b)] = s;
      }
    }
  }

  // dgamma[e][a][b][c] = d_e Gamma^a_bc
  //   = g^ak (d_e gamma1_kbc - d_e g_kn Gamma^n_bc)
  std::array<double, kMaxDim * kMaxDim * kMaxDim * kMaxDim> dgamma{};
  for (int e = 0; e < d; ++e) {
    for (int b = 0; b < d; ++b) {
      for (int c = b; c < d; ++c) {
        Vec t(d);
        for (int k = 0; k < d; ++k) {
          double v = 0.5 * (j.ddg[e][b](k, c) + j.ddg[e][c](k, b) -
                            j.ddg[e][k](b, c));
          for (int n = 0; n < d; ++n) {
            v -= j.dg[e](k, n) * cd.christoffel[idx3(n, b, c)];
          }
          t(k) = v;
        }
        const Vec s = cd.g_inv * t;
        for (int a = 0; a < d; ++a) {
          dgamma[idx4(e, a, b, c)] = dgamma[idx4(e, a, c, b)] = s(a);
        }
      }
    }
  }

  // Ric_bc = d_a Gamma^a_bc - d_c Gamma^a_ab
  //        + Gamma^a_ae Gamma^e_bc - Gamma^a_ce Gamma^e_ab
  cd.ricci.resize(d, d);
  for (int b = 0; b < d; ++b) {
    for (int c = b; c < d; ++c) {
      double s = 0.0;
      for (int a = 0; a < d; ++a) {
        s += dgamma[idx4(a, a, b, c)] - dgamma[idx4(c, a, a, b)];
        for (int e = 0; e < d; ++e) {
          s += cd.christoffel[idx3(a, a, e)] * cd.christoffel[idx3(e, b, c)] -
               cd.christoffel[idx3(a, c, e)] * cd.christoffel[idx3(e, a, b)];
        }
      }
      cd.ricci(b, c) = cd.ricci(c, b) = s;
    }
  }

  cd.scalar = (cd.g_inv.array() * cd.ricci.array()).sum();
  cd.schouten =
      (cd.ricci - (cd.scalar / (2.0 * (d - 1))) * cd.g) / double(d - 2);
  cd.schouten_endo = cd.g_inv * cd.schouten;
  return cd;
}

// ---------------------------------------------------------------------------

ConformalData transform_conformal_data(const MetricField& m,
                                       const ConformalFactor& omega,
                                       const ChartPoint& x,
                                       const TangentVector& u,
                                       const TangentVector& a) {
  const int d = m.dim();
  const CurvatureData cd = curvature(m, x);
  const double unit_res = std::abs(inner(cd.g, u, u) - 1.0);
  const double perp_res = std::abs(inner(cd.g, u, a));
  if (unit_res > 1e-8 || perp_res > 1e-8) {
    std::ostringstream os;
    os << "expected g(u,u) = 1 and g(u,a) = 0, residuals " << unit_res << ", "
       << perp_res;
    throw Error(Errc::ConstraintViolation, os.str());
  }

  const Jet2 om = omega.eval(x);
  const Vec ups = om.grad / om.value;
  const Vec ups_sharp = cd.g_inv * ups;

  // nabla_a Upsilon_b = d_a d_b Omega / Omega - Upsilon_a Upsilon_b
  //                     - Gamma^c_ab Upsilon_c
  Mat nabla_ups = om.hess / om.value - ups * ups.transpose();
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < d; ++k) {
      double s = 0.0;
      for (int c = 0; c < d; ++c) s += cd.gamma(c, i, k) * ups(c);
      nabla_ups(i, k) -= s;
    }
  }

  ConformalData out;
  out.schouten_hat = cd.schouten - nabla_ups + ups * ups.transpose() -
                     0.5 * ups.dot(ups_sharp) * cd.g;
  out.u_hat = u / om.value;
  out.a_hat = (a - ups_sharp + ups.dot(u) * u) / (om.value * om.value);
  return out;
}

}  // namespace cgeo
