#include "cgeo/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cgeo {

TriangleMesh::TriangleMesh(std::vector<P3> vertices,
                           std::vector<std::array<int, 3>> tris)
    : v_(std::move(vertices)), t_(std::move(tris)) {
  build();
}

void TriangleMesh::build() {
  // Irrational-looking components keep the ray off mesh symmetry planes.
  dir_ = P3(0.5773502691896258, 0.3141592653589793, 0.7536243114).normalized();
  b1_ = dir_.unitOrthogonal();
  b2_ = dir_.cross(b1_);

  max_edge_ = 0.0;
  for (const auto& t : t_) {
    for (int k = 0; k < 3; ++k) {
      max_edge_ = std::max(max_edge_, (v_[t[k]] - v_[t[(k + 1) % 3]]).norm());
    }
  }
  if (t_.empty()) return;

  // projected bins
  Eigen::Vector2d lo(std::numeric_limits<double>::infinity(),
                     std::numeric_limits<double>::infinity());
  Eigen::Vector2d hi = -lo;
  std::vector<Eigen::Vector2d> proj(v_.size());
  for (std::size_t i = 0; i < v_.size(); ++i) {
    proj[i] = {v_[i].dot(b1_), v_[i].dot(b2_)};
    lo = lo.cwiseMin(proj[i]);
    hi = hi.cwiseMax(proj[i]);
  }
  n2_ = std::clamp(static_cast<int>(std::sqrt(double(t_.size()))), 1, 512);
  cell2_ = std::max((hi - lo).maxCoeff() / n2_, 1e-300);
  lo2_ = lo;
  bins2_.assign(std::size_t(n2_) * n2_, {});
  auto bin2 = [&](double v, double l) {
    return std::clamp(static_cast<int>(std::floor((v - l) / cell2_)), 0,
                      n2_ - 1);
  };
  for (std::size_t ti = 0; ti < t_.size(); ++ti) {
    Eigen::Vector2d tlo = proj[t_[ti][0]], thi = tlo;
    for (int k = 1; k < 3; ++k) {
      tlo = tlo.cwiseMin(proj[t_[ti][k]]);
      thi = thi.cwiseMax(proj[t_[ti][k]]);
    }
    for (int i = bin2(tlo.x(), lo.x()); i <= bin2(thi.x(), lo.x()); ++i) {
      for (int j = bin2(tlo.y(), lo.y()); j <= bin2(thi.y(), lo.y()); ++j) {
        bins2_[std::size_t(i) * n2_ + j].push_back(static_cast<int>(ti));
      }
    }
  }

  // 3D grid
  P3 lo3 = v_[0], hi3 = v_[0];
  for (const auto& p : v_) {
    lo3 = lo3.cwiseMin(p);
    hi3 = hi3.cwiseMax(p);
  }
  const double extent = std::max((hi3 - lo3).maxCoeff(), 1e-300);
  cell3_ = std::max(max_edge_, extent / 64.0);
  lo3_ = lo3;
  for (int k = 0; k < 3; ++k) {
    n3_[k] = std::max(1, static_cast<int>(std::ceil((hi3(k) - lo3(k)) / cell3_)));
  }
  bins3_.assign(std::size_t(n3_[0]) * n3_[1] * n3_[2], {});
  for (std::size_t ti = 0; ti < t_.size(); ++ti) {
    P3 tlo = v_[t_[ti][0]], thi = tlo;
    for (int k = 1; k < 3; ++k) {
      tlo = tlo.cwiseMin(v_[t_[ti][k]]);
      thi = thi.cwiseMax(v_[t_[ti][k]]);
    }
    std::array<int, 3> a{}, b{};
    for (int k = 0; k < 3; ++k) {
      a[k] = std::clamp(static_cast<int>(std::floor((tlo(k) - lo3(k)) / cell3_)), 0, n3_[k] - 1);
      b[k] = std::clamp(static_cast<int>(std::floor((thi(k) - lo3(k)) / cell3_)), 0, n3_[k] - 1);
    }
    for (int i = a[0]; i <= b[0]; ++i)
      for (int j = a[1]; j <= b[1]; ++j)
        for (int k = a[2]; k <= b[2]; ++k)
          bins3_[(std::size_t(i) * n3_[1] + j) * n3_[2] + k].push_back(
              static_cast<int>(ti));
  }
}

bool TriangleMesh::inside(const P3& q) const {
  if (t_.empty()) return false;
  const double x = q.dot(b1_), y = q.dot(b2_);
  const int i = static_cast<int>(std::floor((x - lo2_.x()) / cell2_));
  const int j = static_cast<int>(std::floor((y - lo2_.y()) / cell2_));
  // i == n2_ happens for points on the far edge of the bounding box
  if (i < 0 || j < 0 || i > n2_ || j > n2_) return false;
  const int ii = std::clamp(i, 0, n2_ - 1), jj = std::clamp(j, 0, n2_ - 1);
  int crossings = 0;
  for (int ti : bins2_[std::size_t(ii) * n2_ + jj]) {
    const P3& a = v_[t_[ti][0]];
    const P3& b = v_[t_[ti][1]];
    const P3& c = v_[t_[ti][2]];
    // Moller-Trumbore
    const P3 e1 = b - a, e2 = c - a;
    const P3 pv = dir_.cross(e2);
    const double det = e1.dot(pv);
    if (det == 0.0) continue;
    const double inv = 1.0 / det;
    const P3 tv = q - a;
    const double u = tv.dot(pv) * inv;
    if (u < 0.0 || u > 1.0) continue;
    const P3 qv = tv.cross(e1);
    const double v = dir_.dot(qv) * inv;
    if (v < 0.0 || u + v > 1.0) continue;
    if (e2.dot(qv) * inv > 0.0) ++crossings;
  }
  return crossings % 2 == 1;
}

P3 closest_on_triangle(const P3& p, const P3& a, const P3& b, const P3& c,
                       std::array<double, 3>* bary) {
  // Ericson, Real-Time Collision Detection, 5.1.5
  auto out = [&](double u, double v, double w) {
    if (bary) *bary = {u, v, w};
    return P3(u * a + v * b + w * c);
  };
  const P3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return out(1, 0, 0);
  const P3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return out(0, 1, 0);
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    const double v = d1 / (d1 - d3);
    return out(1 - v, v, 0);
  }
  const P3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return out(0, 0, 1);
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    const double w = d2 / (d2 - d6);
    return out(1 - w, 0, w);
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return out(0, 1 - w, w);
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return out(1 - v - w, v, w);
}

double TriangleMesh::distance_within(const P3& q, double limit) const {
  double best = std::numeric_limits<double>::infinity();
  if (t_.empty()) return best;
  std::array<int, 3> a{}, b{};
  for (int k = 0; k < 3; ++k) {
    const double lo = (q(k) - limit - lo3_(k)) / cell3_;
    const double hi = (q(k) + limit - lo3_(k)) / cell3_;
    if (hi < 0 || lo >= n3_[k]) return best;
    a[k] = std::max(0, static_cast<int>(std::floor(lo)));
    b[k] = std::min(n3_[k] - 1, static_cast<int>(std::floor(hi)));
  }
  for (int i = a[0]; i <= b[0]; ++i)
    for (int j = a[1]; j <= b[1]; ++j)
      for (int k = a[2]; k <= b[2]; ++k)
        for (int ti : bins3_[(std::size_t(i) * n3_[1] + j) * n3_[2] + k]) {
          const auto& t = t_[ti];
          const double dist =
              (closest_on_triangle(q, v_[t[0]], v_[t[1]], v_[t[2]]) - q).norm();
          best = std::min(best, dist);
        }
  return best;
}

TriangleMesh::Nearest TriangleMesh::nearest(const P3& q) const {
  Nearest n;
  n.distance = std::numeric_limits<double>::infinity();
  for (std::size_t ti = 0; ti < t_.size(); ++ti) {
    const auto& t = t_[ti];
    std::array<double, 3> bary{};
    const double dist =
        (closest_on_triangle(q, v_[t[0]], v_[t[1]], v_[t[2]], &bary) - q).norm();
    if (dist < n.distance) {
      n.distance = dist;
      n.triangle = static_cast<int>(ti);
      n.bary = bary;
    }
  }
  return n;
}

}  // namespace cgeo
