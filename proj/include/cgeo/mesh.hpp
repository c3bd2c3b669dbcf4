#pragma once

// Closed triangle meshes in R^3 with inside/outside queries by ray-cast
// parity and bounded point-to-surface distance queries.

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace cgeo {

using P3 = Eigen::Vector3d;

class TriangleMesh {
 public:
  TriangleMesh() = default;
  TriangleMesh(std::vector<P3> vertices, std::vector<std::array<int, 3>> tris);

  const std::vector<P3>& vertices() const { return v_; }
  const std::vector<std::array<int, 3>>& triangles() const { return t_; }

  // Parity of the crossings of a fixed generic ray from q.
  bool inside(const P3& q) const;

  // Distance from q to the surface if it is at most `limit`, otherwise some
  // value greater than `limit`.
  double distance_within(const P3& q, double limit) const;

  // Nearest triangle to q (exhaustive) and the barycentric coordinates of the
  // closest point on it.
  struct Nearest {
    int triangle = -1;
    double distance = 0.0;
    std::array<double, 3> bary{};
  };
  Nearest nearest(const P3& q) const;

  double max_edge() const { return max_edge_; }

 private:
  void build();

  std::vector<P3> v_;
  std::vector<std::array<int, 3>> t_;
  double max_edge_ = 0.0;

  // 2D bins of triangles projected along the ray direction.
  P3 dir_, b1_, b2_;
  Eigen::Vector2d lo2_{0, 0};
  double cell2_ = 1.0;
  int n2_ = 1;
  std::vector<std::vector<int>> bins2_;

  // 3D uniform grid for distance queries.
  P3 lo3_{0, 0, 0};
  double cell3_ = 1.0;
  std::array<int, 3> n3_{1, 1, 1};
  std::vector<std::vector<int>> bins3_;
};

// Closest point on triangle (a, b, c) to p, with barycentric coordinates.
P3 closest_on_triangle(const P3& p, const P3& a, const P3& b, const P3& c,
                       std::array<double, 3>* bary = nullptr);

}  // namespace cgeo
