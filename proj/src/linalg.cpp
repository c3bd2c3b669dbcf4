#include "cgeo/linalg.hpp"

namespace cgeo {

Mat orthonormal_frame(const Mat& g, const Mat& seed) {
  const int d = static_cast<int>(g.rows());
  Mat frame(d, d);
  int filled = 0;
  auto try_add = [&](Vec v) {
    for (int k = 0; k < filled; ++k) {
      v -= inner(g, frame.col(k), v) * frame.col(k);
    }
    const double n = norm(g, v);
    if (n > 1e-10) {
      frame.col(filled++) = v / n;
    }
  };
  for (int j = 0; j < seed.cols() && filled < d; ++j) try_add(seed.col(j));
  for (int i = 0; i < d && filled < d; ++i) try_add(unit(d, i));
  return frame;
}

Mat frame_from(const Mat& g, const Vec& u) {
  Mat seed = u;
  return orthonormal_frame(g, seed);
}

}  // namespace cgeo
