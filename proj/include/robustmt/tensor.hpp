#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>

#include "robustmt/util.hpp"

namespace rmt {

// Row-major dynamic matrix; activations are (sequence_length x feature)
// with one row per token.
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Uniform(-limit, limit) fill from the portable RNG stream. Values are drawn
// in double and cast, so float and double models from one seed correspond.
template <typename T>
void uniform_init(Mat<T>& m, Rng& rng, double limit) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = static_cast<T>((2.0 * uniform_real(rng) - 1.0) * limit);
}

template <typename T>
void xavier_init(Mat<T>& m, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  uniform_init(m, rng, limit);
}

template <typename T>
bool all_finite(const Mat<T>& m) {
  return m.allFinite();
}

}  // namespace rmt
