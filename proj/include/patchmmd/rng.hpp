#pragma once

#include <cstdint>
#include <random>

#include "patchmmd/types.hpp"

namespace patchmmd {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

/// Uniform integer in [0, n).
inline Index uniform_index(Rng& rng, Index n) {
  return std::uniform_int_distribution<Index>{0, n - 1}(rng);
}

template <typename Scalar>
Scalar draw_normal(Rng& rng, Scalar mean = Scalar(0), Scalar stddev = Scalar(1)) {
  std::normal_distribution<Scalar> dist{mean, stddev};
  return dist(rng);
}

/// Fills in row-major element order regardless of the matrix storage order, so
/// the consumed random stream does not depend on layout.
template <typename Derived>
void fill_normal(Eigen::MatrixBase<Derived>& m, Rng& rng,
                 typename Derived::Scalar mean = 0, typename Derived::Scalar stddev = 1) {
  std::normal_distribution<typename Derived::Scalar> dist{mean, stddev};
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      m(i, j) = dist(rng);
    }
  }
}

}  // namespace patchmmd
