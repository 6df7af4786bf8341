#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "patchmmd/types.hpp"

namespace patchmmd {

// rho == 0 (duplicate samples) is replaced by this inside the log and its
// gradient contribution is dropped.
inline constexpr double kEntropyRhoEpsilon = 1e-12;

/// Kozachenko-Leonenko estimate from the k-th nearest neighbor distances.
template <typename Scalar>
struct EntropyResult {
  Scalar value = 0;                 // full estimate, nats
  Scalar rho_term = 0;              // (c/N) * sum_i log rho_i (the theta-dependent part)
  std::vector<Index> knn_index;     // index of each sample's k-th nearest neighbor
  Vector<Scalar> rho;               // distance to that neighbor
};

/// psi(n) for integer n >= 1 via the harmonic series.
template <typename Scalar = double>
Scalar digamma_int(Index n) {
  if (n < 1) throw std::invalid_argument("digamma_int: n must be >= 1");
  constexpr double kEulerMascheroni = 0.57721566490153286060651209008240243;
  CompensatedSum<Scalar> h;
  for (Index j = 1; j < n; ++j) h.add(Scalar(1) / Scalar(j));
  return h.value() - Scalar(kEulerMascheroni);
}

/// log volume of the unit ball in R^c.
template <typename Scalar = double>
Scalar log_unit_ball_volume(Index c) {
  if (c < 1) throw std::invalid_argument("log_unit_ball_volume: dimension must be >= 1");
  return Scalar(c) / Scalar(2) * std::log(Scalar(M_PI)) -
         std::lgamma(Scalar(c) / Scalar(2) + Scalar(1));
}

namespace detail {

// k-th nearest neighbor of each column (self excluded), distance ties broken
// by the smaller index.
template <typename Scalar>
void knn_search(const Matrix<Scalar>& samples, Index k, std::vector<Index>& index,
                Vector<Scalar>& rho) {
  const Index n = samples.cols();
  index.resize(static_cast<std::size_t>(n));
  rho.resize(n);
  std::vector<std::pair<Scalar, Index>> cand;
  cand.reserve(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) {
    cand.clear();
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back((samples.col(i) - samples.col(j)).norm(), j);
    }
    std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end());
    index[static_cast<std::size_t>(i)] = cand[static_cast<std::size_t>(k - 1)].second;
    rho(i) = cand[static_cast<std::size_t>(k - 1)].first;
  }
}

template <typename Scalar>
void check_entropy_inputs(const Matrix<Scalar>& samples, Index k) {
  const Index n = samples.cols();
  if (n < 2) throw std::invalid_argument("knn_entropy: need at least 2 samples");
  if (k < 1 || k > n - 1) throw std::invalid_argument("knn_entropy: k_nn must be in [1, N-1]");
  bool any_distinct = false;
  for (Index j = 1; j < n && !any_distinct; ++j) {
    any_distinct = (samples.col(j) - samples.col(0)).squaredNorm() > Scalar(0);
  }
  if (!any_distinct) {
    throw std::runtime_error("knn_entropy: degenerate sample (all points identical)");
  }
}

}  // namespace detail

/// H_hat = (c/N) sum_i log rho_i + log V_c + psi(N) - psi(k), with rho_i the
/// distance from sample i to its k-th nearest neighbor. Samples are columns.
template <typename Scalar>
EntropyResult<Scalar> knn_entropy(const Matrix<Scalar>& samples, Index k_nn) {
  detail::check_entropy_inputs(samples, k_nn);
  const Index c = samples.rows();
  const Index n = samples.cols();

  EntropyResult<Scalar> res;
  detail::knn_search(samples, k_nn, res.knn_index, res.rho);
  CompensatedSum<Scalar> log_sum;
  for (Index i = 0; i < n; ++i) {
    log_sum.add(std::log(std::max(res.rho(i), Scalar(kEntropyRhoEpsilon))));
  }
  res.rho_term = Scalar(c) / Scalar(n) * log_sum.value();
  res.value = res.rho_term + log_unit_ball_volume<Scalar>(c) + digamma_int<Scalar>(n) -
              digamma_int<Scalar>(k_nn);
  return res;
}

/// Gradient of the rho term (and hence of H_hat) with neighbor assignments
/// held fixed: sample i receives (c/N)(X_i - X_j)/rho_i^2, its neighbor j the
/// negation. Zero-distance pairs contribute nothing.
template <typename Scalar>
std::pair<EntropyResult<Scalar>, Matrix<Scalar>> knn_entropy_grad(const Matrix<Scalar>& samples,
                                                                  Index k_nn) {
  EntropyResult<Scalar> res = knn_entropy(samples, k_nn);
  const Index c = samples.rows();
  const Index n = samples.cols();
  Matrix<Scalar> grads = Matrix<Scalar>::Zero(c, n);
  for (Index i = 0; i < n; ++i) {
    if (!(res.rho(i) > Scalar(0))) continue;
    const Index j = res.knn_index[static_cast<std::size_t>(i)];
    const Vector<Scalar> g =
        (Scalar(c) / Scalar(n) / (res.rho(i) * res.rho(i))) * (samples.col(i) - samples.col(j));
    grads.col(i) += g;
    grads.col(j) -= g;
  }
  return {std::move(res), std::move(grads)};
}

}  // namespace patchmmd
