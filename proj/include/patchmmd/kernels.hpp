#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "patchmmd/types.hpp"

namespace patchmmd {

enum class KernelFamily { rational_quadratic, gaussian_rbf, linear, polynomial2 };
enum class LengthScaleMode { fixed, median_heuristic };

inline bool is_distance_based(KernelFamily f) {
  return f == KernelFamily::rational_quadratic || f == KernelFamily::gaussian_rbf;
}

inline std::string kernel_family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::rational_quadratic: return "rational_quadratic";
    case KernelFamily::gaussian_rbf: return "gaussian_rbf";
    case KernelFamily::linear: return "linear";
    case KernelFamily::polynomial2: return "polynomial2";
  }
  return "?";
}

/// Kernel family plus parameters, applied to encoded patches.
/// rational_quadratic: k(x,y) = (1 + |x-y|^2 / (2*alpha*l^2))^(-alpha)
/// gaussian_rbf:       k(x,y) = exp(-gamma * |x-y|^2), gamma = 1/(2 l^2) when
///                     derived from a length scale
/// linear:             k(x,y) = x.y
/// polynomial2:        k(x,y) = (x.y + 1)^2
template <typename Scalar>
struct KernelSpec {
  KernelFamily family = KernelFamily::rational_quadratic;
  Scalar alpha = Scalar(0.5);
  Scalar length_scale = Scalar(1);
  Scalar gamma = Scalar(0.5);
  LengthScaleMode length_scale_mode = LengthScaleMode::fixed;
};

template <typename Scalar>
void validate_kernel(const KernelSpec<Scalar>& spec) {
  if (spec.family == KernelFamily::rational_quadratic) {
    if (!(spec.alpha > Scalar(0))) throw std::invalid_argument("kernel: alpha must be > 0");
    if (!(spec.length_scale > Scalar(0))) {
      throw std::invalid_argument("kernel: length_scale must be > 0");
    }
  }
  if (spec.family == KernelFamily::gaussian_rbf && !(spec.gamma > Scalar(0))) {
    throw std::invalid_argument("kernel: gamma must be > 0");
  }
}

/// Copy of `spec` pinned to length scale l (RBF gets gamma = 1/(2 l^2)).
template <typename Scalar>
KernelSpec<Scalar> with_length_scale(KernelSpec<Scalar> spec, Scalar l) {
  spec.length_scale = l;
  spec.gamma = Scalar(1) / (Scalar(2) * l * l);
  spec.length_scale_mode = LengthScaleMode::fixed;
  return spec;
}

template <typename Scalar>
Scalar kernel_eval(const KernelSpec<Scalar>& spec, const Vector<Scalar>& x,
                   const Vector<Scalar>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("kernel_eval: size mismatch");
  validate_kernel(spec);
  switch (spec.family) {
    case KernelFamily::rational_quadratic: {
      const Scalar s = (x - y).squaredNorm();
      if (!std::isfinite(s)) throw std::invalid_argument("kernel_eval: non-finite input");
      const Scalar u =
          Scalar(1) + s / (Scalar(2) * spec.alpha * spec.length_scale * spec.length_scale);
      return std::pow(u, -spec.alpha);
    }
    case KernelFamily::gaussian_rbf: {
      const Scalar s = (x - y).squaredNorm();
      if (!std::isfinite(s)) throw std::invalid_argument("kernel_eval: non-finite input");
      return std::exp(-spec.gamma * s);
    }
    case KernelFamily::linear: {
      const Scalar d = x.dot(y);
      if (!std::isfinite(d)) throw std::invalid_argument("kernel_eval: non-finite input");
      return d;
    }
    case KernelFamily::polynomial2: {
      const Scalar d = x.dot(y);
      if (!std::isfinite(d)) throw std::invalid_argument("kernel_eval: non-finite input");
      return (d + Scalar(1)) * (d + Scalar(1));
    }
  }
  throw std::logic_error("kernel_eval: unknown family");
}

/// Gradient of kernel_eval with respect to its first argument.
template <typename Scalar>
Vector<Scalar> kernel_grad_x(const KernelSpec<Scalar>& spec, const Vector<Scalar>& x,
                             const Vector<Scalar>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("kernel_grad_x: size mismatch");
  validate_kernel(spec);
  switch (spec.family) {
    case KernelFamily::rational_quadratic: {
      const Scalar s = (x - y).squaredNorm();
      if (!std::isfinite(s)) throw std::invalid_argument("kernel_grad_x: non-finite input");
      const Scalar l2 = spec.length_scale * spec.length_scale;
      const Scalar u = Scalar(1) + s / (Scalar(2) * spec.alpha * l2);
      // d/dx (u^-a) = -u^-(a+1) (x-y)/l^2
      return (std::pow(u, -(spec.alpha + Scalar(1))) / l2) * (y - x);
    }
    case KernelFamily::gaussian_rbf: {
      const Scalar s = (x - y).squaredNorm();
      if (!std::isfinite(s)) throw std::invalid_argument("kernel_grad_x: non-finite input");
      return (Scalar(2) * spec.gamma * std::exp(-spec.gamma * s)) * (y - x);
    }
    case KernelFamily::linear: {
      if (!std::isfinite(x.dot(y))) throw std::invalid_argument("kernel_grad_x: non-finite input");
      return y;
    }
    case KernelFamily::polynomial2: {
      const Scalar d = x.dot(y);
      if (!std::isfinite(d)) throw std::invalid_argument("kernel_grad_x: non-finite input");
      return (Scalar(2) * (d + Scalar(1))) * y;
    }
  }
  throw std::logic_error("kernel_grad_x: unknown family");
}

/// Median of the pairwise Euclidean distances over all unordered pairs of the
/// pooled columns, exact zeros excluded. Even counts average the two middle
/// order statistics. Throws if no nonzero distance exists.
template <typename Scalar>
Scalar median_pairwise_distance(const Matrix<Scalar>& pooled) {
  const Index n = pooled.cols();
  if (n < 2) throw std::invalid_argument("median_heuristic: need at least 2 codes");
  std::vector<Scalar> dists;
  dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const Scalar d = (pooled.col(i) - pooled.col(j)).norm();
      if (d > Scalar(0)) dists.push_back(d);
    }
  }
  if (dists.empty()) {
    throw std::runtime_error("median_heuristic: degenerate sample (all pairwise distances zero)");
  }
  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  if (m % 2 == 1) return dists[m / 2];
  return (dists[m / 2 - 1] + dists[m / 2]) / Scalar(2);
}

template <typename Scalar>
Scalar median_heuristic(const Matrix<Scalar>& codes_a, const Matrix<Scalar>& codes_b) {
  if (codes_a.cols() == 0) return median_pairwise_distance(codes_b);
  if (codes_b.cols() == 0) return median_pairwise_distance(codes_a);
  if (codes_a.rows() != codes_b.rows()) {
    throw std::invalid_argument("median_heuristic: code dimension mismatch");
  }
  Matrix<Scalar> pooled(codes_a.rows(), codes_a.cols() + codes_b.cols());
  pooled.leftCols(codes_a.cols()) = codes_a;
  pooled.rightCols(codes_b.cols()) = codes_b;
  return median_pairwise_distance(pooled);
}

}  // namespace patchmmd
