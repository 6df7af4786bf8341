#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "patchmmd/encoders.hpp"
#include "patchmmd/grid.hpp"
#include "patchmmd/kernels.hpp"
#include "patchmmd/types.hpp"

namespace patchmmd {

/// Biased MMD^2 V-statistic split into its three averaged Gram blocks:
/// value = gram_xx_mean + gram_yy_mean - 2 * gram_xy_mean.
template <typename Scalar>
struct MmdResult {
  Scalar value = 0;
  Scalar gram_xx_mean = 0;
  Scalar gram_yy_mean = 0;
  Scalar gram_xy_mean = 0;
  Scalar length_scale_used = 0;
};

namespace detail {

/// Resolves the kernel for one estimator call: in median_heuristic mode the
/// length scale is the pooled-code median and is treated as a constant.
template <typename Scalar>
std::pair<KernelSpec<Scalar>, Scalar> resolve_kernel(const KernelSpec<Scalar>& spec,
                                                     const Matrix<Scalar>& codes_x,
                                                     const Matrix<Scalar>& codes_y) {
  if (!is_distance_based(spec.family)) return {spec, Scalar(0)};
  if (spec.length_scale_mode == LengthScaleMode::median_heuristic) {
    const Scalar l = median_heuristic(codes_x, codes_y);
    return {with_length_scale(spec, l), l};
  }
  const Scalar l = spec.family == KernelFamily::gaussian_rbf
                       ? Scalar(1) / std::sqrt(Scalar(2) * spec.gamma)
                       : spec.length_scale;
  return {spec, l};
}

/// Mean of k(a_i, b_j) over all pairs, compensated summation.
template <typename Scalar>
Scalar gram_block_mean(const KernelSpec<Scalar>& spec, const Matrix<Scalar>& a,
                       const Matrix<Scalar>& b) {
  CompensatedSum<Scalar> sum;
  Vector<Scalar> ai(a.rows()), bj(b.rows());
  for (Index i = 0; i < a.cols(); ++i) {
    ai = a.col(i);
    for (Index j = 0; j < b.cols(); ++j) {
      bj = b.col(j);
      sum.add(kernel_eval(spec, ai, bj));
    }
  }
  return sum.value() / (Scalar(a.cols()) * Scalar(b.cols()));
}

template <typename Scalar>
MmdResult<Scalar> mmd2_from_codes(const KernelSpec<Scalar>& spec, const Matrix<Scalar>& cx,
                                  const Matrix<Scalar>& cy, Scalar length_scale_used) {
  MmdResult<Scalar> res;
  res.gram_xx_mean = gram_block_mean(spec, cx, cx);
  res.gram_yy_mean = gram_block_mean(spec, cy, cy);
  res.gram_xy_mean = gram_block_mean(spec, cx, cy);
  res.value = res.gram_xx_mean + res.gram_yy_mean - Scalar(2) * res.gram_xy_mean;
  res.length_scale_used = length_scale_used;
  return res;
}

template <typename Scalar>
void check_mmd_inputs(const Encoder<Scalar>& enc, const PatchSample<Scalar>& x,
                      const PatchSample<Scalar>& y) {
  if (x.count() == 0 || y.count() == 0) {
    throw std::invalid_argument("mmd2: empty patch sample");
  }
  if (x.patches.rows() != enc.input_dim || y.patches.rows() != enc.input_dim) {
    throw std::invalid_argument("mmd2: patch length != encoder input_dim");
  }
}

}  // namespace detail

/// Biased V-statistic (diagonal terms included) of MMD^2 between the encoded
/// patch samples, per
///   (1/m^2) sum_ii' k(x_i,x_i') + (1/n^2) sum_jj' k(y_j,y_j')
///   - (2/mn) sum_ij k(x_i,y_j).
template <typename Scalar>
MmdResult<Scalar> mmd2(const KernelSpec<Scalar>& spec, const Encoder<Scalar>& enc,
                       const PatchSample<Scalar>& x, const PatchSample<Scalar>& y) {
  detail::check_mmd_inputs(enc, x, y);
  const Matrix<Scalar> cx = encode_batch(enc, x.patches);
  const Matrix<Scalar> cy = encode_batch(enc, y.patches);
  const auto [resolved, l] = detail::resolve_kernel(spec, cx, cy);
  return detail::mmd2_from_codes(resolved, cx, cy, l);
}

/// mmd2 plus the gradient of the estimator with respect to each raw patch of
/// X (one column per patch). Y and the resolved length scale are constants.
template <typename Scalar>
std::pair<MmdResult<Scalar>, Matrix<Scalar>> mmd2_grad(const KernelSpec<Scalar>& spec,
                                                       const Encoder<Scalar>& enc,
                                                       const PatchSample<Scalar>& x,
                                                       const PatchSample<Scalar>& y) {
  detail::check_mmd_inputs(enc, x, y);
  const Matrix<Scalar> cx = encode_batch(enc, x.patches);
  const Matrix<Scalar> cy = encode_batch(enc, y.patches);
  const auto [resolved, l] = detail::resolve_kernel(spec, cx, cy);
  const MmdResult<Scalar> res = detail::mmd2_from_codes(resolved, cx, cy, l);

  const Index m = cx.cols();
  const Index n = cy.cols();
  // d/dz_i of the V-statistic: (2/m^2) sum_i' grad_x k(z_i, z_i')
  //                          - (2/mn)  sum_j  grad_x k(z_i, w_j)
  Matrix<Scalar> code_grads = Matrix<Scalar>::Zero(cx.rows(), m);
  Vector<Scalar> zi(cx.rows()), other(cx.rows());
  const Scalar cxx = Scalar(2) / (Scalar(m) * Scalar(m));
  const Scalar cxy = Scalar(2) / (Scalar(m) * Scalar(n));
  for (Index i = 0; i < m; ++i) {
    zi = cx.col(i);
    Vector<Scalar> g = Vector<Scalar>::Zero(cx.rows());
    for (Index j = 0; j < m; ++j) {
      other = cx.col(j);
      g += cxx * kernel_grad_x(resolved, zi, other);
    }
    for (Index j = 0; j < n; ++j) {
      other = cy.col(j);
      g -= cxy * kernel_grad_x(resolved, zi, other);
    }
    code_grads.col(i) = g;
  }
  return {res, encode_vjp_batch(enc, x.patches, code_grads)};
}

}  // namespace patchmmd
