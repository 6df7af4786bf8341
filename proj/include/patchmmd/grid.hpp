#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "patchmmd/rng.hpp"
#include "patchmmd/types.hpp"

namespace patchmmd {

/// A set of square patches cut from one (reflect-padded) grid.
/// `patches` holds one flattened row-major patch per column; `origins` are the
/// matching top-left positions in the padded grid.
template <typename Scalar>
struct PatchSample {
  Index patch_size = 0;
  bool source_padded = false;
  Index pad = 0;
  Index padded_height = 0;
  Index padded_width = 0;
  std::vector<std::array<Index, 2>> origins;
  Matrix<Scalar> patches;

  Index count() const { return patches.cols(); }
};

namespace detail {

/// Mirror about the boundary pixel without repeating it ("reflect101").
/// Valid for -(n-1) <= i <= 2n-2, which pad < n guarantees.
inline Index mirror_index(Index i, Index n) {
  if (i < 0) i = -i;
  if (i >= n) i = 2 * n - 2 - i;
  return i;
}

}  // namespace detail

template <typename Scalar>
Image<Scalar> reflect_pad(const Image<Scalar>& grid, Index width) {
  if (width < 0) throw std::invalid_argument("reflect_pad: negative width");
  if (width >= std::min(grid.rows(), grid.cols())) {
    throw std::invalid_argument("reflect_pad: width " + std::to_string(width) +
                                " must be smaller than both grid dimensions");
  }
  if (width == 0) return grid;
  const Index h = grid.rows();
  const Index w = grid.cols();
  Image<Scalar> out(h + 2 * width, w + 2 * width);
  for (Index i = 0; i < out.rows(); ++i) {
    const Index si = detail::mirror_index(i - width, h);
    for (Index j = 0; j < out.cols(); ++j) {
      out(i, j) = grid(si, detail::mirror_index(j - width, w));
    }
  }
  return out;
}

/// Reads the p-by-p window at (row, col), flattened row-major.
template <typename Scalar>
Vector<Scalar> extract_patch(const Image<Scalar>& grid, Index row, Index col, Index p) {
  if (p <= 0) throw std::invalid_argument("extract_patch: patch size must be positive");
  if (row < 0 || col < 0 || row + p > grid.rows() || col + p > grid.cols()) {
    throw std::invalid_argument("extract_patch: window out of bounds");
  }
  Vector<Scalar> out(p * p);
  for (Index r = 0; r < p; ++r) {
    for (Index c = 0; c < p; ++c) {
      out(r * p + c) = grid(row + r, col + c);
    }
  }
  return out;
}

/// Draws `count` top-left positions uniformly with replacement over the full
/// stride-1 origin lattice of a padded_h-by-padded_w grid.
inline std::vector<std::array<Index, 2>> draw_patch_origins(Index padded_h, Index padded_w,
                                                            Index p, Index count, Rng& rng) {
  if (p > padded_h || p > padded_w) {
    throw std::invalid_argument("draw_patch_origins: patch larger than grid");
  }
  const Index rows_avail = padded_h - p + 1;
  const Index cols_avail = padded_w - p + 1;
  std::vector<std::array<Index, 2>> origins;
  origins.reserve(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) {
    const Index r = uniform_index(rng, rows_avail);
    const Index c = uniform_index(rng, cols_avail);
    origins.push_back({r, c});
  }
  return origins;
}

/// Reflect-pads `grid` by `pad` and cuts the patches at the given origins
/// (origins are positions in the padded grid).
template <typename Scalar>
PatchSample<Scalar> extract_patches_at(const Image<Scalar>& grid,
                                       const std::vector<std::array<Index, 2>>& origins,
                                       Index p, Index pad) {
  const Image<Scalar> padded = reflect_pad(grid, pad);
  if (p > padded.rows() || p > padded.cols()) {
    throw std::invalid_argument("extract_patches_at: patch larger than padded grid");
  }
  PatchSample<Scalar> sample;
  sample.patch_size = p;
  sample.pad = pad;
  sample.source_padded = pad > 0;
  sample.padded_height = padded.rows();
  sample.padded_width = padded.cols();
  sample.origins = origins;
  sample.patches.resize(p * p, static_cast<Index>(origins.size()));
  for (std::size_t k = 0; k < origins.size(); ++k) {
    sample.patches.col(static_cast<Index>(k)) =
        extract_patch(padded, origins[k][0], origins[k][1], p);
  }
  return sample;
}

/// Pads by `pad`, then draws `count` patches uniformly with replacement.
/// Deterministic for a fixed rng state; count == 0 yields an empty sample.
template <typename Scalar>
PatchSample<Scalar> sample_patches(const Image<Scalar>& grid, Index count, Index p,
                                   Index pad, Rng& rng) {
  if (count < 0) throw std::invalid_argument("sample_patches: negative count");
  const Index padded_h = grid.rows() + 2 * pad;
  const Index padded_w = grid.cols() + 2 * pad;
  if (pad >= std::min(grid.rows(), grid.cols())) {
    throw std::invalid_argument("sample_patches: pad too large for grid");
  }
  const auto origins = draw_patch_origins(padded_h, padded_w, p, count, rng);
  return extract_patches_at(grid, origins, p, pad);
}

/// Exact adjoint of reflect_pad-then-extract: accumulates per-patch gradients
/// into a padded accumulator and folds each mirrored border cell back onto the
/// interior pixel it reads from. Returns the unpadded gradient grid.
template <typename Scalar>
Image<Scalar> scatter_add_patches(const Matrix<Scalar>& patch_grads,
                                  const std::vector<std::array<Index, 2>>& origins,
                                  Index padded_h, Index padded_w, Index pad, Index p) {
  if (p <= 0 || patch_grads.rows() != p * p) {
    throw std::invalid_argument("scatter_add_patches: patch gradient rows != p*p");
  }
  if (patch_grads.cols() != static_cast<Index>(origins.size())) {
    throw std::invalid_argument("scatter_add_patches: origin/gradient count mismatch");
  }
  const Index h = padded_h - 2 * pad;
  const Index w = padded_w - 2 * pad;
  if (h < 1 || w < 1) throw std::invalid_argument("scatter_add_patches: bad padded shape");

  Image<Scalar> acc = Image<Scalar>::Zero(padded_h, padded_w);
  for (std::size_t k = 0; k < origins.size(); ++k) {
    const Index r0 = origins[k][0];
    const Index c0 = origins[k][1];
    if (r0 < 0 || c0 < 0 || r0 + p > padded_h || c0 + p > padded_w) {
      throw std::invalid_argument("scatter_add_patches: origin out of bounds");
    }
    acc.block(r0, c0, p, p) +=
        Eigen::Map<const Image<Scalar>>(patch_grads.col(static_cast<Index>(k)).data(), p, p);
  }
  if (pad == 0) return acc;

  Image<Scalar> out = Image<Scalar>::Zero(h, w);
  for (Index i = 0; i < padded_h; ++i) {
    const Index si = detail::mirror_index(i - pad, h);
    for (Index j = 0; j < padded_w; ++j) {
      out(si, detail::mirror_index(j - pad, w)) += acc(i, j);
    }
  }
  return out;
}

/// Procedural binary exemplar: sinuous horizontal channel bands of +1 on a -1
/// background, thresholded so the +1 fraction matches channel_fraction.
template <typename Scalar>
Image<Scalar> make_channel_exemplar(Index h, Index w, Scalar channel_fraction, Rng& rng) {
  if (h < 1 || w < 1) throw std::invalid_argument("make_channel_exemplar: empty grid");
  if (!(channel_fraction > Scalar(0) && channel_fraction < Scalar(1))) {
    throw std::invalid_argument("make_channel_exemplar: channel_fraction must be in (0,1)");
  }

  const Scalar thickness = std::max<Scalar>(2, Scalar(h) / 16);
  const Index n_channels =
      std::max<Index>(1, static_cast<Index>(std::lround(channel_fraction * Scalar(h) / thickness)));

  std::uniform_real_distribution<Scalar> unit(0, 1);
  Image<Scalar> field = Image<Scalar>::Zero(h, w);
  for (Index k = 0; k < n_channels; ++k) {
    const Scalar base = unit(rng) * Scalar(h);
    const Scalar amp1 = (Scalar(0.05) + Scalar(0.10) * unit(rng)) * Scalar(h);
    const Scalar amp2 = (Scalar(0.02) + Scalar(0.04) * unit(rng)) * Scalar(h);
    const Scalar freq1 = Scalar(0.5) + unit(rng);
    const Scalar freq2 = Scalar(1.5) + Scalar(2) * unit(rng);
    const Scalar phase1 = Scalar(2 * M_PI) * unit(rng);
    const Scalar phase2 = Scalar(2 * M_PI) * unit(rng);
    const Scalar sigma = thickness / 2;
    for (Index j = 0; j < w; ++j) {
      const Scalar t = Scalar(2 * M_PI) * Scalar(j) / Scalar(w);
      const Scalar center = base + amp1 * std::sin(freq1 * t + phase1) +
                            amp2 * std::sin(freq2 * t + phase2);
      // wrap the centerline so channels leaving the top re-enter below
      const Scalar wrapped = center - Scalar(h) * std::floor(center / Scalar(h));
      for (Index i = 0; i < h; ++i) {
        Scalar d = std::abs(Scalar(i) - wrapped);
        d = std::min(d, Scalar(h) - d);
        field(i, j) += std::exp(-(d * d) / (2 * sigma * sigma));
      }
    }
  }

  // threshold at the (1 - fraction) quantile of the field
  std::vector<Scalar> sorted(field.data(), field.data() + field.size());
  std::sort(sorted.begin(), sorted.end());
  const Index target = std::max<Index>(
      1, static_cast<Index>(std::lround(channel_fraction * Scalar(field.size()))));
  const Scalar threshold = sorted[static_cast<std::size_t>(field.size() - target)];

  Image<Scalar> out(h, w);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      out(i, j) = field(i, j) >= threshold ? Scalar(1) : Scalar(-1);
    }
  }
  return out;
}

}  // namespace patchmmd
