#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "patchmmd/grid.hpp"
#include "patchmmd/rng.hpp"
#include "patchmmd/types.hpp"

namespace patchmmd {

enum class Axis { x, y };

/// Normalized equal-width histogram over [-1, 1], last bin right-closed.
template <typename Scalar>
struct HistogramResult {
  Vector<Scalar> edges;   // bins + 1
  Vector<Scalar> masses;  // sum to 1
};

template <typename Scalar>
HistogramResult<Scalar> histogram(const Image<Scalar>& grid, Index bins) {
  if (bins < 1) throw std::invalid_argument("histogram: bins must be >= 1");
  if (grid.size() == 0) throw std::invalid_argument("histogram: empty grid");
  HistogramResult<Scalar> out;
  out.edges.resize(bins + 1);
  for (Index b = 0; b <= bins; ++b) {
    out.edges(b) = Scalar(-1) + Scalar(2) * Scalar(b) / Scalar(bins);
  }
  out.masses = Vector<Scalar>::Zero(bins);
  for (Index i = 0; i < grid.rows(); ++i) {
    for (Index j = 0; j < grid.cols(); ++j) {
      const Scalar v = grid(i, j);
      Index b = static_cast<Index>(std::floor((v + Scalar(1)) / Scalar(2) * Scalar(bins)));
      b = std::max<Index>(0, std::min<Index>(bins - 1, b));
      out.masses(b) += Scalar(1);
    }
  }
  out.masses /= Scalar(grid.size());
  return out;
}

/// Two-point probability along one axis: S2(r) = P(phase(p) = phase(p + r e) = 1)
/// with phase 1 where value > threshold; pairs counted without wraparound.
template <typename Scalar>
struct PfCurve {
  Axis direction = Axis::x;
  Vector<Scalar> values;  // lags 0..max_lag
};

template <typename Scalar>
PfCurve<Scalar> two_point_pf(const Image<Scalar>& grid, Axis direction, Index max_lag,
                             Scalar threshold = Scalar(0)) {
  const Index extent = direction == Axis::x ? grid.cols() : grid.rows();
  if (max_lag < 0 || max_lag >= extent) {
    throw std::invalid_argument("two_point_pf: max_lag must be < grid extent in that direction");
  }
  PfCurve<Scalar> out;
  out.direction = direction;
  out.values.resize(max_lag + 1);
  for (Index r = 0; r <= max_lag; ++r) {
    long long both = 0;
    long long valid = 0;
    if (direction == Axis::x) {
      for (Index i = 0; i < grid.rows(); ++i) {
        for (Index j = 0; j + r < grid.cols(); ++j) {
          ++valid;
          if (grid(i, j) > threshold && grid(i, j + r) > threshold) ++both;
        }
      }
    } else {
      for (Index i = 0; i + r < grid.rows(); ++i) {
        for (Index j = 0; j < grid.cols(); ++j) {
          ++valid;
          if (grid(i, j) > threshold && grid(i + r, j) > threshold) ++both;
        }
      }
    }
    out.values(r) = Scalar(both) / Scalar(valid);
  }
  return out;
}

/// Fraction of pixels above the threshold.
template <typename Scalar>
Scalar phase_fraction(const Image<Scalar>& grid, Scalar threshold = Scalar(0)) {
  long long ones = 0;
  for (Index i = 0; i < grid.rows(); ++i) {
    for (Index j = 0; j < grid.cols(); ++j) {
      if (grid(i, j) > threshold) ++ones;
    }
  }
  return Scalar(ones) / Scalar(grid.size());
}

/// Spatial-statistics comparison of realizations against the exemplar.
/// PF curves of each realization are computed on a random crop of its
/// reflect-padded version; histograms and phase fractions use the raw,
/// un-thresholded realization.
template <typename Scalar>
struct StatsReport {
  HistogramResult<Scalar> exemplar_histogram;
  std::vector<HistogramResult<Scalar>> histograms;
  PfCurve<Scalar> exemplar_pf_x;
  PfCurve<Scalar> exemplar_pf_y;
  std::vector<PfCurve<Scalar>> pf_x;
  std::vector<PfCurve<Scalar>> pf_y;
  std::vector<Scalar> channel_fraction;
};

template <typename Scalar>
StatsReport<Scalar> eval_report(const Image<Scalar>& exemplar,
                                const std::vector<Image<Scalar>>& realizations, Index crop_size,
                                Index patch_size, Index max_lag, Index bins, Rng& rng,
                                Scalar threshold = Scalar(0)) {
  if (realizations.empty()) throw std::invalid_argument("eval_report: no realizations");
  if (crop_size < 1 || crop_size > std::min(exemplar.rows(), exemplar.cols())) {
    throw std::invalid_argument("eval_report: crop_size must fit inside the exemplar");
  }
  if (max_lag >= crop_size) throw std::invalid_argument("eval_report: max_lag must be < crop_size");

  StatsReport<Scalar> report;
  report.exemplar_histogram = histogram(exemplar, bins);
  report.exemplar_pf_x = two_point_pf(exemplar, Axis::x, max_lag, threshold);
  report.exemplar_pf_y = two_point_pf(exemplar, Axis::y, max_lag, threshold);

  const Index pad = patch_size / 2;
  for (const auto& realization : realizations) {
    const Image<Scalar> padded = reflect_pad(realization, pad);
    if (crop_size > std::min(padded.rows(), padded.cols())) {
      throw std::invalid_argument("eval_report: crop larger than padded realization");
    }
    const Index r0 = uniform_index(rng, padded.rows() - crop_size + 1);
    const Index c0 = uniform_index(rng, padded.cols() - crop_size + 1);
    const Image<Scalar> crop = padded.block(r0, c0, crop_size, crop_size);
    report.pf_x.push_back(two_point_pf(crop, Axis::x, max_lag, threshold));
    report.pf_y.push_back(two_point_pf(crop, Axis::y, max_lag, threshold));
    report.histograms.push_back(histogram(realization, bins));
    report.channel_fraction.push_back(phase_fraction(realization, threshold));
  }
  return report;
}

}  // namespace patchmmd
