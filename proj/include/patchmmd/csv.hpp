#pragma once

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "patchmmd/gennet.hpp"
#include "patchmmd/mmd.hpp"
#include "patchmmd/stats.hpp"
#include "patchmmd/synth.hpp"

namespace patchmmd {

namespace detail {

inline std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << std::setprecision(17);
  return out;
}

inline std::string realization_column(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "r%03zu", i);
  return buf;
}

}  // namespace detail

template <typename Scalar>
void write_synth_trace_csv(const std::string& path,
                           const std::vector<SynthTraceRow<Scalar>>& trace) {
  auto out = detail::open_csv(path);
  out << "iteration,mmd2,length_scale_used\n";
  for (const auto& row : trace) {
    out << row.iteration << "," << row.mmd2 << "," << row.length_scale_used << "\n";
  }
}

template <typename Scalar>
void write_gen_trace_csv(const std::string& path, const std::vector<GenTraceRow<Scalar>>& trace) {
  auto out = detail::open_csv(path);
  out << "iteration,expected_loss,lambda_entropy\n";
  for (const auto& row : trace) {
    out << row.iteration << "," << row.expected_loss << "," << row.lambda_entropy << "\n";
  }
}

template <typename Scalar>
void write_mmd_csv(const std::string& path, const MmdResult<Scalar>& res) {
  auto out = detail::open_csv(path);
  out << "mmd2,gram_xx_mean,gram_yy_mean,gram_xy_mean,length_scale_used\n";
  out << res.value << "," << res.gram_xx_mean << "," << res.gram_yy_mean << ","
      << res.gram_xy_mean << "," << res.length_scale_used << "\n";
}

/// Writes histogram.csv, pf_x.csv and pf_y.csv into `dir`: one exemplar
/// column followed by one column per realization.
template <typename Scalar>
void write_stats_csv(const std::string& dir, const StatsReport<Scalar>& report) {
  const std::size_t n = report.histograms.size();

  auto hist = detail::open_csv(dir + "/histogram.csv");
  hist << "bin_left,bin_right,exemplar";
  for (std::size_t k = 0; k < n; ++k) hist << "," << detail::realization_column(k);
  hist << "\n";
  for (Index b = 0; b < report.exemplar_histogram.masses.size(); ++b) {
    hist << report.exemplar_histogram.edges(b) << "," << report.exemplar_histogram.edges(b + 1)
         << "," << report.exemplar_histogram.masses(b);
    for (std::size_t k = 0; k < n; ++k) hist << "," << report.histograms[k].masses(b);
    hist << "\n";
  }

  const auto write_pf = [&](const std::string& path, const PfCurve<Scalar>& exemplar,
                            const std::vector<PfCurve<Scalar>>& curves) {
    auto out = detail::open_csv(path);
    out << "lag,exemplar";
    for (std::size_t k = 0; k < curves.size(); ++k) out << "," << detail::realization_column(k);
    out << "\n";
    for (Index r = 0; r < exemplar.values.size(); ++r) {
      out << r << "," << exemplar.values(r);
      for (const auto& c : curves) out << "," << c.values(r);
      out << "\n";
    }
  };
  write_pf(dir + "/pf_x.csv", report.exemplar_pf_x, report.pf_x);
  write_pf(dir + "/pf_y.csv", report.exemplar_pf_y, report.pf_y);
}

}  // namespace patchmmd
