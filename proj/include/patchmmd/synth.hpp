#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "patchmmd/adam.hpp"
#include "patchmmd/encoders.hpp"
#include "patchmmd/grid.hpp"
#include "patchmmd/kernels.hpp"
#include "patchmmd/mmd.hpp"
#include "patchmmd/rng.hpp"
#include "patchmmd/types.hpp"

namespace patchmmd {

/// Optimization-based synthesis settings. `pad < 0` means half a patch width.
template <typename Scalar>
struct SynthConfig {
  Index out_height = 64;
  Index out_width = 64;
  Index patch_size = 16;
  Index patches_per_iter = 128;
  Index iterations = 2000;
  Index pad = -1;
  KernelSpec<Scalar> kernel;
  Encoder<Scalar> encoder;
  Scalar lr = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
  Scalar init_sigma = Scalar(0.5);
  std::uint64_t seed = 0;
};

inline Index effective_pad(Index pad, Index patch_size) {
  return pad < 0 ? patch_size / 2 : pad;
}

template <typename Scalar>
void validate(const SynthConfig<Scalar>& cfg) {
  if (cfg.out_height < 1 || cfg.out_width < 1) {
    throw std::invalid_argument("synth config: output dimensions must be positive");
  }
  if (cfg.patch_size < 1) throw std::invalid_argument("synth config: patch_size must be positive");
  if (cfg.patches_per_iter < 1) {
    throw std::invalid_argument("synth config: patches_per_iter must be >= 1");
  }
  if (cfg.iterations < 1) throw std::invalid_argument("synth config: iterations must be >= 1");
  const Index pad = effective_pad(cfg.pad, cfg.patch_size);
  if (cfg.patch_size > std::min(cfg.out_height, cfg.out_width) + 2 * pad) {
    throw std::invalid_argument("synth config: patch larger than padded output");
  }
  if (cfg.encoder.input_dim != cfg.patch_size * cfg.patch_size) {
    throw std::invalid_argument("synth config: encoder input_dim != patch_size^2");
  }
  validate_kernel(cfg.kernel);
}

template <typename Scalar>
struct SynthTraceRow {
  Index iteration = 0;
  Scalar mmd2 = 0;
  Scalar length_scale_used = 0;
};

template <typename Scalar>
struct SynthObjective {
  Scalar value = 0;
  Scalar length_scale_used = 0;
  Image<Scalar> grad;  // with respect to the pre-tanh pixels
};

/// MMD^2 between patches of tanh(xprime) at the given (padded-grid) origins
/// and the exemplar patch sample, plus its gradient with respect to xprime.
/// Gradient path: kernel -> encoder VJP -> scatter-add adjoint -> dtanh.
template <typename Scalar>
SynthObjective<Scalar> synth_objective_grad(const Image<Scalar>& xprime,
                                            const std::vector<std::array<Index, 2>>& origins,
                                            Index patch_size, Index pad,
                                            const PatchSample<Scalar>& exemplar_patches,
                                            const KernelSpec<Scalar>& kernel,
                                            const Encoder<Scalar>& encoder) {
  const Image<Scalar> x = xprime.array().tanh().matrix();
  const PatchSample<Scalar> xs = extract_patches_at(x, origins, patch_size, pad);
  const auto [res, patch_grads] = mmd2_grad(kernel, encoder, xs, exemplar_patches);
  const Image<Scalar> dx = scatter_add_patches(patch_grads, xs.origins, xs.padded_height,
                                               xs.padded_width, pad, patch_size);
  SynthObjective<Scalar> out;
  out.value = res.value;
  out.length_scale_used = res.length_scale_used;
  out.grad = dx.cwiseProduct((Scalar(1) - x.array().square()).matrix());
  return out;
}

/// Minimizes MMD^2 between patch samples of the synthesized image and the
/// exemplar by Adam over tanh-reparametrized pixels. Patch origins on both
/// sides are redrawn every iteration. Deterministic given cfg.seed.
template <typename Scalar>
std::pair<Image<Scalar>, std::vector<SynthTraceRow<Scalar>>> synthesize(
    const Image<Scalar>& exemplar, const SynthConfig<Scalar>& cfg) {
  validate(cfg);
  if (exemplar.rows() < 1 || exemplar.cols() < 1) {
    throw std::invalid_argument("synthesize: empty exemplar");
  }
  const Index p = cfg.patch_size;
  const Index pad = effective_pad(cfg.pad, p);

  Rng rng = make_rng(cfg.seed);
  Image<Scalar> xprime(cfg.out_height, cfg.out_width);
  fill_normal(xprime, rng, Scalar(0), cfg.init_sigma);

  AdamState<Scalar> opt =
      make_adam<Scalar>(xprime.size(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
  std::vector<SynthTraceRow<Scalar>> trace;
  trace.reserve(static_cast<std::size_t>(cfg.iterations));

  const Index padded_h = cfg.out_height + 2 * pad;
  const Index padded_w = cfg.out_width + 2 * pad;
  for (Index it = 0; it < cfg.iterations; ++it) {
    const auto origins = draw_patch_origins(padded_h, padded_w, p, cfg.patches_per_iter, rng);
    const PatchSample<Scalar> es = sample_patches(exemplar, cfg.patches_per_iter, p, pad, rng);
    const SynthObjective<Scalar> obj =
        synth_objective_grad(xprime, origins, p, pad, es, cfg.kernel, cfg.encoder);
    if (!std::isfinite(obj.value)) {
      throw std::runtime_error("synthesize: non-finite loss at iteration " + std::to_string(it));
    }
    Eigen::Map<Vector<Scalar>> params(xprime.data(), xprime.size());
    adam_step(opt, params, Eigen::Map<const Vector<Scalar>>(obj.grad.data(), obj.grad.size()));
    trace.push_back({it, obj.value, obj.length_scale_used});
  }
  return {xprime.array().tanh().matrix(), std::move(trace)};
}

}  // namespace patchmmd
