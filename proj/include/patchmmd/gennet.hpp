#pragma once

#include <cmath>
#include <cstdint>
#include <type_traits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "patchmmd/adam.hpp"
#include "patchmmd/encoders.hpp"
#include "patchmmd/entropy.hpp"
#include "patchmmd/grid.hpp"
#include "patchmmd/kernels.hpp"
#include "patchmmd/mmd.hpp"
#include "patchmmd/rng.hpp"
#include "patchmmd/synth.hpp"
#include "patchmmd/types.hpp"

namespace patchmmd {

/// Deterministic map from a standard-normal latent vector to an image in
/// (-1,1): dense ReLU stack with a tanh output layer.
template <typename Scalar>
struct GeneratorModel {
  Index latent_dim = 0;
  Index output_height = 0;
  Index output_width = 0;
  Mlp<Scalar> net;
};

/// Latent size heuristic: non-overlapping patch count times the encoding
/// size, capped at 256.
inline Index default_latent_dim(Index out_h, Index out_w, Index patch_size, Index code_dim) {
  const Index patches = std::max<Index>(1, out_h / patch_size) *
                        std::max<Index>(1, out_w / patch_size);
  return std::min<Index>(256, std::max<Index>(1, patches * code_dim));
}

template <typename Scalar>
GeneratorModel<Scalar> init_generator(Index latent_dim, const std::vector<Index>& hidden_dims,
                                      Index out_h, Index out_w, Rng& rng) {
  if (latent_dim < 1 || out_h < 1 || out_w < 1) {
    throw std::invalid_argument("init_generator: dims must be positive");
  }
  std::vector<Index> dims;
  dims.push_back(latent_dim);
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(out_h * out_w);
  std::vector<Activation> acts(dims.size() - 1, Activation::relu);
  acts.back() = Activation::tanh;

  GeneratorModel<Scalar> model;
  model.latent_dim = latent_dim;
  model.output_height = out_h;
  model.output_width = out_w;
  model.net = init_mlp<Scalar>(dims, acts, rng);
  return model;
}

/// Forward pass over a batch of latent columns; one flattened row-major image
/// per output column.
template <typename Scalar>
Matrix<Scalar> generate_batch(const GeneratorModel<Scalar>& model, const Matrix<Scalar>& z) {
  if (z.rows() != model.latent_dim) {
    throw std::invalid_argument("generate: latent length != latent_dim");
  }
  return mlp_forward(model.net, z);
}

template <typename Scalar>
Image<Scalar> generate(const GeneratorModel<Scalar>& model, const Vector<Scalar>& z) {
  const Matrix<Scalar> out = generate_batch(model, Matrix<Scalar>(z));
  return Eigen::Map<const Image<Scalar>>(out.data(), model.output_height, model.output_width);
}

/// Gradients of <generate(model, z), cotangent> with respect to all weights
/// and biases, in mlp_pack layout.
template <typename Scalar>
Vector<Scalar> generate_vjp(const GeneratorModel<Scalar>& model, const Vector<Scalar>& z,
                            const Image<Scalar>& cotangent) {
  if (z.size() != model.latent_dim) {
    throw std::invalid_argument("generate_vjp: latent length != latent_dim");
  }
  if (cotangent.rows() != model.output_height || cotangent.cols() != model.output_width) {
    throw std::invalid_argument("generate_vjp: cotangent shape mismatch");
  }
  MlpTrace<Scalar> trace;
  mlp_forward_trace(model.net, Matrix<Scalar>(z), trace);
  const Matrix<Scalar> cot =
      Eigen::Map<const Vector<Scalar>>(cotangent.data(), cotangent.size());
  return mlp_backward(model.net, trace, cot).param_grad;
}

/// Algorithm-style training settings; lambda trades sample quality against
/// diversity. k_nn <= 0 means floor(sqrt(batch_size)). pad < 0 means half a
/// patch width.
template <typename Scalar>
struct GenTrainConfig {
  Index batch_size = 4;
  Scalar lambda = Scalar(1e-8);
  Index iterations = 1;
  Index patches_per_image = 128;
  Index patch_size = 8;
  Index pad = -1;
  KernelSpec<Scalar> kernel;
  Encoder<Scalar> encoder;
  Scalar lr = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
  std::uint64_t seed = 0;
  Index k_nn = 0;
};

template <typename Scalar>
void validate(const GenTrainConfig<Scalar>& cfg) {
  if (cfg.batch_size < 2) throw std::invalid_argument("gen config: batch_size must be >= 2");
  if (cfg.lambda < Scalar(0)) throw std::invalid_argument("gen config: lambda must be >= 0");
  if (cfg.iterations < 1 || cfg.patches_per_image < 1 || cfg.patch_size < 1) {
    throw std::invalid_argument("gen config: sizes must be positive");
  }
  if (!(cfg.lr > Scalar(0))) throw std::invalid_argument("gen config: lr must be positive");
  if (cfg.k_nn > cfg.batch_size - 1) {
    throw std::invalid_argument("gen config: k_nn must be <= batch_size - 1");
  }
  validate_kernel(cfg.kernel);
}

template <typename Scalar>
struct GenTraceRow {
  Index iteration = 0;
  Scalar expected_loss = 0;    // (1/N) sum_i MMD^2[X~_i, X~_0]
  Scalar lambda_entropy = 0;   // (lambda/N) sum_i c log rho(X_i)
};

template <typename Scalar>
struct GenObjective {
  Scalar expected_loss = 0;
  Scalar lambda_entropy = 0;
  Vector<Scalar> param_grad;  // of expected_loss - lambda_entropy
};

/// One batch of the training objective and its parameter gradient, with the
/// randomness (latents, patch origins, exemplar samples) supplied by the
/// caller. Per-image pixel cotangents combine the scattered MMD patch
/// gradients with the entropy gradient before a single backward pass.
template <typename Scalar>
GenObjective<Scalar> gen_objective_grad(
    const GeneratorModel<Scalar>& model, const Matrix<Scalar>& latents,
    const std::vector<std::vector<std::array<Index, 2>>>& origins,
    const std::vector<PatchSample<Scalar>>& exemplar_patches, const KernelSpec<Scalar>& kernel,
    const Encoder<Scalar>& encoder, Scalar lambda, Index k_nn, Index patch_size, Index pad) {
  const Index batch = latents.cols();
  if (batch < 2) throw std::invalid_argument("gen_objective_grad: batch must be >= 2");
  if (origins.size() != static_cast<std::size_t>(batch) ||
      exemplar_patches.size() != static_cast<std::size_t>(batch)) {
    throw std::invalid_argument("gen_objective_grad: per-image inputs mismatch batch");
  }
  const Index h = model.output_height;
  const Index w = model.output_width;
  const Index pixels = h * w;

  MlpTrace<Scalar> trace;
  const Matrix<Scalar> flat_images = mlp_forward_trace(model.net, latents, trace);

  Matrix<Scalar> cotangents = Matrix<Scalar>::Zero(pixels, batch);
  CompensatedSum<Scalar> loss_sum;
  for (Index i = 0; i < batch; ++i) {
    const Image<Scalar> img =
        Eigen::Map<const Image<Scalar>>(flat_images.col(i).data(), h, w);
    const PatchSample<Scalar> xs = extract_patches_at(img, origins[i], patch_size, pad);
    const auto [res, patch_grads] = mmd2_grad(kernel, encoder, xs, exemplar_patches[i]);
    loss_sum.add(res.value);
    const Image<Scalar> dimg = scatter_add_patches(patch_grads, xs.origins, xs.padded_height,
                                                   xs.padded_width, pad, patch_size);
    cotangents.col(i) =
        Eigen::Map<const Vector<Scalar>>(dimg.data(), dimg.size()) / Scalar(batch);
  }

  GenObjective<Scalar> out;
  out.expected_loss = loss_sum.value() / Scalar(batch);
  if (lambda > Scalar(0)) {
    const auto [ent, ent_grads] = knn_entropy_grad(flat_images, k_nn);
    out.lambda_entropy = lambda * ent.rho_term;
    cotangents -= lambda * ent_grads;
  }
  out.param_grad = mlp_backward(model.net, trace, cotangents).param_grad;
  return out;
}

/// Generator training: per iteration, sample a latent batch, push it through
/// the generator, average the patch-MMD^2 against fresh exemplar patch
/// samples, subtract the tempered batch-entropy term, and Adam-update the
/// weights on the combined gradient. Deterministic given cfg.seed.
template <typename Scalar>
std::pair<GeneratorModel<Scalar>, std::vector<GenTraceRow<Scalar>>> train_generator(
    const Image<Scalar>& exemplar, GeneratorModel<Scalar> model,
    const GenTrainConfig<Scalar>& cfg) {
  validate(cfg);
  if (model.output_height < 1 || model.output_width < 1) {
    throw std::invalid_argument("train_generator: model has empty output");
  }
  if (cfg.encoder.input_dim != cfg.patch_size * cfg.patch_size) {
    throw std::invalid_argument("train_generator: encoder input_dim != patch_size^2");
  }
  const Index p = cfg.patch_size;
  const Index pad = effective_pad(cfg.pad, p);
  const Index padded_h = model.output_height + 2 * pad;
  const Index padded_w = model.output_width + 2 * pad;
  const Index k_nn =
      cfg.k_nn > 0 ? cfg.k_nn
                   : std::max<Index>(1, static_cast<Index>(std::floor(
                                            std::sqrt(static_cast<double>(cfg.batch_size)))));

  Rng rng = make_rng(cfg.seed);
  Vector<Scalar> params = mlp_pack(model.net);
  AdamState<Scalar> opt = make_adam<Scalar>(params.size(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
  std::vector<GenTraceRow<Scalar>> trace;
  trace.reserve(static_cast<std::size_t>(cfg.iterations));

  for (Index it = 0; it < cfg.iterations; ++it) {
    Matrix<Scalar> latents(model.latent_dim, cfg.batch_size);
    fill_normal(latents, rng);
    std::vector<std::vector<std::array<Index, 2>>> origins;
    std::vector<PatchSample<Scalar>> exemplar_samples;
    origins.reserve(static_cast<std::size_t>(cfg.batch_size));
    exemplar_samples.reserve(static_cast<std::size_t>(cfg.batch_size));
    for (Index i = 0; i < cfg.batch_size; ++i) {
      origins.push_back(draw_patch_origins(padded_h, padded_w, p, cfg.patches_per_image, rng));
      exemplar_samples.push_back(sample_patches(exemplar, cfg.patches_per_image, p, pad, rng));
    }
    const GenObjective<Scalar> obj =
        gen_objective_grad(model, latents, origins, exemplar_samples, cfg.kernel, cfg.encoder,
                           cfg.lambda, k_nn, p, pad);
    if (!std::isfinite(obj.expected_loss) || !std::isfinite(obj.lambda_entropy)) {
      throw std::runtime_error("train_generator: non-finite objective at iteration " +
                               std::to_string(it));
    }
    adam_step(opt, params, obj.param_grad);
    mlp_unpack(model.net, params);
    trace.push_back({it, obj.expected_loss, obj.lambda_entropy});
  }
  return {std::move(model), std::move(trace)};
}

/// Linear sweep of one latent coordinate from a fixed base latent.
template <typename Scalar>
struct InterpolateSpec {
  Index coordinate = 0;
  Scalar from = Scalar(-2);
  Scalar to = Scalar(2);
  Index steps = 8;
};

/// Draws `count` standard-normal latents and returns the generated grids; in
/// interpolate mode draws one base latent and sweeps the chosen coordinate,
/// returning `steps` grids.
template <typename Scalar>
std::vector<Image<Scalar>> sample(
    const GeneratorModel<Scalar>& model, Index count, Rng& rng,
    const std::optional<InterpolateSpec<std::type_identity_t<Scalar>>>& interpolate =
        std::nullopt) {
  std::vector<Image<Scalar>> out;
  if (interpolate) {
    const auto& spec = *interpolate;
    if (spec.coordinate < 0 || spec.coordinate >= model.latent_dim) {
      throw std::invalid_argument("sample: interpolation coordinate out of range");
    }
    if (spec.steps < 1) throw std::invalid_argument("sample: interpolation needs steps >= 1");
    Vector<Scalar> z(model.latent_dim);
    fill_normal(z, rng);
    out.reserve(static_cast<std::size_t>(spec.steps));
    for (Index s = 0; s < spec.steps; ++s) {
      const Scalar t = spec.steps == 1
                           ? Scalar(0)
                           : Scalar(s) / Scalar(spec.steps - 1);
      z(spec.coordinate) = spec.from + t * (spec.to - spec.from);
      out.push_back(generate(model, z));
    }
    return out;
  }
  if (count < 0) throw std::invalid_argument("sample: negative count");
  out.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    Vector<Scalar> z(model.latent_dim);
    fill_normal(z, rng);
    out.push_back(generate(model, z));
  }
  return out;
}

}  // namespace patchmmd
