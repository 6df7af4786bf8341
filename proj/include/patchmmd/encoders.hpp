#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "patchmmd/adam.hpp"
#include "patchmmd/grid.hpp"
#include "patchmmd/mlp.hpp"
#include "patchmmd/rng.hpp"
#include "patchmmd/types.hpp"

namespace patchmmd {

enum class EncoderKind { identity, random_projection, pca, autoencoder };

inline std::string encoder_kind_name(EncoderKind k) {
  switch (k) {
    case EncoderKind::identity: return "identity";
    case EncoderKind::random_projection: return "random_projection";
    case EncoderKind::pca: return "pca";
    case EncoderKind::autoencoder: return "autoencoder";
  }
  return "?";
}

/// Dimension-reducing patch map h with a vector-Jacobian product.
/// identity / random_projection / pca are (affine-)linear; autoencoder is the
/// trained encoder half of a dense autoencoder.
template <typename Scalar>
struct Encoder {
  EncoderKind kind = EncoderKind::identity;
  Index input_dim = 0;
  Index code_dim = 0;
  Matrix<Scalar> projection;     // random_projection / pca: code_dim x input_dim
  Vector<Scalar> mean;           // pca only
  Mlp<Scalar> net;               // autoencoder only
  Scalar retained_variance = 0;  // pca diagnostic
  Scalar final_train_loss = 0;   // autoencoder diagnostic
};

template <typename Scalar>
Encoder<Scalar> make_identity_encoder(Index dim) {
  if (dim < 1) throw std::invalid_argument("make_identity_encoder: dim must be positive");
  Encoder<Scalar> enc;
  enc.kind = EncoderKind::identity;
  enc.input_dim = dim;
  enc.code_dim = dim;
  return enc;
}

/// i.i.d. N(0, 1/code_dim) projection entries; touches no training data.
template <typename Scalar>
Encoder<Scalar> fit_random_projection(Index input_dim, Index code_dim, Rng& rng) {
  if (input_dim < 1 || code_dim < 1) {
    throw std::invalid_argument("fit_random_projection: dims must be positive");
  }
  if (code_dim > input_dim) {
    throw std::invalid_argument("fit_random_projection: code_dim exceeds input_dim");
  }
  Encoder<Scalar> enc;
  enc.kind = EncoderKind::random_projection;
  enc.input_dim = input_dim;
  enc.code_dim = code_dim;
  enc.projection.resize(code_dim, input_dim);
  fill_normal(enc.projection, rng, Scalar(0), Scalar(1) / std::sqrt(Scalar(code_dim)));
  return enc;
}

/// PCA of the data columns: centers by the mean, keeps the top code_dim
/// principal directions in descending eigenvalue order, each signed so its
/// largest-magnitude entry is positive. Uses the Gram trick when the data
/// dimension exceeds the sample count.
template <typename Scalar>
Encoder<Scalar> fit_pca(const Matrix<Scalar>& data, Index code_dim) {
  const Index dim = data.rows();
  const Index n = data.cols();
  if (n < 2) throw std::invalid_argument("fit_pca: need at least 2 samples");
  if (code_dim < 1 || code_dim > std::min(dim, n)) {
    throw std::invalid_argument("fit_pca: code_dim must be in [1, min(dim, samples)]");
  }

  Encoder<Scalar> enc;
  enc.kind = EncoderKind::pca;
  enc.input_dim = dim;
  enc.code_dim = code_dim;
  enc.mean = data.rowwise().mean();
  Matrix<Scalar> centered = data.colwise() - enc.mean;
  if (!(centered.squaredNorm() > Scalar(0))) {
    throw std::runtime_error("fit_pca: zero variance data");
  }

  Vector<Scalar> eigvals;        // descending, top code_dim
  Matrix<Scalar> directions;     // code_dim x dim, rows orthonormal
  Scalar total_variance = 0;
  const Scalar denom = Scalar(n - 1);

  if (dim <= n) {
    const Matrix<Scalar> cov = centered * centered.transpose() / denom;
    total_variance = cov.trace();
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(cov);
    if (es.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigensolver failed");
    eigvals.resize(code_dim);
    directions.resize(code_dim, dim);
    for (Index k = 0; k < code_dim; ++k) {
      eigvals(k) = es.eigenvalues()(dim - 1 - k);  // SelfAdjoint sorts ascending
      directions.row(k) = es.eigenvectors().col(dim - 1 - k).transpose();
    }
  } else {
    const Matrix<Scalar> gram = centered.transpose() * centered / denom;
    total_variance = gram.trace();
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(gram);
    if (es.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigensolver failed");
    eigvals.resize(code_dim);
    directions.resize(code_dim, dim);
    const Scalar lambda_max = es.eigenvalues()(n - 1);
    for (Index k = 0; k < code_dim; ++k) {
      const Scalar lambda = es.eigenvalues()(n - 1 - k);
      if (!(lambda > Scalar(1e-12) * std::max(lambda_max, Scalar(1e-300)))) {
        throw std::runtime_error("fit_pca: data rank below requested code_dim");
      }
      eigvals(k) = lambda;
      directions.row(k) =
          (centered * es.eigenvectors().col(n - 1 - k) / std::sqrt(lambda * denom)).transpose();
    }
  }

  if (!(total_variance > Scalar(0))) throw std::runtime_error("fit_pca: zero variance data");

  // fix signs: largest-magnitude entry of each direction positive
  for (Index k = 0; k < code_dim; ++k) {
    Index arg = 0;
    directions.row(k).cwiseAbs().maxCoeff(&arg);
    if (directions(k, arg) < Scalar(0)) directions.row(k) = -directions.row(k);
  }

  enc.projection = directions;
  enc.retained_variance = eigvals.sum() / total_variance;
  return enc;
}

template <typename Scalar>
Encoder<Scalar> fit_pca(const PatchSample<Scalar>& patches, Index code_dim) {
  return fit_pca(patches.patches, code_dim);
}

template <typename Scalar>
struct AutoencoderConfig {
  Index hidden_dim = 64;
  Index code_dim = 8;
  Index iterations = 2000;
  Index batch_size = 32;
  Scalar learning_rate = Scalar(1e-3);
  Scalar noise_sigma = Scalar(0.05);
  bool augment_flips = true;
};

template <typename Scalar>
void validate(const AutoencoderConfig<Scalar>& cfg) {
  if (cfg.hidden_dim < 1 || cfg.code_dim < 1 || cfg.iterations < 1 || cfg.batch_size < 1) {
    throw std::invalid_argument("autoencoder config: sizes must be positive");
  }
  if (!(cfg.learning_rate > Scalar(0))) {
    throw std::invalid_argument("autoencoder config: learning_rate must be positive");
  }
  if (cfg.noise_sigma < Scalar(0)) {
    throw std::invalid_argument("autoencoder config: noise_sigma must be >= 0");
  }
}

/// Horizontal flip (mirror columns) of a flattened row-major p x p patch.
template <typename Scalar>
Vector<Scalar> flip_patch_h(const Vector<Scalar>& patch, Index p) {
  if (patch.size() != p * p) throw std::invalid_argument("flip_patch_h: bad patch size");
  Vector<Scalar> out(p * p);
  for (Index r = 0; r < p; ++r)
    for (Index c = 0; c < p; ++c) out(r * p + c) = patch(r * p + (p - 1 - c));
  return out;
}

/// Vertical flip (mirror rows).
template <typename Scalar>
Vector<Scalar> flip_patch_v(const Vector<Scalar>& patch, Index p) {
  if (patch.size() != p * p) throw std::invalid_argument("flip_patch_v: bad patch size");
  Vector<Scalar> out(p * p);
  for (Index r = 0; r < p; ++r)
    for (Index c = 0; c < p; ++c) out(r * p + c) = patch((p - 1 - r) * p + c);
  return out;
}

/// Trains a dense autoencoder (encoder: affine, leaky-ReLU, affine, tanh;
/// decoder: affine, ReLU, affine, tanh) with Adam on per-element mean squared
/// reconstruction error, augmenting each batch sample by random flips and
/// additive Gaussian noise. Returns the encoder half.
template <typename Scalar>
Encoder<Scalar> train_autoencoder(const PatchSample<Scalar>& patches,
                                  const AutoencoderConfig<Scalar>& cfg, Rng& rng,
                                  std::vector<Scalar>* loss_trace = nullptr) {
  validate(cfg);
  const Index n = patches.count();
  const Index p = patches.patch_size;
  const Index dim = patches.patches.rows();
  if (n < cfg.batch_size) {
    throw std::invalid_argument("train_autoencoder: fewer patches than batch_size");
  }

  Mlp<Scalar> enc_net = init_mlp<Scalar>({dim, cfg.hidden_dim, cfg.code_dim},
                                         {Activation::leaky_relu, Activation::tanh}, rng);
  Mlp<Scalar> dec_net = init_mlp<Scalar>({cfg.code_dim, cfg.hidden_dim, dim},
                                         {Activation::relu, Activation::tanh}, rng);
  const Index enc_count = mlp_param_count(enc_net);
  Vector<Scalar> params(enc_count + mlp_param_count(dec_net));
  params << mlp_pack(enc_net), mlp_pack(dec_net);
  AdamState<Scalar> opt = make_adam<Scalar>(params.size(), cfg.learning_rate);

  std::bernoulli_distribution coin(0.5);
  Matrix<Scalar> batch(dim, cfg.batch_size);
  std::normal_distribution<Scalar> noise(Scalar(0), Scalar(1));

  for (Index it = 0; it < cfg.iterations; ++it) {
    for (Index b = 0; b < cfg.batch_size; ++b) {
      Vector<Scalar> x = patches.patches.col(uniform_index(rng, n));
      if (cfg.augment_flips) {
        if (coin(rng)) x = flip_patch_h(x, p);
        if (coin(rng)) x = flip_patch_v(x, p);
      }
      if (cfg.noise_sigma > Scalar(0)) {
        for (Index i = 0; i < dim; ++i) x(i) += cfg.noise_sigma * noise(rng);
      }
      batch.col(b) = x;
    }

    MlpTrace<Scalar> enc_trace, dec_trace;
    const Matrix<Scalar> codes = mlp_forward_trace(enc_net, batch, enc_trace);
    const Matrix<Scalar> recon = mlp_forward_trace(dec_net, codes, dec_trace);
    const Matrix<Scalar> residual = recon - batch;
    const Scalar loss = residual.squaredNorm() / Scalar(residual.size());
    if (!std::isfinite(loss)) {
      throw std::runtime_error("train_autoencoder: non-finite loss at iteration " +
                               std::to_string(it));
    }
    if (loss_trace) loss_trace->push_back(loss);

    const Matrix<Scalar> cot = Scalar(2) / Scalar(residual.size()) * residual;
    const MlpBackward<Scalar> dec_back = mlp_backward(dec_net, dec_trace, cot);
    const MlpBackward<Scalar> enc_back = mlp_backward(enc_net, enc_trace, dec_back.input_grad);
    Vector<Scalar> grads(params.size());
    grads << enc_back.param_grad, dec_back.param_grad;
    adam_step(opt, params, grads);
    mlp_unpack(enc_net, Vector<Scalar>(params.head(enc_count)));
    mlp_unpack(dec_net, Vector<Scalar>(params.tail(params.size() - enc_count)));
  }

  // final loss on the raw (unaugmented) patch set
  const Matrix<Scalar> recon = mlp_forward(dec_net, mlp_forward(enc_net, patches.patches));
  Encoder<Scalar> enc;
  enc.kind = EncoderKind::autoencoder;
  enc.input_dim = dim;
  enc.code_dim = cfg.code_dim;
  enc.net = std::move(enc_net);
  enc.final_train_loss =
      (recon - patches.patches).squaredNorm() / Scalar(patches.patches.size());
  return enc;
}

template <typename Scalar>
Matrix<Scalar> encode_batch(const Encoder<Scalar>& enc, const Matrix<Scalar>& inputs) {
  if (inputs.rows() != enc.input_dim) {
    throw std::invalid_argument("encode: input length != encoder input_dim");
  }
  switch (enc.kind) {
    case EncoderKind::identity:
      return inputs;
    case EncoderKind::random_projection:
      return enc.projection * inputs;
    case EncoderKind::pca:
      return enc.projection * (inputs.colwise() - enc.mean);
    case EncoderKind::autoencoder:
      return mlp_forward(enc.net, inputs);
  }
  throw std::logic_error("encode: unknown encoder kind");
}

template <typename Scalar>
Vector<Scalar> encode(const Encoder<Scalar>& enc, const Vector<Scalar>& patch) {
  return encode_batch(enc, Matrix<Scalar>(patch)).col(0);
}

/// J^T * cotangent for each column, where J is the Jacobian of encode at the
/// matching input column.
template <typename Scalar>
Matrix<Scalar> encode_vjp_batch(const Encoder<Scalar>& enc, const Matrix<Scalar>& inputs,
                                const Matrix<Scalar>& cotangents) {
  if (inputs.rows() != enc.input_dim) {
    throw std::invalid_argument("encode_vjp: input length != encoder input_dim");
  }
  if (cotangents.rows() != enc.code_dim || cotangents.cols() != inputs.cols()) {
    throw std::invalid_argument("encode_vjp: cotangent shape mismatch");
  }
  switch (enc.kind) {
    case EncoderKind::identity:
      return cotangents;
    case EncoderKind::random_projection:
    case EncoderKind::pca:
      return enc.projection.transpose() * cotangents;
    case EncoderKind::autoencoder:
      return mlp_input_vjp(enc.net, inputs, cotangents);
  }
  throw std::logic_error("encode_vjp: unknown encoder kind");
}

template <typename Scalar>
Vector<Scalar> encode_vjp(const Encoder<Scalar>& enc, const Vector<Scalar>& patch,
                          const Vector<Scalar>& cotangent) {
  return encode_vjp_batch(enc, Matrix<Scalar>(patch), Matrix<Scalar>(cotangent)).col(0);
}

}  // namespace patchmmd
