#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "patchmmd/rng.hpp"
#include "patchmmd/types.hpp"

namespace patchmmd {

enum class Activation { identity, relu, leaky_relu, tanh };

inline constexpr double kLeakyReluSlope = 0.2;

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weight;  // out_dim x in_dim
  Vector<Scalar> bias;    // out_dim
  Activation activation = Activation::identity;
};

/// Fully-connected stack; forward/backward operate on column batches.
template <typename Scalar>
struct Mlp {
  std::vector<DenseLayer<Scalar>> layers;

  Index input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
  Index output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> apply_activation(Activation act, const Matrix<Scalar>& pre) {
  switch (act) {
    case Activation::identity:
      return pre;
    case Activation::relu:
      return pre.cwiseMax(Scalar(0));
    case Activation::leaky_relu:
      return pre.unaryExpr([](Scalar v) {
        return v >= Scalar(0) ? v : Scalar(kLeakyReluSlope) * v;
      });
    case Activation::tanh:
      return pre.array().tanh().matrix();
  }
  throw std::logic_error("apply_activation: unknown activation");
}

// Derivative as a function of pre- and post-activation values.
template <typename Scalar>
Matrix<Scalar> activation_derivative(Activation act, const Matrix<Scalar>& pre,
                                     const Matrix<Scalar>& post) {
  switch (act) {
    case Activation::identity:
      return Matrix<Scalar>::Ones(pre.rows(), pre.cols());
    case Activation::relu:
      return pre.unaryExpr([](Scalar v) { return v >= Scalar(0) ? Scalar(1) : Scalar(0); });
    case Activation::leaky_relu:
      return pre.unaryExpr([](Scalar v) {
        return v >= Scalar(0) ? Scalar(1) : Scalar(kLeakyReluSlope);
      });
    case Activation::tanh:
      return (Scalar(1) - post.array().square()).matrix();
  }
  throw std::logic_error("activation_derivative: unknown activation");
}

}  // namespace detail

/// Weights ~ N(0, 1/fan_in), zero biases; layer i maps dims[i] -> dims[i+1].
template <typename Scalar>
Mlp<Scalar> init_mlp(const std::vector<Index>& dims, const std::vector<Activation>& acts,
                     Rng& rng) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1) {
    throw std::invalid_argument("init_mlp: need dims.size() == acts.size() + 1 >= 2");
  }
  Mlp<Scalar> net;
  net.layers.resize(acts.size());
  for (std::size_t l = 0; l < acts.size(); ++l) {
    const Index fan_in = dims[l];
    const Index fan_out = dims[l + 1];
    if (fan_in < 1 || fan_out < 1) throw std::invalid_argument("init_mlp: dims must be positive");
    auto& layer = net.layers[l];
    layer.weight.resize(fan_out, fan_in);
    fill_normal(layer.weight, rng, Scalar(0), Scalar(1) / std::sqrt(Scalar(fan_in)));
    layer.bias = Vector<Scalar>::Zero(fan_out);
    layer.activation = acts[l];
  }
  return net;
}

template <typename Scalar>
Index mlp_param_count(const Mlp<Scalar>& net) {
  Index n = 0;
  for (const auto& l : net.layers) n += l.weight.size() + l.bias.size();
  return n;
}

/// Parameters packed layer by layer, weight (column-major) then bias.
template <typename Scalar>
Vector<Scalar> mlp_pack(const Mlp<Scalar>& net) {
  Vector<Scalar> flat(mlp_param_count(net));
  Index off = 0;
  for (const auto& l : net.layers) {
    flat.segment(off, l.weight.size()) =
        Eigen::Map<const Vector<Scalar>>(l.weight.data(), l.weight.size());
    off += l.weight.size();
    flat.segment(off, l.bias.size()) = l.bias;
    off += l.bias.size();
  }
  return flat;
}

template <typename Scalar>
void mlp_unpack(Mlp<Scalar>& net, const Vector<Scalar>& flat) {
  if (flat.size() != mlp_param_count(net)) throw std::invalid_argument("mlp_unpack: size mismatch");
  Index off = 0;
  for (auto& l : net.layers) {
    Eigen::Map<Vector<Scalar>>(l.weight.data(), l.weight.size()) =
        flat.segment(off, l.weight.size());
    off += l.weight.size();
    l.bias = flat.segment(off, l.bias.size());
    off += l.bias.size();
  }
}

/// Forward pass over a batch of column vectors.
template <typename Scalar>
Matrix<Scalar> mlp_forward(const Mlp<Scalar>& net, const Matrix<Scalar>& x) {
  if (x.rows() != net.input_dim()) throw std::invalid_argument("mlp_forward: input dim mismatch");
  Matrix<Scalar> a = x;
  for (const auto& l : net.layers) {
    Matrix<Scalar> pre = (l.weight * a).colwise() + l.bias;
    a = detail::apply_activation(l.activation, pre);
  }
  return a;
}

template <typename Scalar>
struct MlpTrace {
  std::vector<Matrix<Scalar>> pre;   // per layer
  std::vector<Matrix<Scalar>> post;  // post[0] is the input batch
};

template <typename Scalar>
Matrix<Scalar> mlp_forward_trace(const Mlp<Scalar>& net, const Matrix<Scalar>& x,
                                 MlpTrace<Scalar>& trace) {
  if (x.rows() != net.input_dim()) throw std::invalid_argument("mlp_forward: input dim mismatch");
  trace.pre.clear();
  trace.post.clear();
  trace.post.push_back(x);
  for (const auto& l : net.layers) {
    Matrix<Scalar> pre = (l.weight * trace.post.back()).colwise() + l.bias;
    trace.post.push_back(detail::apply_activation(l.activation, pre));
    trace.pre.push_back(std::move(pre));
  }
  return trace.post.back();
}

template <typename Scalar>
struct MlpBackward {
  Matrix<Scalar> input_grad;   // same shape as the input batch
  Vector<Scalar> param_grad;   // mlp_pack layout, summed over the batch
};

/// Reverse-mode pass: gradients of sum_b <output_b, cotangent_b>.
template <typename Scalar>
MlpBackward<Scalar> mlp_backward(const Mlp<Scalar>& net, const MlpTrace<Scalar>& trace,
                                 const Matrix<Scalar>& cotangent) {
  const std::size_t L = net.layers.size();
  if (trace.pre.size() != L || trace.post.size() != L + 1) {
    throw std::invalid_argument("mlp_backward: trace does not match network");
  }
  if (cotangent.rows() != net.output_dim() || cotangent.cols() != trace.post.back().cols()) {
    throw std::invalid_argument("mlp_backward: cotangent shape mismatch");
  }
  MlpBackward<Scalar> out;
  out.param_grad.resize(mlp_param_count(net));

  // per-layer flat offsets
  std::vector<Index> offsets(L);
  Index off = 0;
  for (std::size_t l = 0; l < L; ++l) {
    offsets[l] = off;
    off += net.layers[l].weight.size() + net.layers[l].bias.size();
  }

  Matrix<Scalar> u = cotangent;
  for (std::size_t l = L; l-- > 0;) {
    const auto& layer = net.layers[l];
    const Matrix<Scalar> du =
        u.cwiseProduct(detail::activation_derivative(layer.activation, trace.pre[l],
                                                     trace.post[l + 1]));
    const Matrix<Scalar> grad_w = du * trace.post[l].transpose();
    const Vector<Scalar> grad_b = du.rowwise().sum();
    out.param_grad.segment(offsets[l], grad_w.size()) =
        Eigen::Map<const Vector<Scalar>>(grad_w.data(), grad_w.size());
    out.param_grad.segment(offsets[l] + grad_w.size(), grad_b.size()) = grad_b;
    u = layer.weight.transpose() * du;
  }
  out.input_grad = std::move(u);
  return out;
}

/// Convenience wrapper when only input gradients are needed.
template <typename Scalar>
Matrix<Scalar> mlp_input_vjp(const Mlp<Scalar>& net, const Matrix<Scalar>& x,
                             const Matrix<Scalar>& cotangent) {
  MlpTrace<Scalar> trace;
  mlp_forward_trace(net, x, trace);
  return mlp_backward(net, trace, cotangent).input_grad;
}

}  // namespace patchmmd
