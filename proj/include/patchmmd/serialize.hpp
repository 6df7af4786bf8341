#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "patchmmd/encoders.hpp"
#include "patchmmd/gennet.hpp"
#include "patchmmd/mlp.hpp"

namespace patchmmd {

namespace detail {

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "leaky_relu") return Activation::leaky_relu;
  if (s == "tanh") return Activation::tanh;
  throw std::runtime_error("deserialize: unknown activation '" + s + "'");
}

template <typename Scalar>
nlohmann::json matrix_to_json(const Matrix<Scalar>& m) {
  // flat column-major (Eigen storage order)
  return std::vector<Scalar>(m.data(), m.data() + m.size());
}

template <typename Scalar>
nlohmann::json vector_to_json(const Vector<Scalar>& v) {
  return std::vector<Scalar>(v.data(), v.data() + v.size());
}

template <typename Scalar>
Matrix<Scalar> matrix_from_json(const nlohmann::json& j, Index rows, Index cols) {
  const auto vals = j.get<std::vector<Scalar>>();
  if (static_cast<Index>(vals.size()) != rows * cols) {
    throw std::runtime_error("deserialize: parameter array length mismatch");
  }
  return Eigen::Map<const Matrix<Scalar>>(vals.data(), rows, cols);
}

template <typename Scalar>
Vector<Scalar> vector_from_json(const nlohmann::json& j, Index size) {
  const auto vals = j.get<std::vector<Scalar>>();
  if (static_cast<Index>(vals.size()) != size) {
    throw std::runtime_error("deserialize: parameter array length mismatch");
  }
  return Eigen::Map<const Vector<Scalar>>(vals.data(), size);
}

template <typename Scalar>
nlohmann::json mlp_to_json(const Mlp<Scalar>& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers) {
    layers.push_back({{"out_dim", l.weight.rows()},
                      {"in_dim", l.weight.cols()},
                      {"activation", activation_name(l.activation)},
                      {"weight", matrix_to_json(l.weight)},
                      {"bias", vector_to_json(l.bias)}});
  }
  return layers;
}

template <typename Scalar>
Mlp<Scalar> mlp_from_json(const nlohmann::json& j) {
  Mlp<Scalar> net;
  for (const auto& lj : j) {
    DenseLayer<Scalar> layer;
    const Index out_dim = lj.at("out_dim").get<Index>();
    const Index in_dim = lj.at("in_dim").get<Index>();
    layer.weight = matrix_from_json<Scalar>(lj.at("weight"), out_dim, in_dim);
    layer.bias = vector_from_json<Scalar>(lj.at("bias"), out_dim);
    layer.activation = activation_from_name(lj.at("activation").get<std::string>());
    net.layers.push_back(std::move(layer));
  }
  return net;
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

inline void save_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace detail

template <typename Scalar>
nlohmann::json encoder_to_json(const Encoder<Scalar>& enc) {
  nlohmann::json j;
  j["type"] = "encoder";
  j["kind"] = encoder_kind_name(enc.kind);
  j["input_dim"] = enc.input_dim;
  j["code_dim"] = enc.code_dim;
  switch (enc.kind) {
    case EncoderKind::identity:
      break;
    case EncoderKind::random_projection:
      j["projection"] = detail::matrix_to_json(enc.projection);
      break;
    case EncoderKind::pca:
      j["projection"] = detail::matrix_to_json(enc.projection);
      j["mean"] = detail::vector_to_json(enc.mean);
      j["retained_variance"] = enc.retained_variance;
      break;
    case EncoderKind::autoencoder:
      j["layers"] = detail::mlp_to_json(enc.net);
      j["final_train_loss"] = enc.final_train_loss;
      break;
  }
  return j;
}

template <typename Scalar>
Encoder<Scalar> encoder_from_json(const nlohmann::json& j) {
  if (j.value("type", "") != "encoder") throw std::runtime_error("not an encoder document");
  Encoder<Scalar> enc;
  const std::string kind = j.at("kind").get<std::string>();
  enc.input_dim = j.at("input_dim").get<Index>();
  enc.code_dim = j.at("code_dim").get<Index>();
  if (kind == "identity") {
    enc.kind = EncoderKind::identity;
  } else if (kind == "random_projection") {
    enc.kind = EncoderKind::random_projection;
    enc.projection = detail::matrix_from_json<Scalar>(j.at("projection"), enc.code_dim,
                                                      enc.input_dim);
  } else if (kind == "pca") {
    enc.kind = EncoderKind::pca;
    enc.projection = detail::matrix_from_json<Scalar>(j.at("projection"), enc.code_dim,
                                                      enc.input_dim);
    enc.mean = detail::vector_from_json<Scalar>(j.at("mean"), enc.input_dim);
    enc.retained_variance = j.value("retained_variance", Scalar(0));
  } else if (kind == "autoencoder") {
    enc.kind = EncoderKind::autoencoder;
    enc.net = detail::mlp_from_json<Scalar>(j.at("layers"));
    enc.final_train_loss = j.value("final_train_loss", Scalar(0));
    if (enc.net.input_dim() != enc.input_dim || enc.net.output_dim() != enc.code_dim) {
      throw std::runtime_error("encoder document: layer dims do not match input/code dims");
    }
  } else {
    throw std::runtime_error("encoder document: unknown kind '" + kind + "'");
  }
  return enc;
}

template <typename Scalar>
void save_encoder(const std::string& path, const Encoder<Scalar>& enc) {
  detail::save_json_file(path, encoder_to_json(enc));
}

template <typename Scalar>
Encoder<Scalar> load_encoder(const std::string& path) {
  return encoder_from_json<Scalar>(detail::load_json_file(path));
}

template <typename Scalar>
nlohmann::json generator_to_json(const GeneratorModel<Scalar>& model) {
  nlohmann::json j;
  j["type"] = "generator";
  j["latent_dim"] = model.latent_dim;
  j["output_height"] = model.output_height;
  j["output_width"] = model.output_width;
  j["layers"] = detail::mlp_to_json(model.net);
  return j;
}

template <typename Scalar>
GeneratorModel<Scalar> generator_from_json(const nlohmann::json& j) {
  if (j.value("type", "") != "generator") throw std::runtime_error("not a generator document");
  GeneratorModel<Scalar> model;
  model.latent_dim = j.at("latent_dim").get<Index>();
  model.output_height = j.at("output_height").get<Index>();
  model.output_width = j.at("output_width").get<Index>();
  model.net = detail::mlp_from_json<Scalar>(j.at("layers"));
  if (model.net.input_dim() != model.latent_dim ||
      model.net.output_dim() != model.output_height * model.output_width) {
    throw std::runtime_error("generator document: layer dims do not match latent/output dims");
  }
  return model;
}

template <typename Scalar>
void save_generator(const std::string& path, const GeneratorModel<Scalar>& model) {
  detail::save_json_file(path, generator_to_json(model));
}

template <typename Scalar>
GeneratorModel<Scalar> load_generator(const std::string& path) {
  return generator_from_json<Scalar>(detail::load_json_file(path));
}

}  // namespace patchmmd
