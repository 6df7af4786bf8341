#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "patchmmd/encoders.hpp"
#include "patchmmd/kernels.hpp"
#include "patchmmd/types.hpp"

namespace patchmmd {

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                       const std::string& section) {
  if (!j.is_object()) throw std::runtime_error("config: section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::runtime_error("config: unknown key '" + key + "' in section '" + section + "'");
    }
  }
}

inline void check_path_exists(const std::string& path, const std::string& what) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("config: " + what + " path does not exist: " + path);
  }
}

}  // namespace detail

struct ProceduralExemplarConfig {
  Index height = 64;
  Index width = 64;
  double channel_fraction = 0.3;
};

struct ExemplarConfig {
  std::optional<std::string> path;
  std::optional<ProceduralExemplarConfig> procedural;
};

struct PatchConfig {
  Index size = 16;
  Index count = 128;  // patches drawn per estimator evaluation
  Index pad = -1;     // -1: half a patch width
};

struct EncoderConfig {
  std::string kind = "pca";
  std::optional<std::string> path;  // load a fitted encoder instead of fitting
  Index code_dim = 16;
  Index fit_patches = 512;
  // autoencoder fit settings
  Index hidden_dim = 64;
  Index iterations = 2000;
  Index batch_size = 32;
  double learning_rate = 1e-3;
  double noise_sigma = 0.05;
  bool augment_flips = true;
};

struct SynthSectionConfig {
  Index height = 64;
  Index width = 64;
  Index iterations = 2000;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double init_sigma = 0.5;
};

struct GeneratorSectionConfig {
  Index latent_dim = 0;  // 0: latent size heuristic
  std::vector<Index> hidden_dims = {256};
  Index height = 32;
  Index width = 32;
  Index batch_size = 4;
  double lambda = 1e-8;
  Index iterations = 5000;
  Index patches_per_image = 128;
  double lr = 1e-3;
  Index k_nn = 0;  // 0: floor(sqrt(batch_size))
};

struct EvalSectionConfig {
  Index crop_size = 64;
  Index max_lag = 16;
  Index bins = 50;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::optional<ExemplarConfig> exemplar;
  PatchConfig patch;
  EncoderConfig encoder;
  KernelSpec<double> kernel;
  SynthSectionConfig synth;
  GeneratorSectionConfig generator;
  EvalSectionConfig eval;
};

inline KernelFamily kernel_family_from_name(const std::string& s) {
  if (s == "rational_quadratic") return KernelFamily::rational_quadratic;
  if (s == "gaussian_rbf") return KernelFamily::gaussian_rbf;
  if (s == "linear") return KernelFamily::linear;
  if (s == "polynomial2") return KernelFamily::polynomial2;
  throw std::runtime_error("config: unknown kernel family '" + s + "'");
}

inline RunConfig run_config_from_json(const nlohmann::json& j,
                                      const std::string& base_dir = ".") {
  detail::check_keys(
      j, {"seed", "exemplar", "patch", "encoder", "kernel", "synth", "generator", "eval"},
      "top level");
  RunConfig cfg;
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();

  const auto resolve = [&base_dir](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (std::filesystem::path(base_dir) / fp).string();
  };

  if (j.contains("exemplar")) {
    const auto& je = j.at("exemplar");
    detail::check_keys(je, {"path", "procedural"}, "exemplar");
    ExemplarConfig ex;
    if (je.contains("path")) {
      ex.path = resolve(je.at("path").get<std::string>());
      detail::check_path_exists(*ex.path, "exemplar");
    }
    if (je.contains("procedural")) {
      const auto& jp = je.at("procedural");
      detail::check_keys(jp, {"height", "width", "channel_fraction"}, "exemplar.procedural");
      ProceduralExemplarConfig pc;
      if (jp.contains("height")) pc.height = jp.at("height").get<Index>();
      if (jp.contains("width")) pc.width = jp.at("width").get<Index>();
      if (jp.contains("channel_fraction")) {
        pc.channel_fraction = jp.at("channel_fraction").get<double>();
      }
      ex.procedural = pc;
    }
    if (ex.path && ex.procedural) {
      throw std::runtime_error("config: exemplar must give either path or procedural, not both");
    }
    if (!ex.path && !ex.procedural) {
      throw std::runtime_error("config: exemplar section needs a path or a procedural spec");
    }
    cfg.exemplar = ex;
  }

  if (j.contains("patch")) {
    const auto& jp = j.at("patch");
    detail::check_keys(jp, {"size", "count", "pad"}, "patch");
    if (jp.contains("size")) cfg.patch.size = jp.at("size").get<Index>();
    if (jp.contains("count")) cfg.patch.count = jp.at("count").get<Index>();
    if (jp.contains("pad")) cfg.patch.pad = jp.at("pad").get<Index>();
  }

  if (j.contains("encoder")) {
    const auto& je = j.at("encoder");
    detail::check_keys(je,
                       {"kind", "path", "code_dim", "fit_patches", "hidden_dim", "iterations",
                        "batch_size", "learning_rate", "noise_sigma", "augment_flips"},
                       "encoder");
    auto& e = cfg.encoder;
    if (je.contains("kind")) e.kind = je.at("kind").get<std::string>();
    if (e.kind != "identity" && e.kind != "random_projection" && e.kind != "pca" &&
        e.kind != "autoencoder") {
      throw std::runtime_error("config: unknown encoder kind '" + e.kind + "'");
    }
    if (je.contains("path")) {
      e.path = resolve(je.at("path").get<std::string>());
      detail::check_path_exists(*e.path, "encoder");
    }
    if (je.contains("code_dim")) e.code_dim = je.at("code_dim").get<Index>();
    if (je.contains("fit_patches")) e.fit_patches = je.at("fit_patches").get<Index>();
    if (je.contains("hidden_dim")) e.hidden_dim = je.at("hidden_dim").get<Index>();
    if (je.contains("iterations")) e.iterations = je.at("iterations").get<Index>();
    if (je.contains("batch_size")) e.batch_size = je.at("batch_size").get<Index>();
    if (je.contains("learning_rate")) e.learning_rate = je.at("learning_rate").get<double>();
    if (je.contains("noise_sigma")) e.noise_sigma = je.at("noise_sigma").get<double>();
    if (je.contains("augment_flips")) e.augment_flips = je.at("augment_flips").get<bool>();
  }

  if (j.contains("kernel")) {
    const auto& jk = j.at("kernel");
    detail::check_keys(jk, {"family", "alpha", "length_scale", "gamma", "length_scale_mode"},
                       "kernel");
    if (jk.contains("family")) {
      cfg.kernel.family = kernel_family_from_name(jk.at("family").get<std::string>());
    }
    if (jk.contains("alpha")) cfg.kernel.alpha = jk.at("alpha").get<double>();
    if (jk.contains("length_scale")) cfg.kernel.length_scale = jk.at("length_scale").get<double>();
    if (jk.contains("gamma")) cfg.kernel.gamma = jk.at("gamma").get<double>();
    if (jk.contains("length_scale_mode")) {
      const std::string mode = jk.at("length_scale_mode").get<std::string>();
      if (mode == "fixed") {
        cfg.kernel.length_scale_mode = LengthScaleMode::fixed;
      } else if (mode == "median_heuristic") {
        cfg.kernel.length_scale_mode = LengthScaleMode::median_heuristic;
      } else {
        throw std::runtime_error("config: unknown length_scale_mode '" + mode + "'");
      }
    }
  }

  if (j.contains("synth")) {
    const auto& js = j.at("synth");
    detail::check_keys(
        js, {"height", "width", "iterations", "lr", "beta1", "beta2", "eps", "init_sigma"},
        "synth");
    auto& s = cfg.synth;
    if (js.contains("height")) s.height = js.at("height").get<Index>();
    if (js.contains("width")) s.width = js.at("width").get<Index>();
    if (js.contains("iterations")) s.iterations = js.at("iterations").get<Index>();
    if (js.contains("lr")) s.lr = js.at("lr").get<double>();
    if (js.contains("beta1")) s.beta1 = js.at("beta1").get<double>();
    if (js.contains("beta2")) s.beta2 = js.at("beta2").get<double>();
    if (js.contains("eps")) s.eps = js.at("eps").get<double>();
    if (js.contains("init_sigma")) s.init_sigma = js.at("init_sigma").get<double>();
  }

  if (j.contains("generator")) {
    const auto& jg = j.at("generator");
    detail::check_keys(jg,
                       {"latent_dim", "hidden_dims", "height", "width", "batch_size", "lambda",
                        "iterations", "patches_per_image", "lr", "k_nn"},
                       "generator");
    auto& g = cfg.generator;
    if (jg.contains("latent_dim")) g.latent_dim = jg.at("latent_dim").get<Index>();
    if (jg.contains("hidden_dims")) g.hidden_dims = jg.at("hidden_dims").get<std::vector<Index>>();
    if (jg.contains("height")) g.height = jg.at("height").get<Index>();
    if (jg.contains("width")) g.width = jg.at("width").get<Index>();
    if (jg.contains("batch_size")) g.batch_size = jg.at("batch_size").get<Index>();
    if (jg.contains("lambda")) g.lambda = jg.at("lambda").get<double>();
    if (jg.contains("iterations")) g.iterations = jg.at("iterations").get<Index>();
    if (jg.contains("patches_per_image")) {
      g.patches_per_image = jg.at("patches_per_image").get<Index>();
    }
    if (jg.contains("lr")) g.lr = jg.at("lr").get<double>();
    if (jg.contains("k_nn")) g.k_nn = jg.at("k_nn").get<Index>();
  }

  if (j.contains("eval")) {
    const auto& je = j.at("eval");
    detail::check_keys(je, {"crop_size", "max_lag", "bins"}, "eval");
    if (je.contains("crop_size")) cfg.eval.crop_size = je.at("crop_size").get<Index>();
    if (je.contains("max_lag")) cfg.eval.max_lag = je.at("max_lag").get<Index>();
    if (je.contains("bins")) cfg.eval.bins = je.at("bins").get<Index>();
  }

  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config: parse error in " + path + ": " + e.what());
  }
  return run_config_from_json(j, std::filesystem::path(path).parent_path().string());
}

/// Fully-resolved snapshot of a RunConfig (all defaults made explicit).
inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  if (cfg.exemplar) {
    nlohmann::json je;
    if (cfg.exemplar->path) je["path"] = *cfg.exemplar->path;
    if (cfg.exemplar->procedural) {
      je["procedural"] = {{"height", cfg.exemplar->procedural->height},
                          {"width", cfg.exemplar->procedural->width},
                          {"channel_fraction", cfg.exemplar->procedural->channel_fraction}};
    }
    j["exemplar"] = je;
  }
  j["patch"] = {{"size", cfg.patch.size}, {"count", cfg.patch.count}, {"pad", cfg.patch.pad}};
  {
    nlohmann::json je = {{"kind", cfg.encoder.kind},
                         {"code_dim", cfg.encoder.code_dim},
                         {"fit_patches", cfg.encoder.fit_patches},
                         {"hidden_dim", cfg.encoder.hidden_dim},
                         {"iterations", cfg.encoder.iterations},
                         {"batch_size", cfg.encoder.batch_size},
                         {"learning_rate", cfg.encoder.learning_rate},
                         {"noise_sigma", cfg.encoder.noise_sigma},
                         {"augment_flips", cfg.encoder.augment_flips}};
    if (cfg.encoder.path) je["path"] = *cfg.encoder.path;
    j["encoder"] = je;
  }
  j["kernel"] = {{"family", kernel_family_name(cfg.kernel.family)},
                 {"alpha", cfg.kernel.alpha},
                 {"length_scale", cfg.kernel.length_scale},
                 {"gamma", cfg.kernel.gamma},
                 {"length_scale_mode",
                  cfg.kernel.length_scale_mode == LengthScaleMode::fixed ? "fixed"
                                                                         : "median_heuristic"}};
  j["synth"] = {{"height", cfg.synth.height},     {"width", cfg.synth.width},
                {"iterations", cfg.synth.iterations}, {"lr", cfg.synth.lr},
                {"beta1", cfg.synth.beta1},       {"beta2", cfg.synth.beta2},
                {"eps", cfg.synth.eps},           {"init_sigma", cfg.synth.init_sigma}};
  j["generator"] = {{"latent_dim", cfg.generator.latent_dim},
                    {"hidden_dims", cfg.generator.hidden_dims},
                    {"height", cfg.generator.height},
                    {"width", cfg.generator.width},
                    {"batch_size", cfg.generator.batch_size},
                    {"lambda", cfg.generator.lambda},
                    {"iterations", cfg.generator.iterations},
                    {"patches_per_image", cfg.generator.patches_per_image},
                    {"lr", cfg.generator.lr},
                    {"k_nn", cfg.generator.k_nn}};
  j["eval"] = {{"crop_size", cfg.eval.crop_size},
               {"max_lag", cfg.eval.max_lag},
               {"bins", cfg.eval.bins}};
  return j;
}

}  // namespace patchmmd
