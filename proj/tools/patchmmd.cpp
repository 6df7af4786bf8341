// patchmmd: exemplar-based synthesis of geological textures by minimizing the
// maximum mean discrepancy between patch distributions, plus a generator
// trained with an entropy-regularized objective and spatial-statistics
// evaluation. See README.md for the command reference.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "patchmmd/config.hpp"
#include "patchmmd/csv.hpp"
#include "patchmmd/encoders.hpp"
#include "patchmmd/gennet.hpp"
#include "patchmmd/grid.hpp"
#include "patchmmd/kernels.hpp"
#include "patchmmd/mmd.hpp"
#include "patchmmd/pgm.hpp"
#include "patchmmd/serialize.hpp"
#include "patchmmd/stats.hpp"
#include "patchmmd/synth.hpp"

namespace {

using Scalar = double;
using patchmmd::Index;

// Removes everything written so far if the command fails partway.
class OutputTracker {
 public:
  std::string track(const std::string& path) {
    paths_.push_back(path);
    return path;
  }
  void discard_all() {
    for (const auto& p : paths_) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
  }

 private:
  std::vector<std::string> paths_;
};

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

patchmmd::RunConfig load_config(const CommonOpts& opts) {
  if (opts.config_path.empty()) throw std::runtime_error("--config is required");
  patchmmd::RunConfig cfg = patchmmd::load_run_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  return cfg;
}

patchmmd::Image<Scalar> build_exemplar(const patchmmd::RunConfig& cfg) {
  if (!cfg.exemplar) throw std::runtime_error("config: an exemplar section is required");
  if (cfg.exemplar->path) return patchmmd::load_pgm<Scalar>(*cfg.exemplar->path);
  const auto& pc = *cfg.exemplar->procedural;
  auto rng = patchmmd::make_rng(cfg.seed);
  return patchmmd::make_channel_exemplar<Scalar>(pc.height, pc.width,
                                                 Scalar(pc.channel_fraction), rng);
}

patchmmd::Encoder<Scalar> build_encoder(const patchmmd::RunConfig& cfg,
                                        const patchmmd::Image<Scalar>& fit_source) {
  const auto& e = cfg.encoder;
  if (e.path) return patchmmd::load_encoder<Scalar>(*e.path);
  const Index p = cfg.patch.size;
  const Index input_dim = p * p;
  auto rng = patchmmd::make_rng(cfg.seed);
  if (e.kind == "identity") return patchmmd::make_identity_encoder<Scalar>(input_dim);
  if (e.kind == "random_projection") {
    return patchmmd::fit_random_projection<Scalar>(input_dim, e.code_dim, rng);
  }
  const Index pad = patchmmd::effective_pad(cfg.patch.pad, p);
  const auto patches =
      patchmmd::sample_patches(fit_source, e.fit_patches, p, pad, rng);
  if (e.kind == "pca") return patchmmd::fit_pca(patches, e.code_dim);
  patchmmd::AutoencoderConfig<Scalar> acfg;
  acfg.hidden_dim = e.hidden_dim;
  acfg.code_dim = e.code_dim;
  acfg.iterations = e.iterations;
  acfg.batch_size = e.batch_size;
  acfg.learning_rate = Scalar(e.learning_rate);
  acfg.noise_sigma = Scalar(e.noise_sigma);
  acfg.augment_flips = e.augment_flips;
  return patchmmd::train_autoencoder(patches, acfg, rng);
}

void write_effective_config(OutputTracker& outputs, const patchmmd::RunConfig& cfg,
                            const std::string& beside) {
  const std::filesystem::path p(beside);
  std::filesystem::path cfg_path = p.parent_path() / (p.stem().string() + "_config.json");
  patchmmd::detail::save_json_file(outputs.track(cfg_path.string()),
                                   patchmmd::run_config_to_json(cfg));
}

std::string numbered_path(const std::string& prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%03zu.pgm", i);
  return prefix + buf;
}

int cmd_make_exemplar(const CommonOpts& opts, const std::string& out) {
  OutputTracker outputs;
  try {
    patchmmd::RunConfig cfg = load_config(opts);
    if (!cfg.exemplar || !cfg.exemplar->procedural) {
      throw std::runtime_error("make-exemplar needs an exemplar.procedural config section");
    }
    const patchmmd::Image<Scalar> exemplar = build_exemplar(cfg);
    patchmmd::save_pgm(outputs.track(out), exemplar);
    write_effective_config(outputs, cfg, out);
    return 0;
  } catch (const std::exception& e) {
    outputs.discard_all();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_fit_encoder(const CommonOpts& opts, const std::string& out) {
  OutputTracker outputs;
  try {
    patchmmd::RunConfig cfg = load_config(opts);
    const patchmmd::Image<Scalar> exemplar = build_exemplar(cfg);
    const auto encoder = build_encoder(cfg, exemplar);
    patchmmd::save_encoder(outputs.track(out), encoder);
    write_effective_config(outputs, cfg, out);
    return 0;
  } catch (const std::exception& e) {
    outputs.discard_all();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_mmd(const CommonOpts& opts, const std::string& path_a, const std::string& path_b,
            const std::string& out_csv) {
  OutputTracker outputs;
  try {
    patchmmd::RunConfig cfg = load_config(opts);
    const auto a = patchmmd::load_pgm<Scalar>(path_a);
    const auto b = patchmmd::load_pgm<Scalar>(path_b);

    // Encoders that need data are fitted on the config exemplar when present,
    // otherwise on the first input.
    patchmmd::Encoder<Scalar> encoder =
        cfg.exemplar ? build_encoder(cfg, build_exemplar(cfg)) : build_encoder(cfg, a);

    // Both sides draw patches from the same seed, so identical inputs yield
    // identical samples and an exact zero.
    const Index p = cfg.patch.size;
    const Index pad = patchmmd::effective_pad(cfg.patch.pad, p);
    auto rng_a = patchmmd::make_rng(cfg.seed);
    auto rng_b = patchmmd::make_rng(cfg.seed);
    const auto sample_a = patchmmd::sample_patches(a, cfg.patch.count, p, pad, rng_a);
    const auto sample_b = patchmmd::sample_patches(b, cfg.patch.count, p, pad, rng_b);
    const auto res = patchmmd::mmd2(cfg.kernel, encoder, sample_a, sample_b);

    std::printf("%.17g\n", res.value);
    if (!out_csv.empty()) {
      patchmmd::write_mmd_csv(outputs.track(out_csv), res);
      write_effective_config(outputs, cfg, out_csv);
    }
    return 0;
  } catch (const std::exception& e) {
    outputs.discard_all();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_synth_opt(const CommonOpts& opts, const std::string& out) {
  OutputTracker outputs;
  try {
    patchmmd::RunConfig cfg = load_config(opts);
    const patchmmd::Image<Scalar> exemplar = build_exemplar(cfg);
    patchmmd::SynthConfig<Scalar> scfg;
    scfg.out_height = cfg.synth.height;
    scfg.out_width = cfg.synth.width;
    scfg.patch_size = cfg.patch.size;
    scfg.patches_per_iter = cfg.patch.count;
    scfg.iterations = cfg.synth.iterations;
    scfg.pad = cfg.patch.pad;
    scfg.kernel = cfg.kernel;
    scfg.encoder = build_encoder(cfg, exemplar);
    scfg.lr = Scalar(cfg.synth.lr);
    scfg.beta1 = Scalar(cfg.synth.beta1);
    scfg.beta2 = Scalar(cfg.synth.beta2);
    scfg.eps = Scalar(cfg.synth.eps);
    scfg.init_sigma = Scalar(cfg.synth.init_sigma);
    scfg.seed = cfg.seed;

    const auto [image, trace] = patchmmd::synthesize(exemplar, scfg);
    patchmmd::save_pgm(outputs.track(out), image);
    const std::filesystem::path p(out);
    const std::string trace_path =
        (p.parent_path() / (p.stem().string() + "_trace.csv")).string();
    patchmmd::write_synth_trace_csv(outputs.track(trace_path), trace);
    write_effective_config(outputs, cfg, out);
    return 0;
  } catch (const std::exception& e) {
    outputs.discard_all();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_train_gen(const CommonOpts& opts, const std::string& out) {
  OutputTracker outputs;
  try {
    patchmmd::RunConfig cfg = load_config(opts);
    const patchmmd::Image<Scalar> exemplar = build_exemplar(cfg);
    patchmmd::GenTrainConfig<Scalar> gcfg;
    gcfg.batch_size = cfg.generator.batch_size;
    gcfg.lambda = Scalar(cfg.generator.lambda);
    gcfg.iterations = cfg.generator.iterations;
    gcfg.patches_per_image = cfg.generator.patches_per_image;
    gcfg.patch_size = cfg.patch.size;
    gcfg.pad = cfg.patch.pad;
    gcfg.kernel = cfg.kernel;
    gcfg.encoder = build_encoder(cfg, exemplar);
    gcfg.lr = Scalar(cfg.generator.lr);
    gcfg.seed = cfg.seed;
    gcfg.k_nn = cfg.generator.k_nn;

    const Index latent_dim =
        cfg.generator.latent_dim > 0
            ? cfg.generator.latent_dim
            : patchmmd::default_latent_dim(cfg.generator.height, cfg.generator.width,
                                           cfg.patch.size, gcfg.encoder.code_dim);
    auto rng = patchmmd::make_rng(cfg.seed);
    patchmmd::GeneratorModel<Scalar> model = patchmmd::init_generator<Scalar>(
        latent_dim, cfg.generator.hidden_dims, cfg.generator.height, cfg.generator.width, rng);

    auto [trained, trace] = patchmmd::train_generator(exemplar, std::move(model), gcfg);
    patchmmd::save_generator(outputs.track(out), trained);
    const std::filesystem::path p(out);
    const std::string trace_path =
        (p.parent_path() / (p.stem().string() + "_trace.csv")).string();
    patchmmd::write_gen_trace_csv(outputs.track(trace_path), trace);
    write_effective_config(outputs, cfg, out);
    return 0;
  } catch (const std::exception& e) {
    outputs.discard_all();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_sample(const CommonOpts& opts, const std::string& model_path, Index count,
               const std::string& out_prefix, const std::string& interpolate_arg) {
  OutputTracker outputs;
  try {
    patchmmd::RunConfig cfg;
    if (!opts.config_path.empty()) cfg = load_config(opts);
    if (opts.seed) cfg.seed = *opts.seed;
    const std::uint64_t seed = cfg.seed;
    const auto model = patchmmd::load_generator<Scalar>(model_path);

    std::optional<patchmmd::InterpolateSpec<Scalar>> interp;
    if (!interpolate_arg.empty()) {
      patchmmd::InterpolateSpec<Scalar> spec;
      long coord = 0, steps = 0;
      double from = 0, to = 0;
      if (std::sscanf(interpolate_arg.c_str(), "%ld,%lf,%lf,%ld", &coord, &from, &to, &steps) !=
          4) {
        throw std::runtime_error("--interpolate expects coord,from,to,steps");
      }
      spec.coordinate = coord;
      spec.from = Scalar(from);
      spec.to = Scalar(to);
      spec.steps = steps;
      interp = spec;
    }

    auto rng = patchmmd::make_rng(seed);
    const auto grids = patchmmd::sample(model, count, rng, interp);
    for (std::size_t i = 0; i < grids.size(); ++i) {
      patchmmd::save_pgm(outputs.track(numbered_path(out_prefix, i)), grids[i]);
    }
    patchmmd::detail::save_json_file(outputs.track(out_prefix + "_config.json"),
                                     patchmmd::run_config_to_json(cfg));
    return 0;
  } catch (const std::exception& e) {
    outputs.discard_all();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_eval(const CommonOpts& opts, const std::string& exemplar_path,
             const std::vector<std::string>& realization_paths, const std::string& out_dir) {
  OutputTracker outputs;
  try {
    patchmmd::RunConfig cfg = load_config(opts);
    patchmmd::Image<Scalar> exemplar;
    if (!exemplar_path.empty()) {
      exemplar = patchmmd::load_pgm<Scalar>(exemplar_path);
    } else {
      exemplar = build_exemplar(cfg);
    }
    std::vector<patchmmd::Image<Scalar>> realizations;
    realizations.reserve(realization_paths.size());
    for (const auto& p : realization_paths) realizations.push_back(patchmmd::load_pgm<Scalar>(p));

    auto rng = patchmmd::make_rng(cfg.seed);
    const auto report =
        patchmmd::eval_report(exemplar, realizations, cfg.eval.crop_size, cfg.patch.size,
                              cfg.eval.max_lag, cfg.eval.bins, rng);
    std::filesystem::create_directories(out_dir);
    outputs.track(out_dir + "/histogram.csv");
    outputs.track(out_dir + "/pf_x.csv");
    outputs.track(out_dir + "/pf_y.csv");
    patchmmd::write_stats_csv(out_dir, report);
    patchmmd::detail::save_json_file(outputs.track(out_dir + "/effective_config.json"),
                                     patchmmd::run_config_to_json(cfg));
    return 0;
  } catch (const std::exception& e) {
    outputs.discard_all();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exemplar-based texture synthesis by patch-distribution MMD"};
  app.require_subcommand(1);

  CommonOpts common;
  const auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Run configuration (JSON)");
    sub->add_option("--seed", common.seed, "Override the config seed");
  };

  std::string out, out_dir, out_prefix, model_path, exemplar_path, interpolate_arg;
  std::string input_a, input_b;
  Index count = 16;
  std::vector<std::string> realization_paths;

  auto* mk = app.add_subcommand("make-exemplar", "Write a procedural channel exemplar as PGM");
  add_common(mk);
  mk->add_option("--out", out, "Output PGM path")->required();

  auto* fe = app.add_subcommand("fit-encoder", "Fit a patch encoder and save it as JSON");
  add_common(fe);
  fe->add_option("--out", out, "Output encoder path (JSON)")->required();

  auto* mm = app.add_subcommand("mmd", "MMD^2 between patch samples of two images");
  add_common(mm);
  mm->add_option("a", input_a, "First PGM image")->required();
  mm->add_option("b", input_b, "Second PGM image")->required();
  mm->add_option("--out", out, "Optional CSV output path");

  auto* so = app.add_subcommand("synth-opt", "Optimization-based synthesis");
  add_common(so);
  so->add_option("--out", out, "Output PGM path")->required();

  auto* tg = app.add_subcommand("train-gen", "Train the generator (Algorithm 1)");
  add_common(tg);
  tg->add_option("--out", out, "Output model path (JSON)")->required();

  auto* sa = app.add_subcommand("sample", "Sample grids from a trained generator");
  add_common(sa);
  sa->add_option("--model", model_path, "Generator model (JSON)")->required();
  sa->add_option("--count", count, "Number of samples");
  sa->add_option("--out-prefix", out_prefix, "Output path prefix")->required();
  sa->add_option("--interpolate", interpolate_arg,
                 "coord,from,to,steps: sweep one latent coordinate");

  auto* ev = app.add_subcommand("eval", "Spatial-statistics report (histogram + PF CSVs)");
  add_common(ev);
  ev->add_option("--exemplar", exemplar_path, "Exemplar PGM (defaults to config exemplar)");
  ev->add_option("--out-dir", out_dir, "Output directory for the CSVs")->required();
  ev->add_option("realizations", realization_paths, "Realization PGMs")->required();

  CLI11_PARSE(app, argc, argv);

  if (mk->parsed()) return cmd_make_exemplar(common, out);
  if (fe->parsed()) return cmd_fit_encoder(common, out);
  if (mm->parsed()) return cmd_mmd(common, input_a, input_b, out);
  if (so->parsed()) return cmd_synth_opt(common, out);
  if (tg->parsed()) return cmd_train_gen(common, out);
  if (sa->parsed()) return cmd_sample(common, model_path, count, out_prefix, interpolate_arg);
  if (ev->parsed()) return cmd_eval(common, exemplar_path, realization_paths, out_dir);
  return 1;
}
