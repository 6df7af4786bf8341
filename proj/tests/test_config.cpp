#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "patchmmd/config.hpp"

using namespace patchmmd;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("a full config parses with the documented keys") {
  const auto j = nlohmann::json::parse(R"({
    "seed": 7,
    "exemplar": {"procedural": {"height": 64, "width": 64, "channel_fraction": 0.3}},
    "patch": {"size": 16, "count": 128, "pad": -1},
    "encoder": {"kind": "pca", "code_dim": 16, "fit_patches": 512},
    "kernel": {"family": "rational_quadratic", "alpha": 0.5,
               "length_scale_mode": "median_heuristic"},
    "synth": {"height": 64, "width": 64, "iterations": 2000, "lr": 0.001},
    "generator": {"height": 32, "width": 32, "batch_size": 4, "lambda": 1e-7,
                  "iterations": 5000, "hidden_dims": [128, 256]},
    "eval": {"crop_size": 64, "max_lag": 16, "bins": 50}
  })");
  const RunConfig cfg = run_config_from_json(j);
  CHECK(cfg.seed == 7);
  REQUIRE(cfg.exemplar.has_value());
  REQUIRE(cfg.exemplar->procedural.has_value());
  CHECK(cfg.exemplar->procedural->channel_fraction == 0.3);
  CHECK(cfg.patch.size == 16);
  CHECK(cfg.encoder.kind == "pca");
  CHECK(cfg.kernel.family == KernelFamily::rational_quadratic);
  CHECK(cfg.kernel.length_scale_mode == LengthScaleMode::median_heuristic);
  CHECK(cfg.synth.iterations == 2000);
  CHECK(cfg.generator.lambda == 1e-7);
  CHECK(cfg.generator.hidden_dims == std::vector<Index>{128, 256});
  CHECK(cfg.eval.bins == 50);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_WITH_AS(run_config_from_json(nlohmann::json::parse(R"({"sede": 1})")),
                       doctest::Contains("unknown key"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      run_config_from_json(nlohmann::json::parse(R"({"patch": {"size": 8, "stride": 2}})")),
      doctest::Contains("unknown key"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      run_config_from_json(
          nlohmann::json::parse(R"({"exemplar": {"procedural": {"hieght": 4}}})")),
      doctest::Contains("unknown key"), std::runtime_error);
}

TEST_CASE("referenced paths must exist at load time") {
  const auto j =
      nlohmann::json::parse(R"({"exemplar": {"path": "definitely_missing_exemplar.pgm"}})");
  CHECK_THROWS_WITH_AS(run_config_from_json(j), doctest::Contains("does not exist"),
                       std::runtime_error);
}

TEST_CASE("exemplar section needs exactly one source") {
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"exemplar": {}})")),
                  std::runtime_error);
}

TEST_CASE("bad enum values are rejected") {
  CHECK_THROWS_AS(
      run_config_from_json(nlohmann::json::parse(R"({"kernel": {"family": "cubic"}})")),
      std::runtime_error);
  CHECK_THROWS_AS(
      run_config_from_json(nlohmann::json::parse(R"({"kernel": {"length_scale_mode": "auto"}})")),
      std::runtime_error);
  CHECK_THROWS_AS(
      run_config_from_json(nlohmann::json::parse(R"({"encoder": {"kind": "vgg"}})")),
      std::runtime_error);
}

TEST_CASE("load_run_config reads files and reports parse errors") {
  const auto good = write_temp("patchmmd_cfg_good.json", R"({"seed": 3})");
  CHECK(load_run_config(good.string()).seed == 3);
  const auto bad = write_temp("patchmmd_cfg_bad.json", "{oops");
  CHECK_THROWS_WITH_AS(load_run_config(bad.string()), doctest::Contains("parse error"),
                       std::runtime_error);
  std::filesystem::remove(good);
  std::filesystem::remove(bad);
}

TEST_CASE("effective config serialization round trips") {
  RunConfig cfg;
  cfg.seed = 42;
  ExemplarConfig ex;
  ProceduralExemplarConfig pc;
  pc.height = 48;
  pc.width = 40;
  pc.channel_fraction = 0.25;
  ex.procedural = pc;
  cfg.exemplar = ex;
  cfg.kernel.length_scale_mode = LengthScaleMode::median_heuristic;
  cfg.generator.lambda = 1e-6;

  const auto j = run_config_to_json(cfg);
  const RunConfig back = run_config_from_json(j);
  CHECK(back.seed == 42);
  CHECK(back.exemplar->procedural->width == 40);
  CHECK(back.kernel.length_scale_mode == LengthScaleMode::median_heuristic);
  CHECK(back.generator.lambda == 1e-6);
  CHECK(run_config_to_json(back) == j);
}

}  // TEST_SUITE
