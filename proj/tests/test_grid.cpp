#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "patchmmd/grid.hpp"
#include "patchmmd/pgm.hpp"
#include "testutil.hpp"

using namespace patchmmd;
using testutil::Img;
using testutil::Vec;

TEST_SUITE("grid") {

TEST_CASE("reflect_pad mirrors without repeating the edge pixel") {
  // row [a, b, c] padded by one becomes [b, a, b, c, b]
  Img g(3, 3);
  g << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9;
  const Img padded = reflect_pad(g, 1);
  REQUIRE(padded.rows() == 5);
  REQUIRE(padded.cols() == 5);
  CHECK(padded(2, 0) == 0.5);
  CHECK(padded(2, 1) == 0.4);
  CHECK(padded(2, 2) == 0.5);
  CHECK(padded(2, 3) == 0.6);
  CHECK(padded(2, 4) == 0.5);
  // columns mirror the same way
  CHECK(padded(0, 2) == 0.5);
  CHECK(padded(1, 2) == 0.2);
  CHECK(padded(4, 2) == 0.5);
  // a width-1 axis leaves no interior to reflect
  Img row(1, 3);
  row << 0.1, 0.2, 0.3;
  CHECK_THROWS_AS(reflect_pad(row, 1), std::invalid_argument);
}

TEST_CASE("reflect_pad width 0 is the identity") {
  auto rng = make_rng(1);
  const Img g = testutil::random_image(rng, 5, 7);
  CHECK(reflect_pad(g, 0) == g);
}

TEST_CASE("reflect_pad by half a patch width doubles a 64x64 grid") {
  auto rng = make_rng(2);
  const Img g = testutil::random_image(rng, 64, 64);
  const Img padded = reflect_pad(g, 32);
  REQUIRE(padded.rows() == 128);
  REQUIRE(padded.cols() == 128);
  CHECK(padded.block(32, 32, 64, 64) == g);
}

TEST_CASE("reflect_pad rejects widths reaching a grid dimension") {
  Img g = Img::Zero(4, 6);
  CHECK_THROWS_AS(reflect_pad(g, 4), std::invalid_argument);
  CHECK_THROWS_AS(reflect_pad(g, 7), std::invalid_argument);
}

TEST_CASE("extract_patch flattens row-major") {
  Img g(2, 2);
  g << 1, 2, 3, 4;
  const Vec whole = extract_patch(g, 0, 0, 2);
  REQUIRE(whole.size() == 4);
  CHECK(whole(0) == 1);
  CHECK(whole(1) == 2);
  CHECK(whole(2) == 3);
  CHECK(whole(3) == 4);
  const Vec single = extract_patch(g, 0, 1, 1);
  REQUIRE(single.size() == 1);
  CHECK(single(0) == 2);
}

TEST_CASE("extract_patch at exemplar scale gives p*p entries") {
  auto rng = make_rng(3);
  const Img g = make_channel_exemplar<double>(250, 250, 0.3, rng);
  CHECK(extract_patch(g, 100, 50, 64).size() == 4096);
}

TEST_CASE("extract_patch rejects out-of-bounds windows") {
  Img g = Img::Zero(4, 4);
  CHECK_THROWS_AS(extract_patch(g, 3, 0, 2), std::invalid_argument);
  CHECK_THROWS_AS(extract_patch(g, -1, 0, 2), std::invalid_argument);
  CHECK_THROWS_AS(extract_patch(g, 0, 0, 5), std::invalid_argument);
}

TEST_CASE("extracted patches equal a nested-loop read of the padded grid") {
  auto rng = make_rng(4);
  const Img g = testutil::random_image(rng, 9, 11);
  const Index p = 4, pad = 2;
  const auto sample = sample_patches(g, 20, p, pad, rng);
  const Img padded = reflect_pad(g, pad);
  REQUIRE(sample.count() == 20);
  for (Index k = 0; k < sample.count(); ++k) {
    const auto [r0, c0] = sample.origins[static_cast<std::size_t>(k)];
    for (Index r = 0; r < p; ++r) {
      for (Index c = 0; c < p; ++c) {
        CHECK(sample.patches(r * p + c, k) == padded(r0 + r, c0 + c));
      }
    }
  }
}

TEST_CASE("sample_patches covers the full origin lattice of the padded grid") {
  auto rng = make_rng(5);
  const Img g = testutil::random_image(rng, 256, 256);
  const auto sample = sample_patches(g, 5000, 64, 32, rng);
  REQUIRE(sample.padded_height == 320);
  REQUIRE(sample.padded_width == 320);
  Index max_r = 0, max_c = 0, min_r = 1000, min_c = 1000;
  for (const auto& o : sample.origins) {
    max_r = std::max(max_r, o[0]);
    max_c = std::max(max_c, o[1]);
    min_r = std::min(min_r, o[0]);
    min_c = std::min(min_c, o[1]);
    CHECK(o[0] >= 0);
    CHECK(o[0] <= 256);
    CHECK(o[1] >= 0);
    CHECK(o[1] <= 256);
  }
  // with 5000 draws over 257 positions both extremes show up
  CHECK(min_r == 0);
  CHECK(min_c == 0);
  CHECK(max_r == 256);
  CHECK(max_c == 256);
}

TEST_CASE("sample_patches with one origin returns the whole grid") {
  auto rng = make_rng(6);
  const Img g = testutil::random_image(rng, 5, 5);
  const auto sample = sample_patches(g, 1, 5, 0, rng);
  REQUIRE(sample.count() == 1);
  CHECK(sample.origins[0][0] == 0);
  CHECK(sample.origins[0][1] == 0);
  CHECK(sample.patches.col(0) == extract_patch(g, 0, 0, 5));
}

TEST_CASE("sample_patches is reproducible and supports count 0") {
  auto rng_a = make_rng(7);
  auto rng_b = make_rng(7);
  const Img g = testutil::random_image(rng_a, 12, 12);
  testutil::random_image(rng_b, 12, 12);  // keep streams aligned
  const auto a = sample_patches(g, 10, 4, 2, rng_a);
  const auto b = sample_patches(g, 10, 4, 2, rng_b);
  CHECK(a.origins == b.origins);
  CHECK(a.patches == b.patches);

  auto rng = make_rng(8);
  const auto empty = sample_patches(g, 0, 4, 2, rng);
  CHECK(empty.count() == 0);
  CHECK(empty.origins.empty());
}

TEST_CASE("sample_patches rejects patches larger than the padded grid") {
  auto rng = make_rng(9);
  const Img g = testutil::random_image(rng, 6, 6);
  CHECK_THROWS_AS(sample_patches(g, 1, 9, 1, rng), std::invalid_argument);
}

TEST_CASE("scatter_add_patches identity and additivity") {
  // single patch covering the whole unpadded grid
  Matrix<double> ones = Matrix<double>::Ones(9, 1);
  const Img g1 = scatter_add_patches(ones, {{0, 0}}, 3, 3, 0, 3);
  CHECK(g1 == Img::Ones(3, 3));

  // two 1x1 patches at the same pixel
  Matrix<double> grads(1, 2);
  grads << 1, 2;
  const Img g2 = scatter_add_patches(grads, {{1, 2}, {1, 2}}, 3, 4, 0, 1);
  CHECK(g2(1, 2) == 3);
  CHECK(g2.sum() == 3);
}

TEST_CASE("scatter_add_patches is the adjoint of pad-then-extract") {
  auto rng = make_rng(10);
  for (int trial = 0; trial < 8; ++trial) {
    const Index h = 5 + uniform_index(rng, 4);
    const Index w = 5 + uniform_index(rng, 4);
    const Index p = 2 + uniform_index(rng, 3);
    const Index pad = uniform_index(rng, std::min(h, w) - 1);
    const Img v = testutil::random_image(rng, h, w);
    const auto sample = sample_patches(v, 6, p, pad, rng);
    const Matrix<double> u = testutil::random_matrix(rng, p * p, 6);

    double forward = 0;  // <P(v), u>
    for (Index k = 0; k < 6; ++k) forward += sample.patches.col(k).dot(u.col(k));
    const Img vt = scatter_add_patches(u, sample.origins, sample.padded_height,
                                       sample.padded_width, pad, p);
    const double adjoint = (v.array() * vt.array()).sum();  // <v, P^T(u)>
    CHECK(std::abs(forward - adjoint) <= 1e-12 * std::max(1.0, std::abs(forward)));
  }
}

TEST_CASE("scatter_add_patches validates shapes") {
  Matrix<double> grads = Matrix<double>::Zero(4, 1);
  CHECK_THROWS_AS(scatter_add_patches(grads, {{0, 0}}, 4, 4, 0, 3), std::invalid_argument);
  CHECK_THROWS_AS(scatter_add_patches(grads, {{0, 0}, {1, 1}}, 4, 4, 0, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(scatter_add_patches(grads, {{3, 3}}, 4, 4, 0, 2), std::invalid_argument);
}

TEST_CASE("make_channel_exemplar hits the target fraction and is seeded") {
  auto rng = make_rng(7);
  const Img ex = make_channel_exemplar<double>(64, 64, 0.3, rng);
  double plus = 0;
  for (Index i = 0; i < ex.rows(); ++i)
    for (Index j = 0; j < ex.cols(); ++j) {
      CHECK((ex(i, j) == 1.0 || ex(i, j) == -1.0));
      if (ex(i, j) == 1.0) plus += 1;
    }
  const double fraction = plus / double(ex.size());
  CHECK(fraction >= 0.2);
  CHECK(fraction <= 0.4);

  auto rng2 = make_rng(7);
  CHECK(make_channel_exemplar<double>(64, 64, 0.3, rng2) == ex);
}

TEST_CASE("make_channel_exemplar rejects degenerate fractions") {
  auto rng = make_rng(11);
  CHECK_THROWS_AS(make_channel_exemplar<double>(8, 8, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(make_channel_exemplar<double>(8, 8, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(make_channel_exemplar<double>(8, 8, -0.2, rng), std::invalid_argument);
}

TEST_CASE("pgm round trip uses the byte mapping") {
  const std::string path = (std::filesystem::temp_directory_path() / "patchmmd_t.pgm").string();
  Img g(2, 3);
  g << -1.0, 0.0, 1.0, 0.25, -0.6, 2 * (128.0 / 255.0) - 1;
  save_pgm(path, g);
  const Img back = load_pgm<double>(path);
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 3);
  CHECK(back(0, 0) == -1.0);
  CHECK(back(0, 2) == 1.0);
  CHECK(back(1, 2) == 2 * (128.0 / 255.0) - 1);  // byte-lattice values survive exactly
  for (Index i = 0; i < back.rows(); ++i)
    for (Index j = 0; j < back.cols(); ++j) {
      CHECK(back(i, j) >= -1.0);
      CHECK(back(i, j) <= 1.0);
      CHECK(std::abs(back(i, j) - g(i, j)) <= 1.0 / 255.0);
    }
  // second round trip is exact
  save_pgm(path, back);
  CHECK(load_pgm<double>(path) == back);
  std::filesystem::remove(path);
}

TEST_CASE("pgm loader rejects malformed files") {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string bad_magic = (dir / "patchmmd_bad1.pgm").string();
  {
    std::ofstream out(bad_magic, std::ios::binary);
    out << "P2\n2 2\n255\n0 0 0 0\n";
  }
  CHECK_THROWS_AS(load_pgm<double>(bad_magic), std::runtime_error);

  const std::string truncated = (dir / "patchmmd_bad2.pgm").string();
  {
    std::ofstream out(truncated, std::ios::binary);
    out << "P5\n4 4\n255\nab";
  }
  CHECK_THROWS_AS(load_pgm<double>(truncated), std::runtime_error);
  CHECK_THROWS_AS(load_pgm<double>((dir / "patchmmd_missing.pgm").string()), std::runtime_error);
  std::filesystem::remove(bad_magic);
  std::filesystem::remove(truncated);
}

}  // TEST_SUITE
