#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "patchmmd/entropy.hpp"
#include "patchmmd/rng.hpp"
#include "testutil.hpp"

using namespace patchmmd;
using testutil::Mat;
using testutil::Vec;

TEST_SUITE("entropy") {

TEST_CASE("digamma and unit-ball volume constants") {
  constexpr double gamma = 0.57721566490153286;
  CHECK(digamma_int(1) == doctest::Approx(-gamma).epsilon(1e-14));
  CHECK(digamma_int(2) == doctest::Approx(1.0 - gamma).epsilon(1e-14));
  CHECK(digamma_int(2) - digamma_int(1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(log_unit_ball_volume(1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(log_unit_ball_volume(2) == doctest::Approx(std::log(M_PI)).epsilon(1e-12));
  CHECK(log_unit_ball_volume(3) == doctest::Approx(std::log(4.0 * M_PI / 3.0)).epsilon(1e-12));
}

TEST_CASE("two 1d samples at distance e evaluate by hand") {
  Mat samples(1, 2);
  samples << 0.0, std::exp(1.0);
  const auto res = knn_entropy(samples, 1);
  CHECK(res.rho(0) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(res.knn_index[0] == 1);
  CHECK(res.knn_index[1] == 0);
  // c * 1 + log V_1 + psi(2) - psi(1) = 1 + log 2 + 1
  CHECK(res.value == doctest::Approx(1.0 + std::log(2.0) + 1.0).epsilon(1e-12));
}

TEST_CASE("gaussian draws recover the analytic entropy") {
  auto rng = make_rng(1234);
  Mat samples(2, 4000);
  fill_normal(samples, rng);
  const auto res = knn_entropy(samples, 63);
  const double analytic = std::log(2.0 * M_PI * std::exp(1.0));
  CHECK(res.value >= analytic - 0.1);
  CHECK(res.value <= analytic + 0.1);
}

TEST_CASE("scaling all coordinates shifts the estimate by c log s") {
  auto rng = make_rng(61);
  Mat samples(3, 50);
  fill_normal(samples, rng);
  const double base = knn_entropy(samples, 7).value;
  const double scaled = knn_entropy(Mat(3.0 * samples), 7).value;
  CHECK(std::abs(scaled - base - 3.0 * std::log(3.0)) <= 1e-10);
}

TEST_CASE("duplicate points stay finite, fully degenerate samples throw") {
  Mat samples(2, 4);
  samples << 0, 0, 1, 2, 0, 0, 1, -1;  // first two columns identical
  const auto res = knn_entropy(samples, 1);
  CHECK(std::isfinite(res.value));
  CHECK(res.rho(0) == 0.0);

  Mat constant = Mat::Ones(2, 5);
  CHECK_THROWS_AS(knn_entropy(constant, 1), std::runtime_error);
}

TEST_CASE("input validation") {
  Mat one(2, 1);
  one << 0, 1;
  CHECK_THROWS_AS(knn_entropy(one, 1), std::invalid_argument);
  Mat two(1, 3);
  two << 0, 1, 2;
  CHECK_THROWS_AS(knn_entropy(two, 0), std::invalid_argument);
  CHECK_THROWS_AS(knn_entropy(two, 3), std::invalid_argument);
}

TEST_CASE("two-sample gradients are equal, opposite and point apart") {
  Mat samples(2, 2);
  samples << 0.0, 1.0, 0.0, 0.5;
  const auto [res, grads] = knn_entropy_grad(samples, 1);
  CHECK((grads.col(0) + grads.col(1)).norm() <= 1e-12);
  const Vec apart = samples.col(0) - samples.col(1);
  CHECK(grads.col(0).dot(apart) > 0.0);
}

TEST_CASE("gradient matches finite differences off ties") {
  auto rng = make_rng(62);
  Mat samples(3, 10);
  fill_normal(samples, rng);
  const auto [res, grads] = knn_entropy_grad(samples, 3);
  Eigen::Map<Vec> flat(samples.data(), samples.size());
  const Vec fd = testutil::fd_gradient(
      [&] { return knn_entropy(samples, 3).value; }, flat, 1e-6);
  const Eigen::Map<const Vec> flat_grads(grads.data(), grads.size());
  CHECK(testutil::rel_err(Vec(flat_grads), fd) <= 1e-4);
}

TEST_CASE("gradients are translation invariant and sum to zero") {
  auto rng = make_rng(63);
  Mat samples(4, 12);
  fill_normal(samples, rng);
  const auto [res, grads] = knn_entropy_grad(samples, 3);
  CHECK(grads.rowwise().sum().norm() <= 1e-10);

  Mat shifted = samples;
  shifted.array() += 17.25;
  const auto [res2, grads2] = knn_entropy_grad(shifted, 3);
  CHECK((grads - grads2).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("neighbor indices agree with a full-sort oracle") {
  auto rng = make_rng(64);
  for (Index n = 2; n <= 50; ++n) {
    Mat samples(3, n);
    fill_normal(samples, rng);
    const Index k = std::max<Index>(1, n / 4);
    const auto res = knn_entropy(samples, k);
    for (Index i = 0; i < n; ++i) {
      std::vector<std::pair<double, Index>> ranked;
      for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        ranked.emplace_back((samples.col(i) - samples.col(j)).norm(), j);
      }
      std::sort(ranked.begin(), ranked.end());
      CHECK(res.knn_index[static_cast<std::size_t>(i)] ==
            ranked[static_cast<std::size_t>(k - 1)].second);
      CHECK(res.rho(i) == ranked[static_cast<std::size_t>(k - 1)].first);
    }
  }
}

}  // TEST_SUITE
