#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "patchmmd/kernels.hpp"
#include "testutil.hpp"

using namespace patchmmd;
using testutil::Mat;
using testutil::Vec;

namespace {

KernelSpec<double> rq(double alpha, double l) {
  KernelSpec<double> s;
  s.family = KernelFamily::rational_quadratic;
  s.alpha = alpha;
  s.length_scale = l;
  return s;
}

KernelSpec<double> rbf(double gamma) {
  KernelSpec<double> s;
  s.family = KernelFamily::gaussian_rbf;
  s.gamma = gamma;
  return s;
}

KernelSpec<double> family_spec(KernelFamily f) {
  KernelSpec<double> s;
  s.family = f;
  s.alpha = 0.5;
  s.length_scale = 1.3;
  s.gamma = 0.7;
  return s;
}

const KernelFamily kFamilies[] = {KernelFamily::rational_quadratic, KernelFamily::gaussian_rbf,
                                  KernelFamily::linear, KernelFamily::polynomial2};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("rq kernel closed-form values") {
  Vec x(3), y(3);
  x << 0.3, -0.2, 0.9;
  y = x;
  CHECK(kernel_eval(rq(0.5, 1.0), x, y) == 1.0);

  Vec a(1), b(1);
  a << 0.0;
  b << 1.0;
  CHECK(kernel_eval(rq(0.5, 1.0), a, b) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("polynomial2 matches its explicit 6-component feature map") {
  // phi(x) = (x2^2, x1^2, sqrt(2) x2 x1, sqrt(2) x2, sqrt(2) x1, 1)
  const auto phi = [](const Vec& v) {
    Vec f(6);
    const double x1 = v(0), x2 = v(1);
    f << x2 * x2, x1 * x1, std::sqrt(2.0) * x2 * x1, std::sqrt(2.0) * x2, std::sqrt(2.0) * x1,
        1.0;
    return f;
  };
  auto rng = make_rng(21);
  KernelSpec<double> poly;
  poly.family = KernelFamily::polynomial2;
  for (int t = 0; t < 20; ++t) {
    const Vec x = testutil::random_vector(rng, 2, -2, 2);
    const Vec y = testutil::random_vector(rng, 2, -2, 2);
    CHECK(std::abs(kernel_eval(poly, x, y) - phi(x).dot(phi(y))) <= 1e-12);
  }
}

TEST_CASE("kernels are symmetric and radial families stay in (0,1]") {
  auto rng = make_rng(22);
  for (const auto f : kFamilies) {
    const auto spec = family_spec(f);
    for (int t = 0; t < 25; ++t) {
      const Vec x = testutil::random_vector(rng, 4, -3, 3);
      const Vec y = testutil::random_vector(rng, 4, -3, 3);
      CHECK(kernel_eval(spec, x, y) == kernel_eval(spec, y, x));
      if (is_distance_based(f)) {
        const double k = kernel_eval(spec, x, y);
        CHECK(k > 0.0);
        CHECK(k <= 1.0);
        CHECK(kernel_eval(spec, x, x) == 1.0);
      }
    }
  }
}

TEST_CASE("kernel gradients: closed forms") {
  auto rng = make_rng(23);
  const Vec x = testutil::random_vector(rng, 5);
  const Vec y = testutil::random_vector(rng, 5);
  CHECK(kernel_grad_x(rq(0.5, 1.0), x, x).norm() == 0.0);
  CHECK(kernel_grad_x(rbf(0.7), x, x).norm() == 0.0);

  KernelSpec<double> lin;
  lin.family = KernelFamily::linear;
  CHECK(kernel_grad_x(lin, x, y) == y);
}

TEST_CASE("rq gradient matches central differences to 1e-6") {
  auto rng = make_rng(24);
  const auto spec = rq(0.5, 0.8);
  for (int t = 0; t < 10; ++t) {
    Vec x = testutil::random_vector(rng, 4, -2, 2);
    const Vec y = testutil::random_vector(rng, 4, -2, 2);
    const Vec grad = kernel_grad_x(spec, x, y);
    const Vec fd = testutil::fd_gradient([&] { return kernel_eval(spec, x, y); }, x, 1e-5);
    CHECK(testutil::rel_err(grad, fd) <= 1e-6);
  }
}

TEST_CASE("all kernel families match finite differences on 100 instances") {
  auto rng = make_rng(25);
  for (const auto f : kFamilies) {
    const auto spec = family_spec(f);
    for (int t = 0; t < 25; ++t) {
      const Index dim = 1 + uniform_index(rng, 6);
      Vec x = testutil::random_vector(rng, dim, -2, 2);
      const Vec y = testutil::random_vector(rng, dim, -2, 2);
      const Vec grad = kernel_grad_x(spec, x, y);
      const Vec fd = testutil::fd_gradient([&] { return kernel_eval(spec, x, y); }, x, 1e-5);
      CHECK(testutil::rel_err(grad, fd) <= 1e-4);
    }
  }
}

TEST_CASE("rq tends to the gaussian kernel as alpha grows") {
  const double l = 0.9;
  const auto spec = rq(1e6, l);
  Vec x(1), y(1);
  x << 0.0;
  for (int i = 0; i <= 40; ++i) {
    const double d = 10.0 * l * i / 40.0;
    y << d;
    const double gauss = std::exp(-d * d / (2 * l * l));
    CHECK(std::abs(kernel_eval(spec, x, y) - gauss) <= 1e-4);
  }
}

TEST_CASE("median heuristic on a hand-enumerable sample") {
  Mat a(1, 2), b(1, 1);
  a << 0.0, 2.0;
  b << 4.0;
  // pairwise distances {2, 4, 2}, median 2
  CHECK(median_heuristic(a, b) == 2.0);
}

TEST_CASE("median heuristic rejects an all-duplicate sample") {
  Mat a(2, 1), b(2, 1);
  a << 0.5, -0.5;
  b = a;
  CHECK_THROWS_AS(median_heuristic(a, b), std::runtime_error);
}

TEST_CASE("median heuristic equals a brute-force enumeration of 4950 distances") {
  auto rng = make_rng(26);
  const Mat codes = testutil::random_matrix(rng, 3, 100);
  // independent oracle: full sort over all unordered pairs
  std::vector<double> dists;
  for (Index i = 0; i < 100; ++i) {
    for (Index j = i + 1; j < 100; ++j) {
      double s = 0;
      for (Index d = 0; d < 3; ++d) {
        s += (codes(d, i) - codes(d, j)) * (codes(d, i) - codes(d, j));
      }
      if (s > 0) dists.push_back(std::sqrt(s));
    }
  }
  std::sort(dists.begin(), dists.end());
  REQUIRE(dists.size() == 4950);
  const double expected = (dists[2474] + dists[2475]) / 2.0;
  CHECK(median_heuristic(Mat(codes.leftCols(60)), Mat(codes.rightCols(40))) ==
        doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("non-finite inputs are rejected") {
  Vec x(2), y(2);
  x << 0.0, std::numeric_limits<double>::quiet_NaN();
  y << 1.0, 2.0;
  for (const auto f : kFamilies) {
    CHECK_THROWS_AS(kernel_eval(family_spec(f), x, y), std::invalid_argument);
    CHECK_THROWS_AS(kernel_grad_x(family_spec(f), x, y), std::invalid_argument);
  }
}

TEST_CASE("invalid kernel parameters are rejected") {
  Vec x(1), y(1);
  x << 0;
  y << 1;
  CHECK_THROWS_AS(kernel_eval(rq(-1.0, 1.0), x, y), std::invalid_argument);
  CHECK_THROWS_AS(kernel_eval(rq(0.5, 0.0), x, y), std::invalid_argument);
  CHECK_THROWS_AS(kernel_eval(rbf(0.0), x, y), std::invalid_argument);
  CHECK_THROWS_AS(kernel_eval(rq(0.5, 1.0), x, Vec(2)), std::invalid_argument);
}

}  // TEST_SUITE
