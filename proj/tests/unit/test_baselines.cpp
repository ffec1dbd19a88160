#include <cmath>
#include <random>

#include "doctest.h"
#include "sparsegn/baselines.hpp"
#include "sparsegn/network.hpp"
#include "support.hpp"

using namespace sparsegn;

namespace {

double central_loss(const WeightMatrix& w, const Dataset& data, double b) {
  double s = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double r = testing::dense_forward(w, data.point(i), b) - data.label(i);
    s += r * r;
  }
  return 0.5 * s;
}

WeightMatrix perturbed(const WeightMatrix& w, std::size_t k, double eps) {
  Vector flat(w.flat().begin(), w.flat().end());
  flat[k] += eps;
  return WeightMatrix(w.m(), w.d(), std::move(flat), Vector(w.signs().begin(), w.signs().end()));
}

}  // namespace

TEST_CASE("dense jacobian matches the entrywise oracle") {
  const auto w = testing::gaussian_weights(60, 4, 1);
  const auto data = testing::random_dataset(5, 4, 2);
  const Matrix want = testing::jacobian_oracle(w, data, 0.3);
  CHECK(testing::max_abs_diff(dense_jacobian(w, data, 0.3), want) <= 1e-15);
  Matrix ws;
  dense_jacobian(w, data, 0.3, ws);
  CHECK(testing::max_abs_diff(ws, want) <= 1e-15);
  const double* storage = ws.data();
  dense_jacobian(w, data, 0.9, ws);
  CHECK(ws.data() == storage);
  CHECK(testing::max_abs_diff(ws, testing::jacobian_oracle(w, data, 0.9)) <= 1e-15);
}

TEST_CASE("dense predictions match the dense sum") {
  const auto w = testing::gaussian_weights(100, 3, 3);
  const auto data = testing::random_dataset(6, 3, 4);
  const auto f = dense_predictions(w, data, 0.5);
  for (std::size_t i = 0; i < 6; ++i)
    CHECK(f[i] == doctest::Approx(testing::dense_forward(w, data.point(i), 0.5)).epsilon(1e-12).scale(1.0));
}

TEST_CASE("pseudo-inverse solve") {
  CHECK(pinv_solve(Matrix(3, 3), Vector{1, 2, 3}) == Vector{0, 0, 0});
  Matrix g(2, 2);
  g(0, 0) = 2.0;
  g(0, 1) = g(1, 0) = 1.0;
  g(1, 1) = 3.0;
  const auto x = pinv_solve(g, Vector{3, 4});
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(1.0));
  // Rank one: the minimum-norm solution in the range.
  Matrix r1(2, 2, 1.0);
  const auto y = pinv_solve(r1, Vector{2, 2});
  CHECK(y[0] == doctest::Approx(1.0));
  CHECK(y[1] == doctest::Approx(1.0));
  CHECK_THROWS_AS(pinv_solve(g, Vector{1}), std::invalid_argument);
}

TEST_CASE("gauss-newton step with a zero jacobian is a no-op") {
  const auto w = testing::gaussian_weights(30, 3, 5);
  const auto data = testing::random_dataset(4, 3, 6);
  const auto step = dense_gauss_newton_step(w, data, 1e9);
  for (double v : step.g) CHECK(v == 0.0);
  CHECK(testing::max_abs_diff(step.next.flat(), w.flat()) == 0.0);
  CHECK(step.gram.frobenius_norm() == 0.0);
}

TEST_CASE("gauss-newton step on a single example") {
  const auto w = testing::gaussian_weights(50, 4, 7);
  const auto data = testing::random_dataset(1, 4, 8);
  const double b = 0.2;
  const auto step = dense_gauss_newton_step(w, data, b);
  const double f = testing::dense_forward(w, data.point(0), b);
  REQUIRE(step.gram(0, 0) > 0.0);
  CHECK(step.f[0] == doctest::Approx(f).epsilon(1e-12));
  CHECK(step.g[0] == doctest::Approx((f - data.label(0)) / step.gram(0, 0)).epsilon(1e-10));
}

TEST_CASE("gauss-newton step solves the normal equations") {
  const std::size_t m = 400, d = 5, n = 8;
  const double b = 0.6;
  const auto w = testing::gaussian_weights(m, d, 9);
  const auto data = testing::random_dataset(n, d, 10);
  const auto step = dense_gauss_newton_step(w, data, b);
  const Matrix j = testing::jacobian_oracle(w, data, b);
  const Matrix g = testing::naive_product(j, testing::naive_transpose(j));
  CHECK(testing::max_abs_diff(step.gram, g) <= 1e-12);
  Vector rhs(n);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = step.f[i] - data.label(i);
  const Vector gg = g * step.g;
  Vector res(n);
  for (std::size_t i = 0; i < n; ++i) res[i] = gg[i] - rhs[i];
  CHECK(norm2(res) <= 1e-8);
  // next = W - J^T g.
  const Vector jt = testing::naive_transpose(j) * step.g;
  for (std::size_t k = 0; k < m * d; ++k)
    CHECK(step.next.flat()[k] == doctest::Approx(w.flat()[k] - jt[k]).epsilon(1e-13).scale(1.0));
  Matrix ws;
  const auto again = dense_gauss_newton_step(w, data, b, ws);
  CHECK(again.g == step.g);
  CHECK(testing::max_abs_diff(again.next.flat(), step.next.flat()) == 0.0);
}

TEST_CASE("gradient descent step") {
  SUBCASE("labels equal to predictions leave weights unchanged") {
    const auto w = testing::gaussian_weights(40, 3, 11);
    const auto raw = testing::random_dataset(4, 3, 12);
    const auto data = raw.with_labels(dense_predictions(w, raw, 0.3));
    const auto next = gd_step(w, data, 0.3, 0.7);
    CHECK(testing::max_abs_diff(next.flat(), w.flat()) == 0.0);
  }
  SUBCASE("single fired pair") {
    const WeightMatrix w(4, 2, {2, 0, -1, 0, -1, 0, -1, 0}, {-1, 1, 1, 1});
    const Dataset data(2, {1, 0}, {0.25});
    const double b = 1.0;
    const double f = testing::dense_forward(w, data.point(0), b);
    const auto next = gd_step(w, data, b, 0.5);
    CHECK(next.row(0)[0] == doctest::Approx(2.0 - 0.5 * (f - 0.25) * -1.0 * 1.0 / 2.0));
    CHECK(next.row(0)[1] == 0.0);
    for (std::size_t r = 1; r < 4; ++r) CHECK(next.row(r)[0] == -1.0);
  }
  SUBCASE("rejects non-positive rates") {
    const auto w = testing::gaussian_weights(4, 2, 13);
    const auto data = testing::random_dataset(2, 2, 14);
    CHECK_THROWS_AS(gd_step(w, data, 0.0, 0.0), std::invalid_argument);
  }
}

TEST_CASE("loss gradient matches central finite differences") {
  const std::size_t m = 48, d = 4;
  const double b = 0.3, eps = 1e-6;
  const auto w = testing::gaussian_weights(m, d, 15);
  const auto data = testing::random_dataset(5, d, 16);
  const auto grad = loss_gradient(w, data, b);
  double scale = 0.0;
  for (double v : grad) scale = std::max(scale, std::abs(v));
  REQUIRE(scale > 0.0);
  double worst = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    bool kink = false;
    for (std::size_t i = 0; i < data.n(); ++i)
      kink |= std::abs(testing::plain_dot(w.row(r), data.point(i)) - b) < 1e-4;
    if (kink) continue;
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t k = r * d + c;
      const double fd =
          (central_loss(perturbed(w, k, eps), data, b) - central_loss(perturbed(w, k, -eps), data, b)) / (2 * eps);
      worst = std::max(worst, std::abs(fd - grad[k]) / scale);
    }
  }
  CHECK(worst <= 1e-5);
}
