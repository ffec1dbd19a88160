#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "sparsegn/linalg.hpp"
#include "sparsegn/network.hpp"
#include "sparsegn/threshold_forest.hpp"
#include "support.hpp"

using namespace sparsegn;

namespace {

FireSet scan_all(const WeightMatrix& w, const Dataset& data, double b) {
  FireSet fs;
  for (std::size_t i = 0; i < data.n(); ++i) fs.sets.push_back(scan_fire_row(w, data.point(i), b));
  return fs;
}

Dataset orthogonal_pair() { return Dataset(2, {1, 0, 0, 1}, {0, 0}); }

}  // namespace

TEST_CASE("network config") {
  CHECK(NetworkConfig::auto_shift(1) == 0.0);
  CHECK(NetworkConfig::auto_shift(1u << 16) ==
        doctest::Approx(std::sqrt(0.48 * std::log(65536.0))).epsilon(1e-15));
  CHECK_THROWS(NetworkConfig::auto_shift(0));
  NetworkConfig c{4, 2, 2, -0.1, 0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.b = 0.0;
  c.m = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.m = 4;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("init is deterministic under the seed") {
  const NetworkConfig c{300, 7, 2, 0.5, 99};
  const auto a = init_weights(c);
  const auto b = init_weights(c);
  CHECK(std::equal(a.flat().begin(), a.flat().end(), b.flat().begin()));
  CHECK(std::equal(a.signs().begin(), a.signs().end(), b.signs().begin()));
  const auto other = init_weights({300, 7, 2, 0.5, 100});
  CHECK_FALSE(std::equal(a.flat().begin(), a.flat().end(), other.flat().begin()));
}

TEST_CASE("init moments are standard Gaussian") {
  const std::size_t m = 10000, d = 16;
  const auto w = init_weights({m, d, 1, 0.0, 3});
  double mean = 0.0;
  for (double v : w.flat()) mean += v;
  mean /= static_cast<double>(m * d);
  double var = 0.0;
  for (double v : w.flat()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(m * d - 1);
  CHECK(std::abs(mean) <= 4.0 / std::sqrt(static_cast<double>(m * d)));
  CHECK(std::abs(var - 1.0) <= 0.05);

  double sum = 0.0;
  std::size_t plus = 0;
  for (double s : w.signs()) {
    REQUIRE((s == 1.0 || s == -1.0));
    sum += s;
    plus += s > 0;
  }
  CHECK(w.sign_sum() == sum);
  CHECK(std::abs(static_cast<double>(plus) - m / 2.0) <= 4.0 * std::sqrt(m / 4.0));
}

TEST_CASE("weight matrix validation") {
  CHECK_THROWS_AS(WeightMatrix(2, 2, {1, 2, 3}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(WeightMatrix(2, 2, {1, 2, 3, 4}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(WeightMatrix(2, 2, {1, 2, 3, 4}, {1, 0.5}), std::invalid_argument);
  WeightMatrix w(2, 2, {1, 2, 3, 4}, {1, -1});
  CHECK(w.sign_sum() == 0.0);
  CHECK(w.row(1)[0] == 3.0);
}

TEST_CASE("dataset validation") {
  CHECK_THROWS_AS(Dataset(2, {1, 1}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(Dataset(2, {1, 0, 0}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(Dataset(2, {}, {}), std::invalid_argument);
  CHECK_NOTHROW(Dataset(2, {0.6, 0.8}, {0.1}));
  const Dataset d(2, {0.6, 0.8}, {0.1});
  const Dataset e = d.with_labels({0.7});
  CHECK(e.label(0) == 0.7);
  CHECK(e.point(0)[1] == 0.8);
}

TEST_CASE("forward examples") {
  SUBCASE("zero weights with b = 1") {
    const WeightMatrix w(4, 2, Vector(8, 0.0), {1, 1, -1, 1});
    const Vector x{0.6, 0.8};
    const auto fire = scan_fire_row(w, x, 1.0);
    CHECK(fire.empty());
    CHECK(forward(w, 1.0, x, fire) == doctest::Approx(w.sign_sum() / 2.0).epsilon(1e-15));
  }
  SUBCASE("single neuron on its own input") {
    const WeightMatrix w(1, 2, {1, 0}, {1});
    const Vector x{1, 0};
    const auto fire = scan_fire_row(w, x, 0.0);
    CHECK(fire == std::vector<std::size_t>{0});
    CHECK(forward(w, 0.0, x, fire) == 1.0);
  }
}

TEST_CASE("forward matches the dense sum") {
  const auto w = testing::gaussian_weights(256, 6, 7);
  const auto x = testing::unit_points(20, 6, 8);
  for (double b : {0.0, 0.3, 1.1, 2.5}) {
    for (std::size_t i = 0; i < 20; ++i) {
      const std::span xi(x.data() + i * 6, 6);
      const double want = testing::dense_forward(w, xi, b);
      const double got = forward(w, b, xi, scan_fire_row(w, xi, b));
      CHECK(got == doctest::Approx(want).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("scan fire row is sorted and closed at the threshold") {
  const auto w = testing::gaussian_weights(100, 3, 17);
  const auto x = testing::unit_points(1, 3, 18);
  const double tie = testing::plain_dot(w.row(42), x);
  const auto fire = scan_fire_row(w, x, tie);
  CHECK(std::is_sorted(fire.begin(), fire.end()));
  CHECK(std::find(fire.begin(), fire.end(), 42u) != fire.end());
  for (std::size_t r = 0; r < 100; ++r) {
    const bool in = std::binary_search(fire.begin(), fire.end(), r);
    CHECK(in == (testing::plain_dot(w.row(r), x) >= tie));
  }
}

TEST_CASE("predictions") {
  SUBCASE("duplicate inputs give identical entries") {
    const auto w = testing::gaussian_weights(64, 3, 1);
    const auto p = testing::unit_points(1, 3, 2);
    Vector x;
    for (int k = 0; k < 3; ++k) x.insert(x.end(), p.begin(), p.end());
    const Dataset data(3, x, {0, 0, 0});
    const auto f = predictions(w, 0.4, data, scan_all(w, data, 0.4));
    CHECK(f[0] == f[1]);
    CHECK(f[1] == f[2]);
  }
  SUBCASE("zero weights give b sign_sum / sqrt m") {
    const WeightMatrix w(9, 3, Vector(27, 0.0), {1, 1, 1, -1, 1, 1, -1, 1, 1});
    const auto data = testing::random_dataset(5, 3, 3);
    const auto f = predictions(w, 0.7, data, scan_all(w, data, 0.7));
    for (double v : f) CHECK(v == doctest::Approx(0.7 * w.sign_sum() / 3.0).epsilon(1e-15));
  }
  SUBCASE("random instance vs dense oracle") {
    const auto w = testing::gaussian_weights(500, 5, 4);
    const auto data = testing::random_dataset(12, 5, 5);
    const auto f = predictions(w, 0.9, data, scan_all(w, data, 0.9));
    for (std::size_t i = 0; i < 12; ++i)
      CHECK(f[i] == doctest::Approx(testing::dense_forward(w, data.point(i), 0.9)).epsilon(1e-10));
  }
  SUBCASE("fire set count must match") {
    const auto w = testing::gaussian_weights(8, 2, 6);
    const auto data = testing::random_dataset(3, 2, 7);
    FireSet fs;
    fs.sets.resize(2);
    CHECK_THROWS_AS(predictions(w, 0.0, data, fs), std::invalid_argument);
  }
}

TEST_CASE("loss") {
  CHECK(loss(Vector{1, 2}, Vector{1, 2}) == 0.0);
  CHECK(loss(Vector{1, 0}, Vector{0, 0}) == 0.5);
  CHECK_THROWS_AS(loss(Vector{1}, Vector{1, 2}), std::invalid_argument);
  std::mt19937_64 rng(9);
  const auto f = testing::gaussian_vector(50, rng);
  const auto y = testing::gaussian_vector(50, rng);
  double want = 0.0;
  for (std::size_t i = 0; i < 50; ++i) want += (f[i] - y[i]) * (f[i] - y[i]);
  CHECK(loss(f, y) == doctest::Approx(want / 2.0).epsilon(1e-14));
}

TEST_CASE("fire set statistics") {
  FireSet fs;
  fs.sets = {{0, 1, 2}, {}, {4}};
  CHECK(fs.total() == 4);
  CHECK(fs.min_size() == 0);
  CHECK(fs.max_size() == 3);
  CHECK(fs.mean_size() == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("query_fire_sets matches scans and is thread independent") {
  const auto w = testing::gaussian_weights(1000, 5, 10);
  const auto data = testing::random_dataset(9, 5, 11);
  const ThresholdForest forest(w.flat(), data.points(), 5);
  const auto one = query_fire_sets(forest, 0.6, 1);
  const auto four = query_fire_sets(forest, 0.6, 4);
  CHECK(one.sets == four.sets);
  CHECK(one.sets == scan_all(w, data, 0.6).sets);
}

TEST_CASE("jacobian with no neuron firing is zero") {
  const auto w = testing::gaussian_weights(64, 4, 12);
  const auto data = testing::random_dataset(5, 4, 13);
  double top = 0.0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t r = 0; r < 64; ++r) top = std::max(top, testing::plain_dot(w.row(r), data.point(i)));
  const double b = top + 1.0;
  const SparseJacobian jac(w, data, scan_all(w, data, b));
  CHECK(jac.fire().total() == 0);
  CHECK(jac.active_neurons().empty());
  for (std::size_t i = 0; i < 5; ++i)
    for (double v : jac.materialize_row(i)) CHECK(v == 0.0);
  const auto g = jac.apply_gram(Vector{1, 2, 3, 4, 5});
  for (double v : g) CHECK(v == 0.0);
  CHECK(jac.gram_trace() == 0.0);
}

TEST_CASE("jacobian with every neuron firing") {
  const std::size_t m = 32, d = 3;
  const auto w = testing::gaussian_weights(m, d, 14);
  const auto data = testing::random_dataset(4, d, 15);
  const SparseJacobian jac(w, data, scan_all(w, data, -1e9));
  CHECK(jac.active_neurons().size() == m);
  const double s = 1.0 / std::sqrt(static_cast<double>(m));
  CHECK(jac.scale() == doctest::Approx(s));
  for (std::size_t i = 0; i < 4; ++i) {
    const auto row = jac.materialize_row(i);
    REQUIRE(row.size() == m * d);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < d; ++c)
        CHECK(row[r * d + c] == doctest::Approx(w.sign(r) * data.point(i)[c] * s).epsilon(1e-15));
  }
}

TEST_CASE("jacobian rows match finite differences") {
  const std::size_t m = 40, d = 4;
  const double b = 0.2, eps = 1e-6;
  const auto w = testing::gaussian_weights(m, d, 16);
  const auto data = testing::random_dataset(3, d, 17);
  const SparseJacobian jac(w, data, scan_all(w, data, b));
  std::size_t checked = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto row = jac.materialize_row(i);
    for (std::size_t r = 0; r < m; ++r) {
      if (std::abs(testing::plain_dot(w.row(r), data.point(i)) - b) < 1e-3) continue;
      for (std::size_t c = 0; c < d; ++c) {
        Vector flat(w.flat().begin(), w.flat().end());
        flat[r * d + c] += eps;
        const WeightMatrix wp(m, d, flat, Vector(w.signs().begin(), w.signs().end()));
        const double fd =
            (testing::dense_forward(wp, data.point(i), b) - testing::dense_forward(w, data.point(i), b)) / eps;
        CHECK(fd == doctest::Approx(row[r * d + c]).epsilon(1e-6).scale(1.0));
        ++checked;
      }
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("apply_jt") {
  SUBCASE("zero g gives an empty update") {
    const auto w = testing::gaussian_weights(50, 3, 18);
    const auto data = testing::random_dataset(4, 3, 19);
    const SparseJacobian jac(w, data, scan_all(w, data, 0.5));
    CHECK(jac.apply_jt(Vector(4, 0.0)).empty());
  }
  SUBCASE("single fired neuron") {
    const WeightMatrix w(4, 2, {2, 0, -1, 0, -1, 0, -1, 0}, {-1, 1, 1, 1});
    const Dataset data(2, {1, 0, 0, 1}, {0, 0});
    const SparseJacobian jac(w, data, scan_all(w, data, 1.0));
    REQUIRE(jac.fire()[0] == std::vector<std::size_t>{0});
    REQUIRE(jac.fire()[1].empty());
    const auto u = jac.apply_jt(Vector{3.0, 5.0});
    REQUIRE(u.neurons == std::vector<std::size_t>{0});
    CHECK(u.delta(0)[0] == doctest::Approx(-1.0 * 3.0 * 1.0 / 2.0));
    CHECK(u.delta(0)[1] == 0.0);
  }
  SUBCASE("random instance vs dense oracle") {
    const std::size_t m = 80, d = 5, n = 6;
    const auto w = testing::gaussian_weights(m, d, 20);
    const auto data = testing::random_dataset(n, d, 21);
    const SparseJacobian jac(w, data, scan_all(w, data, 0.4));
    const Matrix j = testing::jacobian_oracle(w, data, 0.4);
    std::mt19937_64 rng(22);
    const auto g = testing::gaussian_vector(n, rng);
    const Vector want = j.transposed() * g;
    const auto u = jac.apply_jt(g);
    CHECK(std::is_sorted(u.neurons.begin(), u.neurons.end()));
    Vector got(m * d, 0.0);
    for (std::size_t k = 0; k < u.neurons.size(); ++k)
      for (std::size_t c = 0; c < d; ++c) got[u.neurons[k] * d + c] = u.delta(k)[c];
    CHECK(testing::max_abs_diff(got, want) <= 1e-13);
    std::vector<std::size_t> support;
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t i = 0; i < n; ++i)
        if (j(i, r * d) != 0.0 || j(i, r * d + 1) != 0.0) {
          support.push_back(r);
          break;
        }
    CHECK(u.neurons == support);
  }
  SUBCASE("length mismatch") {
    const auto w = testing::gaussian_weights(8, 2, 23);
    const auto data = testing::random_dataset(3, 2, 24);
    const SparseJacobian jac(w, data, scan_all(w, data, 0.0));
    CHECK_THROWS_AS(jac.apply_jt(Vector{1}), std::invalid_argument);
    CHECK_THROWS_AS(jac.apply_gram(Vector{1}), std::invalid_argument);
  }
}

TEST_CASE("gram of disjoint fire sets on orthogonal inputs is diagonal") {
  const WeightMatrix w(4, 2, {1, 0, 1, 0, 0, 1, -1, -1}, {1, -1, 1, 1});
  const Dataset data = orthogonal_pair();
  const SparseJacobian jac(w, data, scan_all(w, data, 0.5));
  REQUIRE(jac.fire()[0] == std::vector<std::size_t>{0, 1});
  REQUIRE(jac.fire()[1] == std::vector<std::size_t>{2});
  const Matrix g = jac.gram();
  CHECK(g(0, 0) == doctest::Approx(2.0 / 4.0));
  CHECK(g(1, 1) == doctest::Approx(1.0 / 4.0));
  CHECK(g(0, 1) == 0.0);
  CHECK(g(1, 0) == 0.0);
  const auto col0 = jac.apply_gram(Vector{1, 0});
  CHECK(col0[0] == doctest::Approx(0.5));
  CHECK(col0[1] == 0.0);
}

TEST_CASE("gram matches the dense product") {
  const std::size_t m = 200, d = 4, n = 7;
  const auto w = testing::gaussian_weights(m, d, 25);
  const auto data = testing::random_dataset(n, d, 26);
  const double b = 0.5;
  const SparseJacobian jac(w, data, scan_all(w, data, b));
  const Matrix j = testing::jacobian_oracle(w, data, b);
  const Matrix want = testing::naive_product(j, testing::naive_transpose(j));
  CHECK(testing::max_abs_diff(jac.gram(), want) <= 1e-12);
  Vector e1(n, 0.0);
  e1[0] = 1.0;
  const auto col = jac.apply_gram(e1);
  for (std::size_t i = 0; i < n; ++i) CHECK(col[i] == doctest::Approx(want(i, 0)).epsilon(1e-12).scale(1.0));
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += want(i, i);
  CHECK(jac.gram_trace() == doctest::Approx(trace).epsilon(1e-12));
  for (std::size_t i = 0; i < n; ++i)
    CHECK(want(i, i) == doctest::Approx(static_cast<double>(jac.fire()[i].size()) / m).epsilon(1e-12));
}

TEST_CASE("gram is positive semidefinite on random instances") {
  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng() % 8, d = 2 + rng() % 5, m = 16 + rng() % 300;
    const auto w = testing::gaussian_weights(m, d, rng());
    const auto data = testing::random_dataset(n, d, rng());
    const double b = std::uniform_real_distribution<double>(0.0, 1.5)(rng);
    const SparseJacobian jac(w, data, scan_all(w, data, b));
    const Matrix g = jac.gram();
    REQUIRE(g.is_symmetric(0.0));
    const auto eig = symmetric_eigen(g, false);
    for (double v : eig.values) CHECK(v >= -1e-12);
    const auto v = testing::gaussian_vector(n, rng);
    const auto gv = jac.apply_gram(v);
    CHECK(testing::plain_dot(v, gv) >= -1e-12);
  }
}

TEST_CASE("fire set size at Gaussian init concentrates around m Q(b)") {
  const std::size_t m = 1u << 14, d = 8;
  const auto w = init_weights({m, d, 1, 0.0, 28});
  const double b = NetworkConfig::auto_shift(m);
  const double q = gaussian_tail(b);
  const auto x = testing::unit_points(10, d, 29);
  double total = 0.0;
  for (std::size_t i = 0; i < 10; ++i) total += scan_fire_row(w, std::span(x).subspan(i * d, d), b).size();
  const double mean = total / 10.0;
  const double sd = std::sqrt(m * q * (1 - q) / 10.0);
  CHECK(std::abs(mean - m * q) <= 4.0 * sd);
}
