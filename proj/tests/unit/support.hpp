#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sparsegn/linalg.hpp"
#include "sparsegn/network.hpp"
#include "sparsegn/rng.hpp"

namespace testing {

using sparsegn::Dataset;
using sparsegn::Matrix;
using sparsegn::Vector;
using sparsegn::WeightMatrix;

inline Vector gaussian_vector(std::size_t len, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(len);
  for (double& x : v) x = g(rng);
  return v;
}

/// n points on the unit sphere, row-major.
inline Vector unit_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vector x = gaussian_vector(n * d, rng);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += x[i * d + c] * x[i * d + c];
    s = std::sqrt(s);
    for (std::size_t c = 0; c < d; ++c) x[i * d + c] /= s;
  }
  return x;
}

inline Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xabcdefULL);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector y(n);
  for (double& v : y) v = u(rng);
  return Dataset(d, unit_points(n, d, seed), std::move(y));
}

/// Gaussian weights with random signs, independent of init_weights.
inline WeightMatrix gaussian_weights(std::size_t m, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vector w = gaussian_vector(m * d, rng);
  std::vector<double> a(m);
  for (double& s : a) s = (rng() & 1) ? 1.0 : -1.0;
  return WeightMatrix(m, d, std::move(w), std::move(a));
}

inline double plain_dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

/// (1/sqrt m) sum_r a_r max(<w_r, x>, b) over every neuron.
inline double dense_forward(const WeightMatrix& w, std::span<const double> x, double b) {
  double s = 0.0;
  for (std::size_t r = 0; r < w.m(); ++r) s += w.sign(r) * std::max(plain_dot(w.row(r), x), b);
  return s / std::sqrt(static_cast<double>(w.m()));
}

/// Explicit n x (m d) Jacobian built entry by entry.
inline Matrix jacobian_oracle(const WeightMatrix& w, const Dataset& data, double b) {
  const std::size_t m = w.m();
  const std::size_t d = w.d();
  Matrix j(data.n(), m * d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t i = 0; i < data.n(); ++i)
    for (std::size_t r = 0; r < m; ++r)
      if (plain_dot(w.row(r), data.point(i)) >= b)
        for (std::size_t c = 0; c < d; ++c) j(i, r * d + c) = w.sign(r) * data.point(i)[c] * scale;
  return j;
}

inline Matrix naive_product(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline Matrix naive_transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double e = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) e = std::max(e, std::abs(a(i, j) - b(i, j)));
  return e;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double e = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) e = std::max(e, std::abs(a[k] - b[k]));
  return e;
}

/// Solves a small dense system by Gaussian elimination with partial pivoting.
inline Vector gauss_solve(Matrix a, Vector b) {
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
    std::swap(b[k], b[p]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  Vector x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= a(k, j) * x[j];
    x[k] = s / a(k, k);
  }
  return x;
}

}  // namespace testing
