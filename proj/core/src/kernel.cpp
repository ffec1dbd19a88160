#include "sparsegn/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "sparsegn/network.hpp"
#include "sparsegn/rng.hpp"

namespace sparsegn {

namespace {

constexpr std::size_t kSamplesPerChunk = 4096;

Matrix input_gram(const Dataset& data) {
  const std::size_t n = data.n();
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) g(i, j) = g(j, i) = dot(data.point(i), data.point(j));
  return g;
}

// Adds 1 to counts(i, j) for every pair of fired inputs.
void add_pair_counts(const std::vector<std::size_t>& fired, std::vector<std::uint64_t>& counts,
                     std::size_t n) {
  for (std::size_t p = 0; p < fired.size(); ++p)
    for (std::size_t q = p; q < fired.size(); ++q) ++counts[fired[p] + fired[q] * n];
}

Matrix finish(const Matrix& gram, const std::vector<std::uint64_t>& upper_counts, double denom) {
  const std::size_t n = gram.rows();
  Matrix h(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i <= j; ++i) {
      // add_pair_counts stores (min, max) index pairs at i + j*n with i <= j.
      const double v = gram(i, j) * static_cast<double>(upper_counts[i + j * n]) / denom;
      h(i, j) = h(j, i) = v;
    }
  return h;
}

}  // namespace

SeparabilityReport separability(const Dataset& data) {
  if (data.n() < 2) throw std::invalid_argument("separability: need at least two points");
  SeparabilityReport best;
  best.delta = std::numeric_limits<double>::infinity();
  const std::size_t d = data.d();
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto xi = data.point(i);
    for (std::size_t j = i + 1; j < data.n(); ++j) {
      const auto xj = data.point(j);
      double plus = 0.0, minus = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        plus += (xi[c] + xj[c]) * (xi[c] + xj[c]);
        minus += (xi[c] - xj[c]) * (xi[c] - xj[c]);
      }
      plus = std::sqrt(plus);
      minus = std::sqrt(minus);
      const bool use_plus = plus < minus;
      const double v = use_plus ? plus : minus;
      if (v < best.delta) best = {v, i, j, use_plus};
    }
  }
  return best;
}

KernelMatrix h_dis(const WeightMatrix& w, const Dataset& data, double b) {
  if (w.d() != data.d()) throw std::invalid_argument("h_dis: weight/input dimension mismatch");
  const std::size_t n = data.n();
  std::vector<std::uint64_t> counts(n * n, 0);
  std::vector<std::size_t> fired;
  fired.reserve(n);
  for (std::size_t r = 0; r < w.m(); ++r) {
    fired.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (dot(w.row(r), data.point(i)) >= b) fired.push_back(i);
    add_pair_counts(fired, counts, n);
  }
  return {finish(input_gram(data), counts, static_cast<double>(w.m())), KernelKind::discrete, w.m()};
}

KernelMatrix h_cts_mc(const Dataset& data, double b, std::size_t num_samples, std::uint64_t seed,
                      unsigned threads) {
  if (num_samples == 0) throw std::invalid_argument("h_cts_mc: need at least one sample");
  const std::size_t n = data.n();
  const std::size_t d = data.d();
  const std::size_t chunks = (num_samples + kSamplesPerChunk - 1) / kSamplesPerChunk;
  std::vector<std::vector<std::uint64_t>> partial(chunks, std::vector<std::uint64_t>(n * n, 0));

  auto run_chunk = [&](std::size_t c) {
    Rng rng(derive_seed(seed, c));
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t begin = c * kSamplesPerChunk;
    const std::size_t end = std::min(num_samples, begin + kSamplesPerChunk);
    Vector wv(d);
    std::vector<std::size_t> fired;
    fired.reserve(n);
    for (std::size_t s = begin; s < end; ++s) {
      for (double& v : wv) v = normal(rng);
      fired.clear();
      for (std::size_t i = 0; i < n; ++i)
        if (dot(wv, data.point(i)) >= b) fired.push_back(i);
      add_pair_counts(fired, partial[c], n);
    }
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(chunks)));
  if (threads == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t c = t; c < chunks; c += threads) run_chunk(c);
      });
  }

  std::vector<std::uint64_t> counts(n * n, 0);
  for (const auto& p : partial)
    for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += p[k];
  return {finish(input_gram(data), counts, static_cast<double>(num_samples)),
          KernelKind::continuous_mc, num_samples};
}

double lambda_min(const Matrix& k) {
  if (k.rows() == 0) throw std::invalid_argument("lambda_min: empty matrix");
  return symmetric_eigen(k, false).values.front();
}

double lambda_lower_bound(double b, double delta, std::size_t n) {
  const double nd = static_cast<double>(n);
  return std::exp(-b * b / 2.0) * delta / (100.0 * nd * nd);
}

double lambda_upper_bound(double b) { return std::exp(-b * b / 2.0); }

SandwichReport sandwich_check(const Dataset& data, double b, std::size_t num_samples,
                              std::uint64_t seed, unsigned threads) {
  if (!(b >= 0.0)) throw std::invalid_argument("sandwich_check: b must be >= 0");
  SandwichReport out;
  const SeparabilityReport sep = separability(data);
  out.delta = sep.delta;
  out.samples = num_samples;
  if (sep.delta >= std::sqrt(2.0) - 1e-12)
    out.warning = "separability equals sqrt(2); the bound assumes delta < sqrt(2)";
  else if (sep.delta == 0.0)
    out.warning = "duplicate or antipodal points (delta = 0); lower bound is 0";
  out.lower_bound = lambda_lower_bound(b, sep.delta, data.n());
  out.upper_bound = lambda_upper_bound(b);
  out.tol = 5.0 * static_cast<double>(data.n()) / std::sqrt(static_cast<double>(num_samples));
  out.lambda_hat = lambda_min(h_cts_mc(data, b, num_samples, seed, threads));
  out.pass = out.lambda_hat >= out.lower_bound - out.tol && out.lambda_hat <= out.upper_bound + out.tol;
  return out;
}

}  // namespace sparsegn
