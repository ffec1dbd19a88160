#include "sparsegn/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include "sparsegn/rng.hpp"
#include "sparsegn/threshold_forest.hpp"

namespace sparsegn {

double NetworkConfig::auto_shift(std::size_t m) {
  if (m == 0) throw std::invalid_argument("auto_shift: m must be positive");
  return std::sqrt(0.48 * std::log(static_cast<double>(m)));
}

void NetworkConfig::validate() const {
  if (m == 0 || d == 0 || n == 0) throw std::invalid_argument("NetworkConfig: m, d, n must be >= 1");
  if (!(b >= 0.0)) throw std::invalid_argument("NetworkConfig: shift b must be >= 0");
}

WeightMatrix::WeightMatrix(std::size_t m, std::size_t d, Vector rows, std::vector<double> signs)
    : m_(m), d_(d), w_(std::move(rows)), a_(std::move(signs)) {
  if (w_.size() != m * d) throw std::invalid_argument("WeightMatrix: expected m*d weight entries");
  if (a_.size() != m) throw std::invalid_argument("WeightMatrix: expected m signs");
  for (double s : a_)
    if (s != 1.0 && s != -1.0) throw std::invalid_argument("WeightMatrix: signs must be +1 or -1");
  sign_sum_ = std::accumulate(a_.begin(), a_.end(), 0.0);
}

Dataset::Dataset(std::size_t d, Vector points, Vector labels)
    : d_(d), x_(std::move(points)), labels_(std::move(labels)) {
  if (d_ == 0 || labels_.empty()) throw std::invalid_argument("Dataset: need d >= 1 and n >= 1");
  if (x_.size() != labels_.size() * d_)
    throw std::invalid_argument("Dataset: point storage does not match n*d");
  for (std::size_t i = 0; i < n(); ++i) {
    const double nrm = norm2(point(i));
    if (std::abs(nrm - 1.0) > kNormTolerance)
      throw std::invalid_argument("Dataset: point " + std::to_string(i) +
                                  " is not unit norm (norm " + std::to_string(nrm) + ")");
  }
}

Dataset Dataset::with_labels(Vector labels) const {
  Dataset out(d_, x_, std::move(labels));
  out.separability_ = separability_;
  return out;
}

std::size_t FireSet::total() const noexcept {
  std::size_t s = 0;
  for (const auto& f : sets) s += f.size();
  return s;
}

std::size_t FireSet::min_size() const noexcept {
  std::size_t s = sets.empty() ? 0 : sets.front().size();
  for (const auto& f : sets) s = std::min(s, f.size());
  return s;
}

std::size_t FireSet::max_size() const noexcept {
  std::size_t s = 0;
  for (const auto& f : sets) s = std::max(s, f.size());
  return s;
}

double FireSet::mean_size() const noexcept {
  return sets.empty() ? 0.0 : static_cast<double>(total()) / static_cast<double>(sets.size());
}

WeightMatrix init_weights(const NetworkConfig& config) {
  config.validate();
  Rng rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector w(config.m * config.d);
  for (double& v : w) v = normal(rng);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> a(config.m);
  for (double& s : a) s = coin(rng) ? 1.0 : -1.0;
  return WeightMatrix(config.m, config.d, std::move(w), std::move(a));
}

std::vector<std::size_t> scan_fire_row(const WeightMatrix& w, std::span<const double> x, double b) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < w.m(); ++r)
    if (dot(w.row(r), x) >= b) out.push_back(r);
  return out;
}

FireSet query_fire_sets(const ThresholdForest& forest, double b, unsigned threads) {
  FireSet fire;
  const std::size_t n = forest.num_inputs();
  fire.sets.resize(n);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) forest.query(i, b, fire.sets[i]);
    return fire;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) forest.query(i, b, fire.sets[i]);
    });
  return fire;
}

double forward(const WeightMatrix& w, double b, std::span<const double> x,
               std::span<const std::size_t> fire_row) {
  // Non-firing neurons contribute a_r * b; fold them into b * sum(a).
  double s = b * w.sign_sum();
  for (std::size_t r : fire_row) s += w.sign(r) * (dot(w.row(r), x) - b);
  return s / std::sqrt(static_cast<double>(w.m()));
}

Vector predictions(const WeightMatrix& w, double b, const Dataset& data, const FireSet& fire) {
  if (fire.size() != data.n()) throw std::invalid_argument("predictions: fire set count != n");
  Vector f(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) f[i] = forward(w, b, data.point(i), fire[i]);
  return f;
}

double loss(std::span<const double> f, std::span<const double> y) {
  if (f.size() != y.size())
    throw std::invalid_argument("loss: prediction length " + std::to_string(f.size()) +
                                " != label length " + std::to_string(y.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += (f[i] - y[i]) * (f[i] - y[i]);
  return 0.5 * s;
}

SparseJacobian::SparseJacobian(const WeightMatrix& w, const Dataset& data, FireSet fire)
    : w_(&w), data_(&data), fire_(std::move(fire)),
      scale_(1.0 / std::sqrt(static_cast<double>(w.m()))) {
  if (fire_.size() != data.n()) throw std::invalid_argument("SparseJacobian: fire set count != n");
  if (w.d() != data.d()) throw std::invalid_argument("SparseJacobian: weight/input dimension mismatch");

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(fire_.total());
  for (std::size_t i = 0; i < fire_.size(); ++i)
    for (std::size_t r : fire_[i]) pairs.emplace_back(r, i);
  std::sort(pairs.begin(), pairs.end());
  by_neuron_.reserve(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (p == 0 || pairs[p].first != pairs[p - 1].first) {
      active_.push_back(pairs[p].first);
      offsets_.push_back(p);
    }
    by_neuron_.push_back(pairs[p].second);
  }
  offsets_.push_back(pairs.size());
}

SparseUpdate SparseJacobian::apply_jt(std::span<const double> g) const {
  if (g.size() != rows()) throw std::invalid_argument("apply_jt: vector length != n");
  const std::size_t d = w_->d();
  SparseUpdate out;
  out.d = d;
  Vector acc(d);
  for (std::size_t k = 0; k < active_.size(); ++k) {
    std::fill(acc.begin(), acc.end(), 0.0);
    bool nonzero = false;
    for (std::size_t p = offsets_[k]; p < offsets_[k + 1]; ++p) {
      const std::size_t i = by_neuron_[p];
      if (g[i] == 0.0) continue;
      nonzero = true;
      const auto x = data_->point(i);
      for (std::size_t c = 0; c < d; ++c) acc[c] += g[i] * x[c];
    }
    if (!nonzero) continue;
    const double coef = scale_ * w_->sign(active_[k]);
    out.neurons.push_back(active_[k]);
    for (std::size_t c = 0; c < d; ++c) out.deltas.push_back(coef * acc[c]);
  }
  return out;
}

Vector SparseJacobian::apply_gram(std::span<const double> v) const {
  if (v.size() != rows()) throw std::invalid_argument("apply_gram: vector length != n");
  const std::size_t d = w_->d();
  Vector out(rows(), 0.0);
  Vector u(d);
  for (std::size_t k = 0; k < active_.size(); ++k) {
    std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t p = offsets_[k]; p < offsets_[k + 1]; ++p) {
      const std::size_t i = by_neuron_[p];
      const auto x = data_->point(i);
      for (std::size_t c = 0; c < d; ++c) u[c] += v[i] * x[c];
    }
    // a_r^2 = 1, so the two sign factors cancel.
    for (std::size_t p = offsets_[k]; p < offsets_[k + 1]; ++p) {
      const std::size_t i = by_neuron_[p];
      out[i] += scale_ * scale_ * dot(data_->point(i), u);
    }
  }
  return out;
}

Matrix SparseJacobian::gram() const {
  const std::size_t n = rows();
  Matrix g(n, n);
  const double inv_m = 1.0 / static_cast<double>(w_->m());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const auto& a = fire_[i];
      const auto& b = fire_[j];
      std::size_t common = 0;
      for (std::size_t p = 0, q = 0; p < a.size() && q < b.size();) {
        if (a[p] < b[q]) {
          ++p;
        } else if (b[q] < a[p]) {
          ++q;
        } else {
          ++common;
          ++p;
          ++q;
        }
      }
      const double v = dot(data_->point(i), data_->point(j)) * static_cast<double>(common) * inv_m;
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

double SparseJacobian::gram_trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < rows(); ++i) {
    const auto x = data_->point(i);
    t += static_cast<double>(fire_[i].size()) * dot(x, x);
  }
  return t / static_cast<double>(w_->m());
}

Vector SparseJacobian::materialize_row(std::size_t i) const {
  const std::size_t d = w_->d();
  Vector row(cols(), 0.0);
  const auto x = data_->point(i);
  for (std::size_t r : fire_[i]) {
    const double coef = scale_ * w_->sign(r);
    for (std::size_t c = 0; c < d; ++c) row[r * d + c] = coef * x[c];
  }
  return row;
}

}  // namespace sparsegn
