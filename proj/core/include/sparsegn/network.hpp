#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sparsegn/linalg.hpp"

namespace sparsegn {

class ThresholdForest;

struct NetworkConfig {
  std::size_t m = 1;  // hidden neurons
  std::size_t d = 1;  // input dimension
  std::size_t n = 1;  // batch size
  double b = 0.0;     // activation shift, phi(x) = max(x, b)
  std::uint64_t seed = 0;

  /// sqrt(0.48 ln m): fire sets of size ~m^0.76 at Gaussian init.
  static double auto_shift(std::size_t m);
  void validate() const;
};

/// First-layer weights w_r (row-major, m x d) and the fixed output signs a_r.
class WeightMatrix {
 public:
  WeightMatrix(std::size_t m, std::size_t d, Vector rows, std::vector<double> signs);

  std::size_t m() const noexcept { return m_; }
  std::size_t d() const noexcept { return d_; }

  std::span<const double> row(std::size_t r) const noexcept { return {w_.data() + r * d_, d_}; }
  std::span<double> row(std::size_t r) noexcept { return {w_.data() + r * d_, d_}; }
  std::span<const double> flat() const noexcept { return w_; }

  double sign(std::size_t r) const noexcept { return a_[r]; }
  std::span<const double> signs() const noexcept { return a_; }
  double sign_sum() const noexcept { return sign_sum_; }

 private:
  std::size_t m_;
  std::size_t d_;
  Vector w_;
  std::vector<double> a_;
  double sign_sum_;
};

/// n unit-norm points (row-major, n x d) with real labels.
class Dataset {
 public:
  static constexpr double kNormTolerance = 1e-12;

  Dataset(std::size_t d, Vector points, Vector labels);

  std::size_t n() const noexcept { return labels_.size(); }
  std::size_t d() const noexcept { return d_; }
  std::span<const double> point(std::size_t i) const noexcept { return {x_.data() + i * d_, d_}; }
  std::span<const double> points() const noexcept { return x_; }
  std::span<const double> labels() const noexcept { return labels_; }
  double label(std::size_t i) const noexcept { return labels_[i]; }

  Dataset with_labels(Vector labels) const;

  std::optional<double> separability() const noexcept { return separability_; }
  void cache_separability(double delta) noexcept { separability_ = delta; }

 private:
  std::size_t d_;
  Vector x_;
  Vector labels_;
  std::optional<double> separability_;
};

/// Per-input sorted lists of neurons with <w_r, x_i> >= b.
struct FireSet {
  std::vector<std::vector<std::size_t>> sets;

  std::size_t size() const noexcept { return sets.size(); }
  const std::vector<std::size_t>& operator[](std::size_t i) const noexcept { return sets[i]; }
  std::size_t total() const noexcept;
  std::size_t min_size() const noexcept;
  std::size_t max_size() const noexcept;
  double mean_size() const noexcept;
};

/// Sparse weight-space vector: neuron r = neurons[k] moves by deltas[k*d, (k+1)*d).
struct SparseUpdate {
  std::size_t d = 0;
  std::vector<std::size_t> neurons;
  Vector deltas;

  bool empty() const noexcept { return neurons.empty(); }
  std::span<const double> delta(std::size_t k) const noexcept { return {deltas.data() + k * d, d}; }
};

WeightMatrix init_weights(const NetworkConfig& config);

/// Fire set of x by linear scan; reference path when no forest is available.
std::vector<std::size_t> scan_fire_row(const WeightMatrix& w, std::span<const double> x, double b);

/// Fire sets via forest.query(i, b) for every input.
FireSet query_fire_sets(const ThresholdForest& forest, double b, unsigned threads = 1);

/// f(W, x, a) evaluated from the fire set in O(|fire_row| d).
/// `fire_row` must equal { r : <w_r, x> >= b }; a stale set is not detected.
double forward(const WeightMatrix& w, double b, std::span<const double> x,
               std::span<const std::size_t> fire_row);

Vector predictions(const WeightMatrix& w, double b, const Dataset& data, const FireSet& fire);

/// 0.5 * ||f - y||^2
double loss(std::span<const double> f, std::span<const double> y);

/// The n x (m d) Jacobian of f with respect to W, kept implicit: row i has
/// block r equal to a_r x_i / sqrt(m) when r fires for x_i, zero otherwise.
/// Holds references to `w` and `data`; both must outlive it and stay unchanged.
class SparseJacobian {
 public:
  SparseJacobian(const WeightMatrix& w, const Dataset& data, FireSet fire);

  std::size_t rows() const noexcept { return fire_.size(); }
  std::size_t cols() const noexcept { return w_->m() * w_->d(); }
  double scale() const noexcept { return scale_; }
  const FireSet& fire() const noexcept { return fire_; }
  const WeightMatrix& weights() const noexcept { return *w_; }
  const Dataset& data() const noexcept { return *data_; }

  /// Union of fire sets, ascending.
  std::span<const std::size_t> active_neurons() const noexcept { return active_; }

  /// J^T g restricted to its support.
  SparseUpdate apply_jt(std::span<const double> g) const;
  /// J (J^T v).
  Vector apply_gram(std::span<const double> v) const;
  /// G = J J^T via (G)_ij = x_i.x_j |S_i n S_j| / m.
  Matrix gram() const;
  double gram_trace() const;

  Vector materialize_row(std::size_t i) const;

 private:
  const WeightMatrix* w_;
  const Dataset* data_;
  FireSet fire_;
  double scale_;
  // Neuron-major view: inputs firing neuron active_[k] are
  // by_neuron_[offsets_[k] .. offsets_[k+1]).
  std::vector<std::size_t> active_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> by_neuron_;
};

}  // namespace sparsegn
