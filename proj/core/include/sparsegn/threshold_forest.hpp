#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sparsegn/linalg.hpp"

namespace sparsegn {

/// Work counter filled in by an instrumented query.
struct QueryStats {
  std::size_t nodes_visited = 0;
  std::size_t reported = 0;
};

/// n max-trees over the m inner products <w_j, x_i>, answering
/// "which j have <w_j, x_i> >= tau" in time proportional to the answer.
///
/// Each tree is a flat implicit heap of 2*m_pad - 1 values, where m_pad is m
/// rounded up to a power of two. Node k has children 2k+1 and 2k+2; leaf j
/// lives at m_pad - 1 + j. Padding leaves hold -inf and are never reported.
///
/// Queries are const and may run concurrently. update() needs exclusive access.
class ThresholdForest {
 public:
  /// `weights` is m*dim row-major, `inputs` is n*dim row-major.
  ThresholdForest(std::span<const double> weights, std::span<const double> inputs, std::size_t dim);

  /// Validates each vector's dimension and names the first offender.
  static ThresholdForest from_vectors(const std::vector<Vector>& weights,
                                      const std::vector<Vector>& inputs);

  void update(std::size_t j, std::span<const double> z);

  std::vector<std::size_t> query(std::size_t i, double tau) const;
  /// Appends matches to `out` in ascending order.
  QueryStats query(std::size_t i, double tau, std::vector<std::size_t>& out) const;

  std::size_t num_inputs() const noexcept { return n_; }
  std::size_t num_weights() const noexcept { return m_; }
  std::size_t dim() const noexcept { return d_; }
  std::size_t padded_leaves() const noexcept { return m_pad_; }
  std::size_t nodes_per_tree() const noexcept { return 2 * m_pad_ - 1; }
  /// ceil(log2 m): number of edges on a root-to-leaf path.
  std::size_t depth() const noexcept { return depth_; }

  std::span<const double> tree(std::size_t i) const;
  double leaf(std::size_t i, std::size_t j) const;
  double root(std::size_t i) const { return tree(i)[0]; }
  std::span<const double> weight(std::size_t j) const { return {weights_.data() + j * d_, d_}; }
  std::span<const double> input(std::size_t i) const { return {inputs_.data() + i * d_, d_}; }

  /// Recomputes tree i from the stored vectors and compares every node bitwise.
  bool verify_tree(std::size_t i) const;

  /// Bitwise equality of all node values.
  bool same_nodes(const ThresholdForest& other) const noexcept { return nodes_ == other.nodes_; }

 private:
  void build_internal(std::size_t i);
  double* tree_data(std::size_t i) noexcept { return nodes_.data() + i * nodes_per_tree(); }

  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::size_t d_ = 0;
  std::size_t m_pad_ = 1;
  std::size_t depth_ = 0;
  std::vector<double> weights_;
  std::vector<double> inputs_;
  std::vector<double> nodes_;
};

}  // namespace sparsegn
