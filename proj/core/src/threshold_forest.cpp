#include "sparsegn/threshold_forest.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace sparsegn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t next_pow2(std::size_t m, std::size_t& log2) {
  std::size_t p = 1;
  log2 = 0;
  while (p < m) {
    p <<= 1;
    ++log2;
  }
  return p;
}

}  // namespace

ThresholdForest::ThresholdForest(std::span<const double> weights, std::span<const double> inputs,
                                 std::size_t dim)
    : d_(dim) {
  if (dim == 0) throw std::invalid_argument("ThresholdForest: dimension must be positive");
  if (weights.size() % dim != 0 || inputs.size() % dim != 0)
    throw std::invalid_argument("ThresholdForest: flat storage is not a multiple of dim");
  m_ = weights.size() / dim;
  n_ = inputs.size() / dim;
  if (m_ == 0 || n_ == 0) throw std::invalid_argument("ThresholdForest: need m >= 1 and n >= 1");
  m_pad_ = next_pow2(m_, depth_);
  weights_.assign(weights.begin(), weights.end());
  inputs_.assign(inputs.begin(), inputs.end());
  nodes_.assign(n_ * nodes_per_tree(), kNegInf);
  // Leaves for all trees in one pass over the weights, then each tree's
  // internal levels bottom-up.
  const std::size_t first_leaf = m_pad_ - 1;
  for (std::size_t j = 0; j < m_; ++j) {
    const auto w = weight(j);
    for (std::size_t i = 0; i < n_; ++i) tree_data(i)[first_leaf + j] = dot(w, input(i));
  }
  for (std::size_t i = 0; i < n_; ++i) build_internal(i);
}

ThresholdForest ThresholdForest::from_vectors(const std::vector<Vector>& weights,
                                              const std::vector<Vector>& inputs) {
  if (weights.empty() || inputs.empty())
    throw std::invalid_argument("ThresholdForest: need m >= 1 and n >= 1");
  const std::size_t d = weights.front().size();
  std::vector<double> w, x;
  w.reserve(weights.size() * d);
  x.reserve(inputs.size() * d);
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j].size() != d)
      throw std::invalid_argument("ThresholdForest: weight " + std::to_string(j) + " has dimension " +
                                  std::to_string(weights[j].size()) + ", expected " +
                                  std::to_string(d));
    w.insert(w.end(), weights[j].begin(), weights[j].end());
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != d)
      throw std::invalid_argument("ThresholdForest: input " + std::to_string(i) + " has dimension " +
                                  std::to_string(inputs[i].size()) + ", expected " +
                                  std::to_string(d));
    x.insert(x.end(), inputs[i].begin(), inputs[i].end());
  }
  return ThresholdForest(w, x, d);
}

void ThresholdForest::build_internal(std::size_t i) {
  double* t = tree_data(i);
  for (std::size_t k = m_pad_ - 1; k-- > 0;) t[k] = std::max(t[2 * k + 1], t[2 * k + 2]);
}

void ThresholdForest::update(std::size_t j, std::span<const double> z) {
  if (j >= m_)
    throw std::out_of_range("ThresholdForest::update: weight index " + std::to_string(j) +
                            " out of range [0, " + std::to_string(m_) + ")");
  if (z.size() != d_)
    throw std::invalid_argument("ThresholdForest::update: vector has dimension " +
                                std::to_string(z.size()) + ", expected " + std::to_string(d_));
  std::copy(z.begin(), z.end(), weights_.begin() + static_cast<std::ptrdiff_t>(j * d_));
  const auto w = weight(j);
  for (std::size_t i = 0; i < n_; ++i) {
    double* t = tree_data(i);
    std::size_t k = m_pad_ - 1 + j;
    t[k] = dot(w, input(i));
    while (k > 0) {
      k = (k - 1) / 2;
      t[k] = std::max(t[2 * k + 1], t[2 * k + 2]);
    }
  }
}

std::vector<std::size_t> ThresholdForest::query(std::size_t i, double tau) const {
  std::vector<std::size_t> out;
  query(i, tau, out);
  return out;
}

QueryStats ThresholdForest::query(std::size_t i, double tau, std::vector<std::size_t>& out) const {
  const auto t = tree(i);
  QueryStats stats;
  stats.nodes_visited = 1;
  if (!(t[0] >= tau)) return stats;

  const std::size_t first_leaf = m_pad_ - 1;
  // Depth-first, left child on top, so leaves come out in ascending order.
  std::size_t stack[2 * 64];
  std::size_t top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const std::size_t k = stack[--top];
    if (k >= first_leaf) {
      const std::size_t j = k - first_leaf;
      if (j < m_) {
        out.push_back(j);
        ++stats.reported;
      }
      continue;
    }
    const std::size_t left = 2 * k + 1;
    const std::size_t right = left + 1;
    stats.nodes_visited += 2;
    if (t[right] >= tau) stack[top++] = right;
    if (t[left] >= tau) stack[top++] = left;
  }
  return stats;
}

std::span<const double> ThresholdForest::tree(std::size_t i) const {
  if (i >= n_)
    throw std::out_of_range("ThresholdForest: input index " + std::to_string(i) +
                            " out of range [0, " + std::to_string(n_) + ")");
  return {nodes_.data() + i * nodes_per_tree(), nodes_per_tree()};
}

double ThresholdForest::leaf(std::size_t i, std::size_t j) const {
  if (j >= m_) throw std::out_of_range("ThresholdForest::leaf: weight index out of range");
  return tree(i)[m_pad_ - 1 + j];
}

bool ThresholdForest::verify_tree(std::size_t i) const {
  const auto t = tree(i);
  const std::size_t first_leaf = m_pad_ - 1;
  const auto x = input(i);
  for (std::size_t j = 0; j < m_pad_; ++j) {
    const double expect = j < m_ ? dot(weight(j), x) : kNegInf;
    if (t[first_leaf + j] != expect) return false;
  }
  for (std::size_t k = 0; k < first_leaf; ++k)
    if (t[k] != std::max(t[2 * k + 1], t[2 * k + 2])) return false;
  return true;
}

}  // namespace sparsegn
