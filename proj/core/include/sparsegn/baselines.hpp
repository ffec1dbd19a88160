#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sparsegn/linalg.hpp"
#include "sparsegn/network.hpp"

namespace sparsegn {

// Dense reference paths. All of these cost Theta(m n d) or more and exist to
// check the sparse machinery and to serve as the linear-cost CPI baseline.

/// Explicit n x (m d) Jacobian; block (i, r) = a_r 1{w_r.x_i >= b} x_i / sqrt(m).
Matrix dense_jacobian(const WeightMatrix& w, const Dataset& data, double b);
/// As above, writing into `out` and reusing its storage when the shape matches.
void dense_jacobian(const WeightMatrix& w, const Dataset& data, double b, Matrix& out);

/// (1/sqrt(m)) sum_r a_r max(<w_r, x_i>, b) for every input, scanning all m neurons.
Vector dense_predictions(const WeightMatrix& w, const Dataset& data, double b);

/// Solves G g = rhs for symmetric PSD G with the eigen-decomposition
/// pseudo-inverse; eigenvalues below rel_cutoff * lambda_max are dropped.
Vector pinv_solve(const Matrix& g, std::span<const double> rhs, double rel_cutoff = 1e-10);

struct DenseStep {
  Vector g;           // argmin ||J J^T g - (f - y)||
  WeightMatrix next;  // W - J^T g
  Matrix gram;        // J J^T
  Vector f;           // predictions before the step, from a full scan of all m neurons
};

DenseStep dense_gauss_newton_step(const WeightMatrix& w, const Dataset& data, double b);
/// Same step with the Jacobian built in `workspace`, so repeated calls do not
/// reallocate the n x (m d) buffer.
DenseStep dense_gauss_newton_step(const WeightMatrix& w, const Dataset& data, double b,
                                  Matrix& workspace);

/// dL/dW for L = 0.5 ||f - y||^2, flattened m x d.
Vector loss_gradient(const WeightMatrix& w, const Dataset& data, double b);

/// W - lr * dL/dW.
WeightMatrix gd_step(const WeightMatrix& w, const Dataset& data, double b, double lr);

/// { j : <w_j, x_i> >= tau } by linear scan over row-major storage.
std::vector<std::size_t> brute_threshold(std::span<const double> weights,
                                         std::span<const double> inputs, std::size_t dim,
                                         std::size_t i, double tau);

}  // namespace sparsegn
