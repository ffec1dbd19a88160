#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

#include "sparsegn/linalg.hpp"

namespace sparsegn {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// QR of the sketched matrix found a near-zero pivot.
class RankDeficientError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct RegressionConfig {
  double lambda_est = 0.0;     // estimate of lambda_min of the NTK
  double eps_reg = 0.0;        // 0: (1/6) sqrt(lambda_est / n)
  std::size_t max_iters = 0;   // 0: 10 ceil(log2(n / lambda_est)) + 50

  static double auto_eps(std::size_t n, double lambda_est);
  static std::size_t auto_max_iters(std::size_t n, double lambda_est);

  RegressionConfig resolved(std::size_t n) const;

  /// Stopping threshold for a right-hand side of norm `rhs_norm`:
  /// eps_reg * min(1, rhs_norm). Never looser than eps_reg in absolute terms,
  /// and relative to ||y_reg|| once the residual is below one.
  double tolerance(double rhs_norm) const noexcept;
};

/// R = Rhat^{-1} where S A = Q Rhat, so (S A) R has orthonormal columns.
/// R is applied through triangular solves; the inverse is never formed.
class Preconditioner {
 public:
  explicit Preconditioner(Matrix r_hat) : r_hat_(std::move(r_hat)) {}

  std::size_t size() const noexcept { return r_hat_.rows(); }
  const Matrix& r_hat() const noexcept { return r_hat_; }

  Vector apply(std::span<const double> z) const { return solve_upper(r_hat_, z); }
  Vector apply_transposed(std::span<const double> y) const { return solve_upper_transposed(r_hat_, y); }

  /// Explicit R, for tests.
  Matrix dense() const;

 private:
  Matrix r_hat_;
};

struct RegressionResult {
  Vector g;
  std::size_t iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  Vector residual_history;  // ||M g_k - y_reg|| before each update
};

/// Householder QR of B (s x n, s >= n). Throws RankDeficientError when some
/// |Rhat_ii| < 1e-12 ||B||_F.
Preconditioner qr_precondition(const Matrix& b);

/// QR of [B; sqrt(ridge) I], matching the regularised operator M + ridge I.
Preconditioner qr_precondition(const Matrix& b, double ridge);

using GramOperator = std::function<Vector(std::span<const double>)>;

/// Preconditioned Landweber iteration for M g = y_reg with M = J J^T:
///   z <- z - N^T (N z - R^T y_reg),  N = R^T M R,  z_0 = 0,
/// stopping once ||M R z - y_reg|| < config.tolerance(||y_reg||).
/// Returns g = R z. Each iteration makes two calls to apply_m.
/// Throws NumericalError if the residual becomes NaN.
RegressionResult solve(const GramOperator& apply_m, const Preconditioner& precond,
                       std::span<const double> y_reg, const RegressionConfig& config);

}  // namespace sparsegn
