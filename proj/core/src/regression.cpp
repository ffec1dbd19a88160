#include "sparsegn/regression.hpp"

#include <algorithm>
#include <cmath>

namespace sparsegn {

double RegressionConfig::auto_eps(std::size_t n, double lambda_est) {
  return std::sqrt(lambda_est / static_cast<double>(n)) / 6.0;
}

std::size_t RegressionConfig::auto_max_iters(std::size_t n, double lambda_est) {
  const double bits = std::ceil(std::log2(static_cast<double>(n) / lambda_est));
  return 10 * static_cast<std::size_t>(std::max(bits, 1.0)) + 50;
}

RegressionConfig RegressionConfig::resolved(std::size_t n) const {
  RegressionConfig out = *this;
  if (out.eps_reg <= 0.0 || out.max_iters == 0) {
    if (!(lambda_est > 0.0))
      throw std::invalid_argument("RegressionConfig: lambda_est must be positive to derive defaults");
    if (out.eps_reg <= 0.0) out.eps_reg = auto_eps(n, lambda_est);
    if (out.max_iters == 0) out.max_iters = auto_max_iters(n, lambda_est);
  }
  return out;
}

double RegressionConfig::tolerance(double rhs_norm) const noexcept {
  return eps_reg * std::min(1.0, rhs_norm);
}

Matrix Preconditioner::dense() const {
  const std::size_t n = size();
  Matrix r(n, n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Vector c = apply(e);
    std::copy(c.begin(), c.end(), r.col(j).begin());
    e[j] = 0.0;
  }
  return r;
}

namespace {

Preconditioner checked_qr(Matrix a, double scale) {
  Matrix r = householder_r(std::move(a));
  const double floor = 1e-12 * scale;
  for (std::size_t i = 0; i < r.rows(); ++i)
    if (!(std::abs(r(i, i)) >= floor) || scale == 0.0)
      throw RankDeficientError("qr_precondition: sketched Jacobian is rank deficient (pivot " +
                               std::to_string(i) + ")");
  return Preconditioner(std::move(r));
}

}  // namespace

Preconditioner qr_precondition(const Matrix& b) {
  if (b.rows() < b.cols()) throw std::invalid_argument("qr_precondition: need s >= n rows");
  return checked_qr(b, b.frobenius_norm());
}

Preconditioner qr_precondition(const Matrix& b, double ridge) {
  if (b.rows() < b.cols()) throw std::invalid_argument("qr_precondition: need s >= n rows");
  if (!(ridge >= 0.0)) throw std::invalid_argument("qr_precondition: ridge must be >= 0");
  const std::size_t s = b.rows();
  const std::size_t n = b.cols();
  Matrix aug(s + n, n);
  const double root = std::sqrt(ridge);
  for (std::size_t j = 0; j < n; ++j) {
    std::copy(b.col(j).begin(), b.col(j).end(), aug.col(j).begin());
    aug(s + j, j) = root;
  }
  const double scale = aug.frobenius_norm();
  return checked_qr(std::move(aug), scale);
}

RegressionResult solve(const GramOperator& apply_m, const Preconditioner& precond,
                       std::span<const double> y_reg, const RegressionConfig& config) {
  const std::size_t n = y_reg.size();
  if (precond.size() != n) throw std::invalid_argument("solve: preconditioner size != n");
  if (!(config.eps_reg > 0.0)) throw std::invalid_argument("solve: eps_reg must be positive");

  const double tol = config.tolerance(norm2(y_reg));
  RegressionResult out;
  Vector z(n, 0.0);
  Vector g(n, 0.0);
  Vector residual(n);
  for (std::size_t k = 0;; ++k) {
    g = precond.apply(z);
    const Vector mg = apply_m(g);
    for (std::size_t i = 0; i < n; ++i) residual[i] = mg[i] - y_reg[i];
    const double rn = norm2(residual);
    if (std::isnan(rn))
      throw NumericalError("solve: residual became NaN after " + std::to_string(k) + " iterations");
    out.residual_history.push_back(rn);
    out.final_residual = rn;
    out.iterations = k;
    if (rn < tol || rn == 0.0) {
      out.converged = true;
      break;
    }
    if (k == config.max_iters) break;
    // N z - R^T y = R^T (M R z - y); N is symmetric so N^T = R^T M R.
    const Vector t = precond.apply_transposed(residual);
    const Vector mt = apply_m(precond.apply(t));
    const Vector step = precond.apply_transposed(mt);
    for (std::size_t i = 0; i < n; ++i) z[i] -= step[i];
  }
  out.g = std::move(g);
  return out;
}

}  // namespace sparsegn
