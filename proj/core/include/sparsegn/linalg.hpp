#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace sparsegn {

using Vector = std::vector<double>;

/// Dense column-major matrix. Column j occupies data()[j*rows, (j+1)*rows).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i + j * rows_]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i + j * rows_]; }

  std::span<double> col(std::size_t j) noexcept { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const noexcept {
    return {data_.data() + j * rows_, rows_};
  }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  Matrix transposed() const;
  double frobenius_norm() const;
  bool is_symmetric(double tol) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double norm2(std::span<const double> a) noexcept;

/// Upper-triangular factor of a Householder QR of a tall matrix (rows >= cols).
/// The orthogonal factor is discarded.
Matrix householder_r(Matrix a);

/// Solves U x = b for upper-triangular U.
Vector solve_upper(const Matrix& u, std::span<const double> b);
/// Solves U^T x = b for upper-triangular U.
Vector solve_upper_transposed(const Matrix& u, std::span<const double> b);

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // column k pairs with values[k]; empty when not requested
};

/// Householder tridiagonalization followed by implicit QL iterations.
/// Throws std::invalid_argument for non-square or non-symmetric input, and
/// std::runtime_error if QL fails to converge.
SymmetricEigen symmetric_eigen(const Matrix& a, bool want_vectors = true);

}  // namespace sparsegn
