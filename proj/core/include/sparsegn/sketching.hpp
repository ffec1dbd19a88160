#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "sparsegn/linalg.hpp"

namespace sparsegn {

class SparseJacobian;

enum class SketchMode { sparse_embedding, gaussian };

/// Parameters of the oblivious subspace embedding used to precondition the
/// Gauss-Newton regression.
struct SketchSpec {
  double eps = 0.1;
  std::optional<double> delta;  // failure probability; n^-3 when unset
  std::size_t rows = 0;         // 0: derive from the row formula
  double c_s = 8.0;
  std::uint64_t seed = 0;
  SketchMode mode = SketchMode::sparse_embedding;

  /// ceil(c_s * n * ln(n / delta) / eps^2), never fewer than n rows.
  static std::size_t auto_rows(std::size_t n, double eps, double delta, double c_s);

  void validate() const;
  /// Copy with `rows` and `delta` filled in for an n-column target.
  SketchSpec resolved(std::size_t n) const;
};

/// s x N sketching matrix, never stored. In sparse_embedding mode column c of
/// S has a single +-1 in a hashed row, so E||Sx||^2 = ||x||^2 and applying S
/// to a z-sparse vector costs z operations. Gaussian mode (N(0, 1/s)
/// entries, generated per column from the seed) exists as a test oracle.
class SketchOperator {
 public:
  SketchOperator(SketchMode mode, std::size_t rows, std::size_t ambient_dim, std::uint64_t seed);

  SketchMode mode() const noexcept { return mode_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t ambient_dim() const noexcept { return ambient_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// out += value * S e_coord. Returns the number of output entries touched.
  std::size_t accumulate(std::size_t coord, double value, std::span<double> out) const;

  Vector apply(std::span<const double> x) const;
  /// S * A for a dense N x k matrix A.
  Matrix apply(const Matrix& a) const;
  /// Explicit s x N matrix; for small test instances only.
  Matrix materialize() const;

  /// Target row and sign of ambient coordinate c (sparse_embedding mode).
  std::size_t bucket(std::size_t c) const noexcept;
  double sign(std::size_t c) const noexcept;

 private:
  SketchMode mode_;
  std::size_t rows_;
  std::size_t ambient_;
  std::uint64_t seed_;
  std::uint64_t key_;
};

SketchOperator build_sketch(const SketchSpec& spec, std::size_t ambient_dim);

/// B = S A with A = J^T, built column by column from the fire-set support in
/// O(d * |S_i,fire|) per column (sparse_embedding mode).
Matrix sketch_jacobian(const SketchOperator& op, const SparseJacobian& jac);

}  // namespace sparsegn
