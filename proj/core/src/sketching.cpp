#include "sparsegn/sketching.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "sparsegn/network.hpp"
#include "sparsegn/rng.hpp"

namespace sparsegn {

std::size_t SketchSpec::auto_rows(std::size_t n, double eps, double delta, double c_s) {
  const double nd = static_cast<double>(n);
  const double s = std::ceil(c_s * nd * std::log(nd / delta) / (eps * eps));
  if (!(s < static_cast<double>(std::numeric_limits<std::uint32_t>::max())))
    throw std::invalid_argument("SketchSpec: row count overflows");
  return std::max(n, static_cast<std::size_t>(s));
}

void SketchSpec::validate() const {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("SketchSpec: eps must lie in (0, 1)");
  if (delta && !(*delta > 0.0 && *delta < 1.0))
    throw std::invalid_argument("SketchSpec: delta must lie in (0, 1)");
  if (!(c_s > 0.0)) throw std::invalid_argument("SketchSpec: c_s must be positive");
}

SketchSpec SketchSpec::resolved(std::size_t n) const {
  validate();
  SketchSpec out = *this;
  if (!out.delta) out.delta = 1.0 / std::pow(static_cast<double>(n), 3.0);
  // n = 1 gives delta = 1; clamp so ln(n / delta) stays positive.
  if (*out.delta >= 1.0) out.delta = 0.5;
  if (out.rows == 0) out.rows = auto_rows(n, eps, *out.delta, c_s);
  if (out.rows < n) throw std::invalid_argument("SketchSpec: need at least n sketch rows");
  return out;
}

SketchOperator::SketchOperator(SketchMode mode, std::size_t rows, std::size_t ambient_dim,
                               std::uint64_t seed)
    : mode_(mode), rows_(rows), ambient_(ambient_dim), seed_(seed), key_(splitmix64(seed)) {
  if (rows == 0 || ambient_dim == 0)
    throw std::invalid_argument("SketchOperator: rows and ambient dimension must be positive");
  if (rows > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("SketchOperator: too many rows");
}

std::size_t SketchOperator::bucket(std::size_t c) const noexcept {
  const std::uint64_t h = splitmix64(key_ ^ static_cast<std::uint64_t>(c));
  return static_cast<std::size_t>(((h >> 32) * static_cast<std::uint64_t>(rows_)) >> 32);
}

double SketchOperator::sign(std::size_t c) const noexcept {
  const std::uint64_t h = splitmix64(key_ ^ static_cast<std::uint64_t>(c));
  return (h & 1u) ? 1.0 : -1.0;
}

std::size_t SketchOperator::accumulate(std::size_t coord, double value,
                                       std::span<double> out) const {
  if (mode_ == SketchMode::sparse_embedding) {
    out[bucket(coord)] += sign(coord) * value;
    return 1;
  }
  Rng rng(derive_seed(seed_, coord));
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(rows_)));
  for (std::size_t r = 0; r < rows_; ++r) out[r] += normal(rng) * value;
  return rows_;
}

Vector SketchOperator::apply(std::span<const double> x) const {
  if (x.size() != ambient_) throw std::invalid_argument("SketchOperator::apply: dimension mismatch");
  Vector out(rows_, 0.0);
  for (std::size_t c = 0; c < x.size(); ++c)
    if (x[c] != 0.0) accumulate(c, x[c], out);
  return out;
}

Matrix SketchOperator::apply(const Matrix& a) const {
  if (a.rows() != ambient_) throw std::invalid_argument("SketchOperator::apply: dimension mismatch");
  Matrix out(rows_, a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    auto src = a.col(j);
    auto dst = out.col(j);
    for (std::size_t c = 0; c < ambient_; ++c)
      if (src[c] != 0.0) accumulate(c, src[c], dst);
  }
  return out;
}

Matrix SketchOperator::materialize() const {
  Matrix s(rows_, ambient_);
  for (std::size_t c = 0; c < ambient_; ++c) accumulate(c, 1.0, s.col(c));
  return s;
}

SketchOperator build_sketch(const SketchSpec& spec, std::size_t ambient_dim) {
  spec.validate();
  if (spec.rows == 0) throw std::invalid_argument("build_sketch: resolve the row count first");
  return SketchOperator(spec.mode, spec.rows, ambient_dim, spec.seed);
}

Matrix sketch_jacobian(const SketchOperator& op, const SparseJacobian& jac) {
  if (op.ambient_dim() != jac.cols())
    throw std::invalid_argument("sketch_jacobian: sketch ambient dimension != m*d");
  const std::size_t d = jac.weights().d();
  Matrix b(op.rows(), jac.rows());
  for (std::size_t i = 0; i < jac.rows(); ++i) {
    auto col = b.col(i);
    const auto x = jac.data().point(i);
    for (std::size_t r : jac.fire()[i]) {
      const double coef = jac.scale() * jac.weights().sign(r);
      for (std::size_t c = 0; c < d; ++c)
        if (x[c] != 0.0) op.accumulate(r * d + c, coef * x[c], col);
    }
  }
  return b;
}

}  // namespace sparsegn
