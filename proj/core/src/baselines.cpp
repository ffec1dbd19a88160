#include "sparsegn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sparsegn {

namespace {

// One pass over the neurons that writes every entry of the Jacobian exactly
// once and, while each column block is still in cache, accumulates J J^T and
// the predictions. The prediction sums follow forward()'s order, so the
// result is bitwise identical to the fire-set evaluation.
void fill_jacobian(const WeightMatrix& w, const Dataset& data, double b, Matrix& out,
                   Matrix* gram, Vector* f) {
  const std::size_t n = data.n();
  const std::size_t d = w.d();
  const double scale = 1.0 / std::sqrt(static_cast<double>(w.m()));
  if (out.rows() != n || out.cols() != w.m() * d) out = Matrix(n, w.m() * d);
  if (gram) *gram = Matrix(n, n);
  if (f) f->assign(n, b * w.sign_sum());
  std::vector<char> fired(n);
  std::vector<std::size_t> active;
  active.reserve(n);
  for (std::size_t r = 0; r < w.m(); ++r) {
    const double a = w.sign(r);
    const double coef = scale * a;
    active.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const double p = dot(w.row(r), data.point(i));
      fired[i] = p >= b;
      if (!fired[i]) continue;
      active.push_back(i);
      if (f) (*f)[i] += a * (p - b);
    }
    for (std::size_t c = 0; c < d; ++c) {
      const auto col = out.col(r * d + c);
      for (std::size_t i = 0; i < n; ++i) col[i] = fired[i] ? coef * data.point(i)[c] : 0.0;
      if (!gram) continue;
      for (std::size_t q : active)
        for (std::size_t p : active) (*gram)(p, q) += col[p] * col[q];
    }
  }
  if (f)
    for (double& v : *f) v /= std::sqrt(static_cast<double>(w.m()));
}

}  // namespace

Matrix dense_jacobian(const WeightMatrix& w, const Dataset& data, double b) {
  Matrix j;
  fill_jacobian(w, data, b, j, nullptr, nullptr);
  return j;
}

void dense_jacobian(const WeightMatrix& w, const Dataset& data, double b, Matrix& out) {
  fill_jacobian(w, data, b, out, nullptr, nullptr);
}

Vector dense_predictions(const WeightMatrix& w, const Dataset& data, double b) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(w.m()));
  Vector f(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    double s = 0.0;
    for (std::size_t r = 0; r < w.m(); ++r) s += w.sign(r) * std::max(dot(w.row(r), data.point(i)), b);
    f[i] = scale * s;
  }
  return f;
}

Vector pinv_solve(const Matrix& g, std::span<const double> rhs, double rel_cutoff) {
  if (g.rows() != rhs.size()) throw std::invalid_argument("pinv_solve: size mismatch");
  const SymmetricEigen eig = symmetric_eigen(g, true);
  const std::size_t n = rhs.size();
  Vector out(n, 0.0);
  if (n == 0) return out;
  const double lmax = eig.values.back();
  if (!(lmax > 0.0)) return out;
  const double cutoff = rel_cutoff * lmax;
  for (std::size_t k = 0; k < n; ++k) {
    if (eig.values[k] <= cutoff) continue;
    const auto v = eig.vectors.col(k);
    const double coef = dot(v, rhs) / eig.values[k];
    for (std::size_t i = 0; i < n; ++i) out[i] += coef * v[i];
  }
  return out;
}

DenseStep dense_gauss_newton_step(const WeightMatrix& w, const Dataset& data, double b) {
  Matrix workspace;
  return dense_gauss_newton_step(w, data, b, workspace);
}

DenseStep dense_gauss_newton_step(const WeightMatrix& w, const Dataset& data, double b,
                                  Matrix& workspace) {
  const std::size_t n = data.n();
  Matrix gram;
  Vector f;
  fill_jacobian(w, data, b, workspace, &gram, &f);
  const Matrix& j = workspace;
  Vector rhs(n);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = f[i] - data.label(i);
  Vector g = pinv_solve(gram, rhs);

  Vector rows(w.flat().begin(), w.flat().end());
  for (std::size_t k = 0; k < j.cols(); ++k) rows[k] -= dot(j.col(k), g);
  std::vector<double> signs(w.signs().begin(), w.signs().end());
  return {std::move(g), WeightMatrix(w.m(), w.d(), std::move(rows), std::move(signs)),
          std::move(gram), std::move(f)};
}

Vector loss_gradient(const WeightMatrix& w, const Dataset& data, double b) {
  const std::size_t d = w.d();
  const double scale = 1.0 / std::sqrt(static_cast<double>(w.m()));
  const Vector f = dense_predictions(w, data, b);
  Vector grad(w.m() * d, 0.0);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double resid = f[i] - data.label(i);
    if (resid == 0.0) continue;
    const auto x = data.point(i);
    for (std::size_t r = 0; r < w.m(); ++r) {
      if (!(dot(w.row(r), x) >= b)) continue;
      const double coef = scale * resid * w.sign(r);
      for (std::size_t c = 0; c < d; ++c) grad[r * d + c] += coef * x[c];
    }
  }
  return grad;
}

WeightMatrix gd_step(const WeightMatrix& w, const Dataset& data, double b, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("gd_step: learning rate must be positive");
  const Vector grad = loss_gradient(w, data, b);
  Vector rows(w.flat().begin(), w.flat().end());
  for (std::size_t k = 0; k < rows.size(); ++k) rows[k] -= lr * grad[k];
  std::vector<double> signs(w.signs().begin(), w.signs().end());
  return WeightMatrix(w.m(), w.d(), std::move(rows), std::move(signs));
}

std::vector<std::size_t> brute_threshold(std::span<const double> weights,
                                         std::span<const double> inputs, std::size_t dim,
                                         std::size_t i, double tau) {
  const std::size_t m = weights.size() / dim;
  const auto x = inputs.subspan(i * dim, dim);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < m; ++j)
    if (dot(weights.subspan(j * dim, dim), x) >= tau) out.push_back(j);
  return out;
}

}  // namespace sparsegn
