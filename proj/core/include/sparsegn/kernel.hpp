#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "sparsegn/linalg.hpp"

namespace sparsegn {

class Dataset;
class WeightMatrix;

enum class KernelKind { discrete, continuous_mc };

/// Shifted NTK Gram matrix, H_ij = x_i.x_j Pr[both x_i and x_j fire].
struct KernelMatrix {
  Matrix entries;
  KernelKind kind = KernelKind::discrete;
  std::size_t samples_used = 0;  // neurons for discrete, draws for continuous_mc
};

struct SeparabilityReport {
  double delta = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  bool plus = false;  // minimiser was ||x_i + x_j|| rather than ||x_i - x_j||
};

/// min over i != j of min(||x_i + x_j||, ||x_i - x_j||). Needs n >= 2.
SeparabilityReport separability(const Dataset& data);

/// (1/m) sum_r x_i.x_j 1{w_r.x_i >= b, w_r.x_j >= b}.
KernelMatrix h_dis(const WeightMatrix& w, const Dataset& data, double b);

/// Monte-Carlo estimate of E_{w ~ N(0, I)}[x_i.x_j 1{w.x_i >= b, w.x_j >= b}].
/// Samples are drawn in fixed-size chunks with per-chunk seeds, so the result
/// does not depend on `threads`.
KernelMatrix h_cts_mc(const Dataset& data, double b, std::size_t num_samples, std::uint64_t seed,
                      unsigned threads = 1);

/// Smallest eigenvalue via tridiagonalization + implicit QL.
/// Throws std::invalid_argument on non-symmetric input.
double lambda_min(const Matrix& k);
inline double lambda_min(const KernelMatrix& k) { return lambda_min(k.entries); }

/// exp(-b^2/2) * delta / (100 n^2) and exp(-b^2/2): the interval that must
/// contain lambda_min of the continuous kernel for delta-separable data.
double lambda_lower_bound(double b, double delta, std::size_t n);
double lambda_upper_bound(double b);

struct SandwichReport {
  double lambda_hat = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double tol = 0.0;  // 5 n / sqrt(samples)
  double delta = 0.0;
  std::size_t samples = 0;
  bool pass = false;
  std::string warning;
};

SandwichReport sandwich_check(const Dataset& data, double b, std::size_t num_samples,
                              std::uint64_t seed, unsigned threads = 1);

}  // namespace sparsegn
