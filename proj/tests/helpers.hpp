#pragma once

#include <cstdint>

#include <Eigen/SVD>

#include "klsure/count_models.hpp"
#include "klsure/optim.hpp"
#include "klsure/rng.hpp"

namespace klsure::test {

inline Matrix random_matrix(Eigen::Index m, Eigen::Index k, std::uint64_t seed, double scale = 1.0) {
  CounterRng rng(seed);
  Matrix z(m, k);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) z(i, j) = scale * rng.normal();
  }
  return z;
}

inline Matrix random_composition(Eigen::Index m, Eigen::Index k, std::uint64_t seed) {
  CounterRng rng(seed);
  Matrix p(m, k);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) p(i, j) = 0.05 + rng.uniform();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

/// Counts in [lo, hi].
inline CountMatrix random_counts(Eigen::Index m, Eigen::Index k, std::uint64_t seed, int lo, int hi) {
  CounterRng rng(seed);
  Matrix y(m, k);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      y(i, j) = lo + static_cast<double>(rng.uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
    }
  }
  return CountMatrix(y);
}

/// argmin_x 0.5 |z - x|^2 + t |center_rows(x)|_* by subgradient descent with
/// step 1/s, which makes x the running mean of z - t G_s.
inline Matrix prox_subgradient_oracle(const Matrix& z, double t, int iterations = 100000) {
  Matrix x = z;
  for (int s = 1; s <= iterations; ++s) {
    Eigen::JacobiSVD<Matrix> svd(center_rows(x), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    Matrix g = Matrix::Zero(z.rows(), z.cols());
    for (Eigen::Index r = 0; r < sv.size(); ++r) {
      if (sv(r) > 1e-12 * std::max(1.0, sv(0))) g += svd.matrixU().col(r) * svd.matrixV().col(r).transpose();
    }
    x -= (1.0 / s) * ((x - z) + t * center_rows(g));
  }
  return x;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace klsure::test
