#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "klsure/count_models.hpp"

namespace klsure {

/// Settings for the accelerated proximal gradient solver.
struct FistaConfig {
  std::size_t max_iters = 100;
  /// Gradient step gamma. Unset means the model default from step_size().
  std::optional<double> step;
  double lambda = 0.0;
  /// Starting point Z0; unset means all zeros.
  std::optional<Matrix> init;
  bool record_objective = false;
  /// Penalize the row-centered matrix (default) or Z itself.
  bool center = true;
  /// false runs plain ISTA (no momentum), used for cross-checks.
  bool accelerated = true;
};

struct FitResult {
  Matrix z_hat;
  /// Objective F + lambda * penalty after each iteration, when recorded.
  std::vector<double> objective_trace;
  /// Singular values of the penalized part that survive the last
  /// thresholding; above 1e-8 * sigma_max when lambda = 0.
  std::size_t effective_rank = 0;
  double step = 0.0;
  /// Poisson only: some iterate left the box exp(Z) < max(Y) assumed by
  /// the step-size rule. Monitored, not enforced.
  bool iterate_bound_violated = false;
};

/// z - (1/k) z 1 1^T: subtracts each row's mean.
Matrix center_rows(const Matrix& z);

/// Singular value soft-thresholding: sum_i (sigma_i - threshold)_+ u_i v_i^T.
Matrix prox_nuclear(const Matrix& z, double threshold);

/// Proximal operator of threshold * ||center_rows(.)||_*: row means are kept,
/// the centered part is soft-thresholded. A singular value equal to the
/// threshold is mapped to zero.
Matrix prox_centered_nuclear(const Matrix& z, double threshold);

/// Nuclear norm of z (or of its row-centered part).
double nuclear_norm(const Matrix& z);

/// Number of singular values above rel_tol * sigma_max.
std::size_t numerical_rank(const Matrix& z, double rel_tol = 1e-8);

/// nll(model, y, z) + lambda * ||center_rows(z)||_* (or ||z||_* when !center).
double penalized_objective(ModelKind model, const Matrix& y, const Matrix& z, double lambda,
                           bool center = true);

/// Runs exactly config.max_iters FISTA iterations:
///   x_{t+1}   = prox(y_t - gamma grad F(y_t), gamma lambda)
///   rho_{t+1} = (1 + sqrt(1 + 4 rho_t^2)) / 2,  rho_0 = 1
///   y_{t+1}   = x_{t+1} + (rho_t - 1) / rho_{t+1} (x_{t+1} - x_t)
/// and returns x_T. y may hold real values (perturbed data).
/// Throws DivergenceError on a non-finite iterate.
FitResult fista_solve(ModelKind model, const Matrix& y, const FistaConfig& config);
FitResult fista_solve(ModelKind model, const CountMatrix& y, const FistaConfig& config);

/// Validates config against the data and returns the step that will be used.
double resolve_step(ModelKind model, const Matrix& y, const FistaConfig& config);

}  // namespace klsure
