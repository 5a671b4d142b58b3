#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>

namespace klsure {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ModelKind { Poisson, Multinomial };

/// Lowercase name used in configs and on the command line.
std::string_view to_string(ModelKind model);

/// Parses "poisson" or "multinomial"; throws ConfigError otherwise.
ModelKind parse_model_kind(std::string_view name);

/// m x k matrix of non-negative integer counts with its row totals n_i.
///
/// Counts are stored as doubles because every estimator is also evaluated
/// at real-valued perturbations of the data.
class CountMatrix {
 public:
  CountMatrix() = default;

  /// Validates that every entry is a finite non-negative integer.
  explicit CountMatrix(Matrix counts);

  const Matrix& data() const noexcept { return data_; }
  const Vector& row_totals() const noexcept { return row_totals_; }
  Eigen::Index rows() const noexcept { return data_.rows(); }
  Eigen::Index cols() const noexcept { return data_.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return data_(i, j); }

  /// Throws DegenerateInputError naming the first row with n_i = 0.
  void require_positive_totals() const;

 private:
  Matrix data_;
  Vector row_totals_;
};

/// True when every entry is in (0, 1) and each row sums to one within tol.
bool is_composition(const Matrix& p, double tol = 1e-10);

/// True when every entry is finite and strictly positive.
bool is_intensity(const Matrix& x);

/// Row-wise softmax with per-row max subtraction.
Matrix softmax_rows(const Matrix& z);

/// log sum_q exp(z_iq) for every row, computed stably.
Vector log_sum_exp_rows(const Matrix& z);

/// Omega: entrywise exp (Poisson) or row-wise softmax (multinomial).
Matrix link_forward(ModelKind model, const Matrix& z);

/// Right inverse of Omega. Poisson: entrywise log. Multinomial: log P_ij
/// minus the row mean of log P_i. Throws DomainError on a non-positive entry.
Matrix link_inverse(ModelKind model, const Matrix& p);

/// Negative log-likelihood without the terms constant in z.
///   Poisson:      sum exp(z_ij) - sum y_ij z_ij
///   Multinomial:  -sum (y_ij / n_i) z_ij + sum_i logsumexp(z_i)
/// y may hold real values; in the multinomial case n_i is the row sum of y
/// and rows with n_i = 0 contribute only their log-sum-exp term.
double nll(ModelKind model, const Matrix& y, const Matrix& z);
double nll(ModelKind model, const CountMatrix& y, const Matrix& z);

/// Gradient of nll: exp(z) - y (Poisson), softmax(z) - y/n (multinomial).
Matrix nll_grad(ModelKind model, const Matrix& y, const Matrix& z);
Matrix nll_grad(ModelKind model, const CountMatrix& y, const Matrix& z);

/// Default gradient step: 1 / max_ij y_ij for Poisson, 2 for multinomial.
/// Poisson data without any positive entry has no usable Lipschitz bound
/// and raises DegenerateInputError.
double step_size(ModelKind model, const Matrix& y);
double step_size(ModelKind model, const CountMatrix& y);

/// Lipschitz constant of the nll gradient used to validate step sizes:
/// max_ij y_ij for Poisson (on the assumed iterate box), 1/2 for multinomial.
double gradient_lipschitz(ModelKind model, const Matrix& y);

}  // namespace klsure
