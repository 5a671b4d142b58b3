#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "klsure/count_models.hpp"
#include "klsure/estimators.hpp"

namespace klsure {

/// A map from (possibly perturbed) data matrices to matrices, e.g. an
/// estimator or the log of one.
using MatrixMap = std::function<Matrix(const Matrix&)>;

/// Settings of the randomized Taylor approximation of the decrement map.
struct TaylorConfig {
  /// Expansion order L in [0, 6].
  int order = 2;
  /// Independent Rademacher probe sets averaged together.
  std::size_t num_probe_draws = 1;
  double fd_eps_base = 0.25;
  double fd_eps_scale = 0.1;
  std::uint64_t seed = 0;
};

inline constexpr int kMaxTaylorOrder = 6;

void validate(const TaylorConfig& config);

/// Finite-difference step of level l >= 1: base * scale^(1/l).
double fd_step(const TaylorConfig& config, int level);

/// Number of evaluations of g per probe draw: 2^(L+1) - 1.
std::size_t qhat_evaluations(int order);

/// Randomized estimate of Q_ij = g_ij(y - E_ij) for all (i, j) at once:
///
///   Q^ = sum_{l=0}^{L} (-1)^l / l! (Z1 o ... o Zl) o D_l
///
/// where Z1..ZL are independent Rademacher matrices and D_l is the l-th
/// directional derivative of g at y along Z1..Zl, approximated by nested
/// centered finite differences (level l perturbs along Zl with step fd_step(l)).
/// Probe set d is drawn from the stream derive_seed(config.seed, {d}).
/// Throws NumericalError if g returns a non-finite value.
Matrix qhat_taylor(const MatrixMap& g, const Matrix& y, const TaylorConfig& config);

/// Empirical KL risk of an estimate against the truth.
///   Poisson:     sum X^_ij - X_ij - X_ij log(X^_ij / X_ij)
///   Multinomial: sum_ij p_ij log(p_ij / p^_ij)   (per-row normalized risk)
/// A zero estimate entry yields +infinity.
double kla(ModelKind model, const Matrix& estimate, const Matrix& truth);

/// Truth-only constant separating the risk estimates from the risk:
/// sum p log p (multinomial) or sum X log X - X (Poisson).
double risk_constant(ModelKind model, const Matrix& truth);

/// Unbiased KL risk estimate for Poisson data, up to a truth-only constant:
///   sum X^_ij - sum y_ij log f_ij(y - E_ij).
/// Exact decrements unless `fast` is given, in which case the decrement
/// logs come from qhat_taylor applied to log o f.
double ukla_poisson(const EstimatorSpec& spec, const CountMatrix& y, const std::optional<TaylorConfig>& fast);
double ukla_poisson(const MatrixMap& f, const CountMatrix& y, const std::optional<TaylorConfig>& fast);

/// Multinomial risk estimate -sum_i (1/n_i) sum_j y_ij log p^_ij(y - E_ij).
double mukla_multinomial(const EstimatorSpec& spec, const CountMatrix& y,
                         const std::optional<TaylorConfig>& fast);
double mukla_multinomial(const MatrixMap& f, const CountMatrix& y, const std::optional<TaylorConfig>& fast);

/// Same with weights 1/(n_i + 1).
double mukla_plus_one_variant(const EstimatorSpec& spec, const CountMatrix& y,
                              const std::optional<TaylorConfig>& fast);
double mukla_plus_one_variant(const MatrixMap& f, const CountMatrix& y, const std::optional<TaylorConfig>& fast);

/// Matrix of log f_ij(y - E_ij) for entries with y_ij > 0 (zero elsewhere):
/// exact decrements or, with `fast`, the Taylor approximation.
Matrix decrement_log_map(const EstimatorSpec& spec, const CountMatrix& y, const std::optional<TaylorConfig>& fast);
Matrix decrement_log_map(const MatrixMap& f, const CountMatrix& y, const std::optional<TaylorConfig>& fast);

/// Removes one count from every row, choosing column j with probability
/// y_ij / n_i (row i uses stream derive_seed(seed, {i})). The result is
/// distributed as a multinomial draw with n_i - 1 trials.
CountMatrix downsample_rows(const CountMatrix& y, std::uint64_t seed);

struct CvConfig {
  std::size_t folds = 5;
  std::size_t splits = 20;
  std::uint64_t seed = 0;
};

/// One random split of the K-fold protocol.
struct CvSplit {
  /// Rows of the held-out group (size m - m1).
  std::vector<Eigen::Index> held_out_rows;
  /// true where (i, j) is in the training set Gamma.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> train_mask;
};

/// Split number `index` (stream derive_seed(config.seed, {index})).
CvSplit cv_split(Eigen::Index m, Eigen::Index k, const CvConfig& config, std::size_t index);

/// K-fold cross-validation criterion
///   (1/L) sum_l sum_{i held out} sum_j pML_ij log(pML_ij / p^_ij(Y_l))
/// with pML from the full data, Y_l zeroed outside the training set, and
/// 0 log 0 = 0. A zero prediction where pML > 0 gives +infinity.
double cv_criterion(const EstimatorSpec& spec, const CountMatrix& y, const CvConfig& config);
double cv_criterion(const MatrixMap& f, const CountMatrix& y, const CvConfig& config);

/// Risk estimates along a grid of a regularization parameter.
struct RiskCurve {
  ModelKind model = ModelKind::Multinomial;
  /// Name of the grid variable ("lambda", "w", "z").
  std::string parameter = "lambda";
  std::vector<double> grid;
  std::vector<double> ukla;
  std::optional<std::vector<double>> cv;
  std::optional<std::vector<double>> kla_oracle;
  double selected_lambda = 0.0;
  /// Value added to ukla (zero unless the truth is known).
  double constant_offset = 0.0;
  std::string constant_offset_note;
};

struct RiskCurveOptions {
  /// Taylor approximation of the decrements; exact decrements when unset.
  std::optional<TaylorConfig> taylor;
  std::optional<CvConfig> cv;
  /// Ground truth (simulation mode): enables kla_oracle and the constant offset.
  std::optional<Matrix> truth;
  /// Reuse one probe stream for every grid point instead of
  /// derive_seed(seed, {grid index}).
  bool fixed_probes = false;
  std::string parameter = "lambda";
};

/// Estimator for each grid value.
using EstimatorFamily = std::function<EstimatorSpec(double)>;

/// Evaluates ukla (Poisson) or mukla (multinomial), optional CV and oracle
/// KLA at every grid point; selects the grid value with the smallest ukla
/// (first one on ties).
RiskCurve risk_curve(ModelKind model, const EstimatorFamily& family, const CountMatrix& y,
                     const std::vector<double>& grid, const RiskCurveOptions& options);

/// Low-rank estimator over a lambda grid.
RiskCurve risk_curve(ModelKind model, const CountMatrix& y, const std::vector<double>& grid,
                     const FistaConfig& fista, const TaylorConfig& taylor, const std::optional<CvConfig>& cv,
                     const std::optional<Matrix>& truth);

/// n log-spaced points on [lo, hi]; n = 1 gives {lo}.
std::vector<double> log_grid(double lo, double hi, std::size_t n);
/// n evenly spaced points on [lo, hi]; n = 1 gives {lo}.
std::vector<double> linear_grid(double lo, double hi, std::size_t n);

}  // namespace klsure
