#pragma once

#include <variant>

#include "klsure/count_models.hpp"
#include "klsure/optim.hpp"

namespace klsure {

/// Maximum likelihood composition p_ij = y_ij / n_i.
struct MlSpec {};

/// Zero replacement: p_ij proportional to max(y_ij, z), z in (0, 1).
struct ZeroReplaceSpec {
  double z = 0.5;
};

/// Shrinkage toward the uniform composition:
///   p_ij = 1/k + w (y+_ij - (1/k) sum_q y+_iq) / (eps + sum_q y+_iq),  y+ = max(0, y).
struct SimpleShrinkSpec {
  double w = 1.0;
  double eps = 0.5;
};

/// Nuclear-norm penalized maximum likelihood, solved by FISTA and mapped
/// through the link. `lambda` overrides fista.lambda.
struct LowRankSpec {
  ModelKind model = ModelKind::Multinomial;
  double lambda = 0.0;
  FistaConfig fista;
};

using EstimatorSpec = std::variant<MlSpec, ZeroReplaceSpec, SimpleShrinkSpec, LowRankSpec>;

/// Poisson only for a Poisson LowRankSpec; every other spec is multinomial.
ModelKind model_of(const EstimatorSpec& spec);

/// Throws ConfigError when a parameter is out of range.
void validate(const EstimatorSpec& spec);

/// Fixes an unset LowRank step to the default for data y, so that refits on
/// decremented or perturbed copies of y all use one step size.
EstimatorSpec pin_step(const EstimatorSpec& spec, const Matrix& y);

struct Estimate {
  /// Composition (rows sum to one) or intensity matrix.
  Matrix values;
  /// Set when some entry is exactly zero (maximum likelihood on sparse rows).
  bool has_zero_entries = false;
};

/// Applies the estimator to validated counts. Multinomial specs other than
/// SimpleShrink reject rows with n_i = 0 (DegenerateInputError).
Estimate estimate(const EstimatorSpec& spec, const CountMatrix& y);

/// The estimator as a map on real matrices, used for perturbed and
/// decremented data. ML and ZeroReplace reject negative entries and empty
/// rows; SimpleShrink clamps through y+; LowRank accepts any finite input
/// (empty multinomial rows get zero data weight).
Matrix evaluate_estimator(const EstimatorSpec& spec, const Matrix& y);

/// Row i of the estimate at y - E_ij. SimpleShrink, ML and ZeroReplace use
/// closed forms; LowRank refits on the decremented matrix. Decrementing a
/// zero entry is a DomainError for every estimator except SimpleShrink.
Vector estimate_at_decrement(const EstimatorSpec& spec, const CountMatrix& y, Eigen::Index i,
                             Eigen::Index j);

}  // namespace klsure
