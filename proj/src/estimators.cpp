#include "klsure/estimators.hpp"

#include <cmath>
#include <string>
#include <type_traits>

#include "klsure/errors.hpp"

namespace klsure {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_non_negative(const Matrix& y, const char* who) {
  if ((y.array() < 0.0).any()) {
    throw DomainError(std::string(who) + " is undefined on negative counts");
  }
}

double checked_total(double total, Eigen::Index row, const char* who) {
  if (!(total > 0.0)) {
    throw DegenerateInputError(std::string(who) + ": row " + std::to_string(row) + " has n_i = 0");
  }
  return total;
}

Vector simple_shrink_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, const SimpleShrinkSpec& s) {
  const auto k = static_cast<double>(row.size());
  const Eigen::RowVectorXd plus = row.cwiseMax(0.0);
  const double total = plus.sum();
  Vector out(row.size());
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    out(j) = 1.0 / k + s.w * (plus(j) - total / k) / (s.eps + total);
  }
  return out;
}

Vector zero_replace_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, double z) {
  Vector out = row.transpose().cwiseMax(z);
  out /= out.sum();
  return out;
}

Matrix low_rank_map(const LowRankSpec& s, const Matrix& y) {
  FistaConfig cfg = s.fista;
  cfg.lambda = s.lambda;
  return link_forward(s.model, fista_solve(s.model, y, cfg).z_hat);
}

}  // namespace

ModelKind model_of(const EstimatorSpec& spec) {
  if (const auto* lr = std::get_if<LowRankSpec>(&spec)) return lr->model;
  return ModelKind::Multinomial;
}

void validate(const EstimatorSpec& spec) {
  std::visit(Overloaded{
                 [](const MlSpec&) {},
                 [](const ZeroReplaceSpec& s) {
                   if (!(s.z > 0.0 && s.z < 1.0)) throw ConfigError("zero-replacement value must lie in (0, 1)");
                 },
                 [](const SimpleShrinkSpec& s) {
                   if (!(s.w >= 0.0 && s.w <= 1.0)) throw ConfigError("shrinkage weight w must lie in [0, 1]");
                   if (!(s.eps > 0.0) || !std::isfinite(s.eps)) throw ConfigError("eps must be positive");
                 },
                 [](const LowRankSpec& s) {
                   if (!(s.lambda >= 0.0) || !std::isfinite(s.lambda)) {
                     throw ConfigError("lambda must be finite and non-negative");
                   }
                   if (s.fista.max_iters < 1) throw ConfigError("FISTA needs at least one iteration");
                 },
             },
             spec);
}

EstimatorSpec pin_step(const EstimatorSpec& spec, const Matrix& y) {
  EstimatorSpec out = spec;
  if (auto* lr = std::get_if<LowRankSpec>(&out); lr != nullptr && !lr->fista.step) {
    lr->fista.step = step_size(lr->model, y);
  }
  return out;
}

Matrix evaluate_estimator(const EstimatorSpec& spec, const Matrix& y) {
  validate(spec);
  return std::visit(
      Overloaded{
          [&](const MlSpec&) -> Matrix {
            require_non_negative(y, "maximum likelihood");
            Matrix p = y;
            for (Eigen::Index i = 0; i < y.rows(); ++i) p.row(i) /= checked_total(y.row(i).sum(), i, "ML");
            return p;
          },
          [&](const ZeroReplaceSpec& s) -> Matrix {
            require_non_negative(y, "zero replacement");
            Matrix p(y.rows(), y.cols());
            for (Eigen::Index i = 0; i < y.rows(); ++i) {
              checked_total(y.row(i).sum(), i, "zero replacement");
              p.row(i) = zero_replace_row(y.row(i), s.z).transpose();
            }
            return p;
          },
          [&](const SimpleShrinkSpec& s) -> Matrix {
            Matrix p(y.rows(), y.cols());
            for (Eigen::Index i = 0; i < y.rows(); ++i) p.row(i) = simple_shrink_row(y.row(i), s).transpose();
            return p;
          },
          [&](const LowRankSpec& s) -> Matrix { return low_rank_map(s, y); },
      },
      spec);
}

Estimate estimate(const EstimatorSpec& spec, const CountMatrix& y) {
  const bool needs_totals = model_of(spec) == ModelKind::Multinomial && !std::holds_alternative<SimpleShrinkSpec>(spec);
  if (needs_totals) y.require_positive_totals();
  Estimate out;
  out.values = evaluate_estimator(spec, y.data());
  out.has_zero_entries = (out.values.array() == 0.0).any();
  return out;
}

Vector estimate_at_decrement(const EstimatorSpec& spec, const CountMatrix& y, Eigen::Index i, Eigen::Index j) {
  if (i < 0 || i >= y.rows() || j < 0 || j >= y.cols()) throw DimensionError("decrement index out of range");
  const bool at_zero = y(i, j) == 0.0;
  if (at_zero && !std::holds_alternative<SimpleShrinkSpec>(spec)) {
    throw DomainError("decrementing entry (" + std::to_string(i) + "," + std::to_string(j) +
                      ") would make it -1; only the simple shrinkage estimator accepts that");
  }
  validate(spec);
  return std::visit(
      Overloaded{
          [&](const SimpleShrinkSpec& s) -> Vector {
            // y_ij = 0: the clamp y+ hides the -1, so the row is unchanged.
            // Otherwise entry j and the row total both drop by one.
            Eigen::RowVectorXd row = y.data().row(i);
            if (!at_zero) row(j) -= 1.0;
            return simple_shrink_row(row, s);
          },
          [&](const MlSpec&) -> Vector {
            Vector row = y.data().row(i).transpose();
            row(j) -= 1.0;
            return row / checked_total(y.row_totals()(i) - 1.0, i, "ML at decrement");
          },
          [&](const ZeroReplaceSpec& s) -> Vector {
            Eigen::RowVectorXd row = y.data().row(i);
            row(j) -= 1.0;
            checked_total(row.sum(), i, "zero replacement at decrement");
            return zero_replace_row(row, s.z);
          },
          [&](const LowRankSpec& s) -> Vector {
            Matrix decremented = y.data();
            decremented(i, j) -= 1.0;
            return low_rank_map(s, decremented).row(i).transpose();
          },
      },
      spec);
}

}  // namespace klsure
