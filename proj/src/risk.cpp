#include "klsure/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "klsure/errors.hpp"
#include "klsure/rng.hpp"

namespace klsure {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_model(const EstimatorSpec& spec, ModelKind model, const char* who) {
  if (model_of(spec) != model) {
    throw ConfigError(std::string(who) + " requires a " + std::string(to_string(model)) + " estimator");
  }
}

Matrix rademacher_matrix(CounterRng& rng, Eigen::Index m, Eigen::Index k) {
  Matrix z(m, k);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) z(i, j) = rng.rademacher();
  }
  return z;
}

struct DirectionalDerivative {
  const MatrixMap& g;
  const std::vector<Matrix>& directions;
  const std::vector<double>& steps;  // steps[l - 1] is the level-l step

  Matrix eval(const Matrix& point) const {
    Matrix v = g(point);
    if (!v.allFinite()) throw NumericalError("qhat_taylor: g returned a non-finite value");
    return v;
  }

  // Nested centered difference of order `level` at `point`.
  Matrix at(int level, const Matrix& point) const {
    if (level == 0) return eval(point);
    const double eps = steps[static_cast<std::size_t>(level - 1)];
    const Matrix& dir = directions[static_cast<std::size_t>(level - 1)];
    return (at(level - 1, point + eps * dir) - at(level - 1, point - eps * dir)) / (2.0 * eps);
  }
};

MatrixMap spec_map(const EstimatorSpec& spec, const Matrix& y) {
  EstimatorSpec pinned = pin_step(spec, y);
  return [pinned](const Matrix& data) { return evaluate_estimator(pinned, data); };
}

// Weighted multinomial sum -sum_i w_i sum_j y_ij Q_ij.
double weighted_decrement_sum(const CountMatrix& y, const Matrix& q, bool plus_one) {
  y.require_positive_totals();
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double n = y.row_totals()(i);
    const double weight = 1.0 / (plus_one ? n + 1.0 : n);
    double row = 0.0;
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (y(i, j) != 0.0) row += y(i, j) * q(i, j);
    }
    total -= weight * row;
  }
  return total;
}

double poisson_from_decrements(const Matrix& fitted, const CountMatrix& y, const Matrix& q) {
  double total = fitted.sum();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (y(i, j) != 0.0) total -= y(i, j) * q(i, j);
    }
  }
  return total;
}

double mukla_impl(const MatrixMap& f, const CountMatrix& y, const std::optional<TaylorConfig>& fast,
                  bool plus_one) {
  return weighted_decrement_sum(y, decrement_log_map(f, y, fast), plus_one);
}

double mukla_impl(const EstimatorSpec& spec, const CountMatrix& y, const std::optional<TaylorConfig>& fast,
                  bool plus_one) {
  require_model(spec, ModelKind::Multinomial, "mukla");
  return weighted_decrement_sum(y, decrement_log_map(spec, y, fast), plus_one);
}

double cv_impl(const MatrixMap& f, const CountMatrix& y, const CvConfig& config) {
  if (config.folds < 2) throw ConfigError("CV needs at least 2 folds");
  if (config.splits < 1) throw ConfigError("CV needs at least one split");
  y.require_positive_totals();
  Matrix ml = y.data();
  for (Eigen::Index i = 0; i < ml.rows(); ++i) ml.row(i) /= y.row_totals()(i);

  double total = 0.0;
  for (std::size_t l = 0; l < config.splits; ++l) {
    const CvSplit split = cv_split(y.rows(), y.cols(), config, l);
    const Matrix train = split.train_mask.select(y.data(), Matrix::Zero(y.rows(), y.cols()));
    const Matrix predicted = f(train);
    for (Eigen::Index i : split.held_out_rows) {
      for (Eigen::Index j = 0; j < y.cols(); ++j) {
        const double p = ml(i, j);
        if (p == 0.0) continue;
        if (!(predicted(i, j) > 0.0)) return kInf;
        total += p * std::log(p / predicted(i, j));
      }
    }
  }
  return total / static_cast<double>(config.splits);
}

}  // namespace

void validate(const TaylorConfig& config) {
  if (config.order < 0 || config.order > kMaxTaylorOrder) {
    throw ConfigError("Taylor order must lie in [0, " + std::to_string(kMaxTaylorOrder) + "]");
  }
  if (config.num_probe_draws < 1) throw ConfigError("at least one probe draw is required");
  if (!(config.fd_eps_base > 0.0)) throw ConfigError("finite-difference base step must be positive");
  if (!(config.fd_eps_scale > 0.0 && config.fd_eps_scale < 1.0)) {
    throw ConfigError("finite-difference scale must lie in (0, 1)");
  }
}

double fd_step(const TaylorConfig& config, int level) {
  return config.fd_eps_base * std::pow(config.fd_eps_scale, 1.0 / static_cast<double>(level));
}

std::size_t qhat_evaluations(int order) { return (std::size_t{1} << (order + 1)) - 1; }

Matrix qhat_taylor(const MatrixMap& g, const Matrix& y, const TaylorConfig& config) {
  validate(config);
  const auto order = static_cast<std::size_t>(config.order);
  std::vector<double> steps(order);
  for (std::size_t l = 1; l <= order; ++l) steps[l - 1] = fd_step(config, static_cast<int>(l));

  Matrix sum = Matrix::Zero(y.rows(), y.cols());
  for (std::size_t d = 0; d < config.num_probe_draws; ++d) {
    CounterRng rng(derive_seed(config.seed, {d}));
    std::vector<Matrix> directions;
    directions.reserve(order);
    for (std::size_t l = 0; l < order; ++l) directions.push_back(rademacher_matrix(rng, y.rows(), y.cols()));

    const DirectionalDerivative deriv{g, directions, steps};
    Matrix probe_product = Matrix::Ones(y.rows(), y.cols());
    double coefficient = 1.0;
    for (std::size_t l = 0; l <= order; ++l) {
      if (l > 0) {
        probe_product = probe_product.cwiseProduct(directions[l - 1]);
        coefficient *= -1.0 / static_cast<double>(l);
      }
      sum += coefficient * probe_product.cwiseProduct(deriv.at(static_cast<int>(l), y));
    }
  }
  return sum / static_cast<double>(config.num_probe_draws);
}

double kla(ModelKind model, const Matrix& estimate, const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw DimensionError("kla: estimate and truth differ in shape");
  }
  if (!(truth.array() > 0.0).all()) throw DomainError("kla: truth must be strictly positive");
  double total = 0.0;
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    for (Eigen::Index j = 0; j < truth.cols(); ++j) {
      const double x = truth(i, j);
      const double e = estimate(i, j);
      if (!(e > 0.0)) return kInf;
      if (model == ModelKind::Poisson) {
        total += e - x - x * std::log(e / x);
      } else {
        total += x * std::log(x / e);
      }
    }
  }
  return total;
}

double risk_constant(ModelKind model, const Matrix& truth) {
  if (!(truth.array() > 0.0).all()) throw DomainError("risk_constant: truth must be strictly positive");
  const auto t = truth.array();
  if (model == ModelKind::Poisson) return (t * t.log() - t).sum();
  return (t * t.log()).sum();
}

Matrix decrement_log_map(const MatrixMap& f, const CountMatrix& y, const std::optional<TaylorConfig>& fast) {
  if (fast) {
    const MatrixMap g = [&f](const Matrix& data) -> Matrix { return f(data).array().log().matrix(); };
    return qhat_taylor(g, y.data(), *fast);
  }
  Matrix q = Matrix::Zero(y.rows(), y.cols());
  Matrix work = y.data();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (y(i, j) == 0.0) continue;
      work(i, j) -= 1.0;
      const double v = f(work)(i, j);
      work(i, j) += 1.0;
      if (!(v > 0.0)) throw DomainError("estimator returned a non-positive value at a decrement");
      q(i, j) = std::log(v);
    }
  }
  return q;
}

Matrix decrement_log_map(const EstimatorSpec& spec, const CountMatrix& y, const std::optional<TaylorConfig>& fast) {
  validate(spec);
  if (fast) return decrement_log_map(spec_map(spec, y.data()), y, fast);
  const EstimatorSpec pinned = pin_step(spec, y.data());
  Matrix q = Matrix::Zero(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (y(i, j) == 0.0) continue;
      const double v = estimate_at_decrement(pinned, y, i, j)(j);
      if (!(v > 0.0)) throw DomainError("estimator returned a non-positive value at a decrement");
      q(i, j) = std::log(v);
    }
  }
  return q;
}

double ukla_poisson(const MatrixMap& f, const CountMatrix& y, const std::optional<TaylorConfig>& fast) {
  return poisson_from_decrements(f(y.data()), y, decrement_log_map(f, y, fast));
}

double ukla_poisson(const EstimatorSpec& spec, const CountMatrix& y, const std::optional<TaylorConfig>& fast) {
  require_model(spec, ModelKind::Poisson, "ukla_poisson");
  const EstimatorSpec pinned = pin_step(spec, y.data());
  return poisson_from_decrements(evaluate_estimator(pinned, y.data()), y, decrement_log_map(pinned, y, fast));
}

double mukla_multinomial(const EstimatorSpec& spec, const CountMatrix& y, const std::optional<TaylorConfig>& fast) {
  return mukla_impl(spec, y, fast, false);
}

double mukla_multinomial(const MatrixMap& f, const CountMatrix& y, const std::optional<TaylorConfig>& fast) {
  return mukla_impl(f, y, fast, false);
}

double mukla_plus_one_variant(const EstimatorSpec& spec, const CountMatrix& y,
                              const std::optional<TaylorConfig>& fast) {
  return mukla_impl(spec, y, fast, true);
}

double mukla_plus_one_variant(const MatrixMap& f, const CountMatrix& y, const std::optional<TaylorConfig>& fast) {
  return mukla_impl(f, y, fast, true);
}

CountMatrix downsample_rows(const CountMatrix& y, std::uint64_t seed) {
  y.require_positive_totals();
  Matrix out = y.data();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    // Inversion on the cumulative counts: draw u uniform in {0, ..., n_i - 1}
    // and take the first column whose running count exceeds u.
    CounterRng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    const auto n = static_cast<std::uint64_t>(y.row_totals()(i));
    const auto u = static_cast<double>(rng.uniform_index(n));
    double running = 0.0;
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      running += y(i, j);
      if (u < running) {
        out(i, j) -= 1.0;
        break;
      }
    }
  }
  return CountMatrix(std::move(out));
}

CvSplit cv_split(Eigen::Index m, Eigen::Index k, const CvConfig& config, std::size_t index) {
  const auto folds = static_cast<Eigen::Index>(config.folds);
  const Eigen::Index m1 = (folds - 1) * m / folds;
  const Eigen::Index k1 = (folds - 1) * k / folds;
  if (config.folds < 2 || m1 < 1 || k1 < 1) {
    throw ConfigError("CV split needs K >= 2 with floor((K-1)m/K) >= 1 and floor((K-1)k/K) >= 1");
  }
  CounterRng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(index)}));
  // Fisher-Yates on the row indices; the first m1 form the training rows.
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(m));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  for (std::size_t a = rows.size() - 1; a > 0; --a) {
    std::swap(rows[a], rows[rng.uniform_index(a + 1)]);
  }
  CvSplit split;
  split.train_mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(m, k, false);
  for (Eigen::Index a = 0; a < m1; ++a) split.train_mask.row(rows[static_cast<std::size_t>(a)]).setConstant(true);
  std::vector<Eigen::Index> cols(static_cast<std::size_t>(k));
  for (Eigen::Index a = m1; a < m; ++a) {
    const Eigen::Index i = rows[static_cast<std::size_t>(a)];
    split.held_out_rows.push_back(i);
    // Partial Fisher-Yates: the first k1 positions become J_{i,l}.
    std::iota(cols.begin(), cols.end(), Eigen::Index{0});
    for (Eigen::Index b = 0; b < k1; ++b) {
      const auto pick = static_cast<std::size_t>(b) + rng.uniform_index(static_cast<std::uint64_t>(k - b));
      std::swap(cols[static_cast<std::size_t>(b)], cols[pick]);
      split.train_mask(i, cols[static_cast<std::size_t>(b)]) = true;
    }
  }
  return split;
}

double cv_criterion(const MatrixMap& f, const CountMatrix& y, const CvConfig& config) { return cv_impl(f, y, config); }

double cv_criterion(const EstimatorSpec& spec, const CountMatrix& y, const CvConfig& config) {
  require_model(spec, ModelKind::Multinomial, "cv_criterion");
  validate(spec);
  return cv_impl(spec_map(spec, y.data()), y, config);
}

RiskCurve risk_curve(ModelKind model, const EstimatorFamily& family, const CountMatrix& y,
                     const std::vector<double>& grid, const RiskCurveOptions& options) {
  if (grid.empty()) throw ConfigError("risk curve grid is empty");
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (!(grid[g] > grid[g - 1])) throw ConfigError("risk curve grid must be strictly ascending");
  }
  if (options.taylor) validate(*options.taylor);
  if (options.cv && model != ModelKind::Multinomial) throw ConfigError("cross-validation needs multinomial data");
  if (options.truth && (options.truth->rows() != y.rows() || options.truth->cols() != y.cols())) {
    throw DimensionError("truth and counts differ in shape");
  }

  RiskCurve curve;
  curve.model = model;
  curve.parameter = options.parameter;
  curve.grid = grid;
  if (options.cv) curve.cv.emplace();
  if (options.truth) {
    curve.kla_oracle.emplace();
    curve.constant_offset = risk_constant(model, *options.truth);
    curve.constant_offset_note = model == ModelKind::Multinomial
                                     ? "ukla includes the truth-only constant sum p log p"
                                     : "ukla includes the truth-only constant sum X log X - X";
  } else {
    curve.constant_offset_note = model == ModelKind::Multinomial
                                     ? "ukla omits the unknown constant sum p log p"
                                     : "ukla omits the unknown constant sum X log X - X";
  }

  for (std::size_t g = 0; g < grid.size(); ++g) {
    const EstimatorSpec spec = pin_step(family(grid[g]), y.data());
    if (model_of(spec) != model) throw ConfigError("estimator family does not match the data model");
    std::optional<TaylorConfig> taylor = options.taylor;
    if (taylor && !options.fixed_probes) taylor->seed = derive_seed(options.taylor->seed, {g});

    const double estimate_risk = model == ModelKind::Poisson ? ukla_poisson(spec, y, taylor)
                                                             : mukla_multinomial(spec, y, taylor);
    curve.ukla.push_back(estimate_risk + curve.constant_offset);
    if (options.cv) curve.cv->push_back(cv_criterion(spec, y, *options.cv));
    if (options.truth) {
      curve.kla_oracle->push_back(kla(model, evaluate_estimator(spec, y.data()), *options.truth));
    }
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double v = curve.ukla[g];
    if (!std::isnan(v) && (std::isnan(curve.ukla[best]) || v < curve.ukla[best])) best = g;
  }
  curve.selected_lambda = grid[best];
  return curve;
}

RiskCurve risk_curve(ModelKind model, const CountMatrix& y, const std::vector<double>& grid, const FistaConfig& fista,
                     const TaylorConfig& taylor, const std::optional<CvConfig>& cv,
                     const std::optional<Matrix>& truth) {
  RiskCurveOptions options;
  options.taylor = taylor;
  options.cv = cv;
  options.truth = truth;
  const EstimatorFamily family = [model, fista](double lambda) -> EstimatorSpec {
    return LowRankSpec{model, lambda, fista};
  };
  return risk_curve(model, family, y, grid, options);
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (n == 0 || !(lo > 0.0) || !(hi >= lo)) throw ConfigError("log grid needs n >= 1 and 0 < lo <= hi");
  std::vector<double> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    const double t = n == 1 ? 0.0 : static_cast<double>(a) / static_cast<double>(n - 1);
    out[a] = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
  }
  return out;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (n == 0 || !(hi >= lo)) throw ConfigError("linear grid needs n >= 1 and lo <= hi");
  std::vector<double> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    const double t = n == 1 ? 0.0 : static_cast<double>(a) / static_cast<double>(n - 1);
    out[a] = lo + t * (hi - lo);
  }
  return out;
}

}  // namespace klsure
