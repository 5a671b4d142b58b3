#include <cmath>
#include <vector>

#include "../helpers.hpp"
#include "doctest.h"
#include "klsure/errors.hpp"
#include "klsure/risk.hpp"
#include "klsure/simulate.hpp"

using namespace klsure;
using klsure::test::random_composition;
using klsure::test::random_counts;
using klsure::test::random_matrix;
using klsure::test::rel_err;

namespace {

MatrixMap constant_map(Eigen::Index m, Eigen::Index k, double c) {
  return [m, k, c](const Matrix&) { return Matrix::Constant(m, k, c); };
}

MatrixMap log_of(const EstimatorSpec& spec) {
  return [spec](const Matrix& y) -> Matrix { return evaluate_estimator(spec, y).array().log().matrix(); };
}

// Exact decrement map of g by literal refits.
Matrix exact_decrements(const MatrixMap& g, const Matrix& y) {
  Matrix q = Matrix::Zero(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      Matrix d = y;
      d(i, j) -= 1.0;
      q(i, j) = g(d)(i, j);
    }
  }
  return q;
}

double mean_abs_error_on_support(const Matrix& a, const Matrix& b, const Matrix& y) {
  double s = 0.0;
  int n = 0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (y(i, j) > 0.0) {
        s += std::abs(a(i, j) - b(i, j));
        ++n;
      }
    }
  }
  return s / n;
}

CountMatrix multinomial_draw(const Matrix& p, Eigen::Index n0, std::uint64_t seed) {
  return sample_counts(ModelKind::Multinomial, p, Vector::Constant(p.rows(), static_cast<double>(n0)), seed);
}

}  // namespace

TEST_CASE("finite-difference steps and evaluation counts") {
  TaylorConfig cfg;
  CHECK(fd_step(cfg, 1) == doctest::Approx(0.025));
  CHECK(fd_step(cfg, 2) == doctest::Approx(0.25 * std::sqrt(0.1)));
  CHECK(qhat_evaluations(0) == 1);
  CHECK(qhat_evaluations(2) == 7);
  CHECK(qhat_evaluations(6) == 127);
  cfg.order = 7;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg.order = 2;
  cfg.num_probe_draws = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("order zero returns g(y)") {
  const Matrix y = random_counts(3, 4, 1, 0, 5).data();
  const MatrixMap g = [](const Matrix& x) -> Matrix { return (x.array() + 1.0).log().matrix(); };
  TaylorConfig cfg;
  cfg.order = 0;
  CHECK((qhat_taylor(g, y, cfg) - g(y)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("qhat counts its evaluations of g") {
  const Matrix y = random_counts(3, 3, 1, 1, 5).data();
  int calls = 0;
  const MatrixMap g = [&calls](const Matrix& x) -> Matrix {
    ++calls;
    return x;
  };
  TaylorConfig cfg;
  cfg.order = 3;
  cfg.num_probe_draws = 2;
  qhat_taylor(g, y, cfg);
  CHECK(calls == 2 * 15);
}

TEST_CASE("qhat is unbiased for an affine map at order one") {
  const Eigen::Index m = 4;
  const Eigen::Index k = 3;
  const Matrix a = random_matrix(m, m, 10);
  const Matrix b = random_matrix(m, k, 11);
  const Matrix y = random_counts(m, k, 12, 0, 5).data();
  const MatrixMap g = [&](const Matrix& x) -> Matrix { return a * x + b; };
  Matrix exact = g(y);
  for (Eigen::Index i = 0; i < m; ++i) exact.row(i).array() -= a(i, i);

  const int draws = 10000;
  Matrix sum = Matrix::Zero(m, k);
  Matrix sum_sq = Matrix::Zero(m, k);
  TaylorConfig cfg;
  cfg.order = 1;
  for (int d = 0; d < draws; ++d) {
    cfg.seed = static_cast<std::uint64_t>(d);
    const Matrix q = qhat_taylor(g, y, cfg);
    sum += q;
    sum_sq += q.cwiseProduct(q);
  }
  const Matrix mean = sum / draws;
  const Matrix var = sum_sq / draws - mean.cwiseProduct(mean);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      CHECK(std::abs(mean(i, j) - exact(i, j)) <= 3.0 * std::sqrt(var(i, j) / draws) + 1e-12);
    }
  }
}

TEST_CASE("order-6 qhat tracks the exact decrements of the shrinkage estimator") {
  const CountMatrix y = random_counts(6, 4, 21, 1, 8);
  const MatrixMap g = log_of(SimpleShrinkSpec{0.5, 0.5});
  const Matrix exact = exact_decrements(g, y.data());
  TaylorConfig cfg;
  cfg.order = 6;
  cfg.num_probe_draws = 50;
  const Matrix q = qhat_taylor(g, y.data(), cfg);
  CHECK(((q - exact).array() / exact.array()).abs().maxCoeff() < 0.05);
}

// zero counts put a kink of y+ inside the difference stencil, so the
// instances here have positive counts
TEST_CASE("qhat error shrinks from order one to order six") {
  double err1 = 0.0;
  double err6 = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const CountMatrix y = random_counts(6, 4, 100 + s, 1, 8);
    const MatrixMap g = log_of(SimpleShrinkSpec{0.8, 0.5});
    const Matrix exact = exact_decrements(g, y.data());
    TaylorConfig cfg;
    cfg.seed = s;
    cfg.num_probe_draws = 20;
    cfg.order = 1;
    err1 += mean_abs_error_on_support(qhat_taylor(g, y.data(), cfg), exact, y.data());
    cfg.order = 6;
    err6 += mean_abs_error_on_support(qhat_taylor(g, y.data(), cfg), exact, y.data());
  }
  CHECK(err6 <= err1);
}

TEST_CASE("qhat rejects non-finite values of g") {
  const MatrixMap g = [](const Matrix& x) -> Matrix { return x.array().log().matrix(); };
  TaylorConfig cfg;
  CHECK_THROWS_AS(qhat_taylor(g, Matrix::Zero(2, 2), cfg), NumericalError);
}

TEST_CASE("kla closed forms") {
  const Matrix p = random_composition(4, 3, 1);
  CHECK(std::abs(kla(ModelKind::Multinomial, p, p)) < 1e-12);
  const Matrix x = random_composition(4, 3, 2) * 7.0;
  CHECK(std::abs(kla(ModelKind::Poisson, x, x)) < 1e-12);
  CHECK(kla(ModelKind::Poisson, 2.0 * x, x) == doctest::Approx(x.sum() * (1.0 - std::log(2.0))).epsilon(1e-13));
  const double expected = (p.array() * (3.0 * p.array()).log()).sum();
  CHECK(kla(ModelKind::Multinomial, Matrix::Constant(4, 3, 1.0 / 3.0), p) == doctest::Approx(expected).epsilon(1e-13));
  Matrix zero = p;
  zero(0, 0) = 0.0;
  CHECK(std::isinf(kla(ModelKind::Multinomial, zero, p)));
  CHECK_THROWS_AS(kla(ModelKind::Multinomial, p, Matrix::Ones(2, 2)), DimensionError);
}

TEST_CASE("ukla of decrement-invariant and shifted maps") {
  const CountMatrix y = random_counts(5, 4, 3, 0, 9);
  const double c = 2.5;
  const double expected = 20.0 * c - std::log(c) * y.data().sum();
  CHECK(ukla_poisson(constant_map(5, 4, c), y, std::nullopt) == doctest::Approx(expected).epsilon(1e-14));

  const MatrixMap plus_one = [](const Matrix& x) -> Matrix { return (x.array() + 1.0).matrix(); };
  double shifted = (y.data().array() + 1.0).sum();
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      if (y(i, j) > 0) shifted -= y(i, j) * std::log(y(i, j));
    }
  }
  CHECK(ukla_poisson(plus_one, y, std::nullopt) == doctest::Approx(shifted).epsilon(1e-13));
}

TEST_CASE("ukla of the low-rank Poisson estimator: Taylor against refits") {
  const Matrix latent = poisson_sinusoid_latent(10, 8, 5.0);
  const CountMatrix y = sample_counts(ModelKind::Poisson, link_forward(ModelKind::Poisson, latent), std::nullopt, 4);
  FistaConfig f;
  f.max_iters = 50;
  const LowRankSpec spec{ModelKind::Poisson, 1.0, f};
  const double exact = ukla_poisson(spec, y, std::nullopt);
  TaylorConfig cfg;
  cfg.order = 2;
  CHECK(rel_err(ukla_poisson(spec, y, cfg), exact) < 0.02);
  CHECK_THROWS_AS(ukla_poisson(LowRankSpec{ModelKind::Multinomial, 1.0, f}, y, std::nullopt), ConfigError);
}

TEST_CASE("mukla of the uniform estimator") {
  const CountMatrix y = random_counts(5, 4, 8, 1, 6);
  const MatrixMap uniform = constant_map(5, 4, 0.25);
  CHECK(mukla_multinomial(uniform, y, std::nullopt) == doctest::Approx(5.0 * std::log(4.0)).epsilon(1e-14));
  double plus_one = 0.0;
  for (Eigen::Index i = 0; i < 5; ++i) plus_one += y.row_totals()(i) / (y.row_totals()(i) + 1.0) * std::log(4.0);
  CHECK(mukla_plus_one_variant(uniform, y, std::nullopt) == doctest::Approx(plus_one).epsilon(1e-14));
  CHECK(mukla_plus_one_variant(uniform, y, std::nullopt) < mukla_multinomial(uniform, y, std::nullopt));
}

TEST_CASE("mukla of the shrinkage estimator: closed form, refits and a naive loop agree") {
  const CountMatrix y = random_counts(6, 4, 31, 0, 5);
  const SimpleShrinkSpec spec{0.6, 0.5};
  const MatrixMap f = [spec](const Matrix& x) { return evaluate_estimator(spec, x); };
  const double closed = mukla_multinomial(spec, y, std::nullopt);
  const double brute = mukla_multinomial(f, y, std::nullopt);
  double naive = 0.0;
  for (Eigen::Index i = 0; i < 6; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < 4; ++j) {
      if (y(i, j) == 0) continue;
      Matrix d = y.data();
      d(i, j) -= 1;
      row += y(i, j) * std::log(f(d)(i, j));
    }
    naive -= row / y.row_totals()(i);
  }
  CHECK(std::abs(closed - brute) < 1e-12);
  CHECK(std::abs(closed - naive) < 1e-12);
}

TEST_CASE("plus-one variant against a naive loop") {
  const CountMatrix y = random_counts(5, 3, 41, 0, 6);
  const SimpleShrinkSpec spec{0.4, 0.5};
  double naive = 0.0;
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      if (y(i, j) == 0) continue;
      Matrix d = y.data();
      d(i, j) -= 1;
      naive -= y(i, j) * std::log(evaluate_estimator(spec, d)(i, j)) / (y.row_totals()(i) + 1.0);
    }
  }
  CHECK(mukla_plus_one_variant(spec, y, std::nullopt) == doctest::Approx(naive).epsilon(1e-13));
  CHECK(mukla_plus_one_variant(spec, y, std::nullopt) < mukla_multinomial(spec, y, std::nullopt));
}

TEST_CASE("mukla of the low-rank estimator on a Case 1 block: Taylor against refits") {
  Matrix p = case1_composition(50, 50).topLeftCorner(10, 8);
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
  const CountMatrix y = multinomial_draw(p, 20, 5);
  FistaConfig f;
  f.max_iters = 50;
  const LowRankSpec spec{ModelKind::Multinomial, 0.1, f};
  const double exact = mukla_multinomial(spec, y, std::nullopt);
  TaylorConfig cfg;
  CHECK(rel_err(mukla_multinomial(spec, y, cfg), exact) < 0.02);
}

TEST_CASE("mukla needs positive totals and multinomial estimators") {
  Matrix y(2, 2);
  y << 1, 2, 0, 0;
  CHECK_THROWS_AS(mukla_multinomial(SimpleShrinkSpec{}, CountMatrix(y), std::nullopt), DegenerateInputError);
  CHECK_THROWS_AS(mukla_multinomial(LowRankSpec{ModelKind::Poisson, 1.0, {}}, random_counts(2, 2, 1, 1, 3), std::nullopt),
                  ConfigError);
}

TEST_CASE("Poisson ukla is unbiased for a constant estimator") {
  const Matrix x = random_composition(3, 3, 7) * 12.0;
  const double c = 1.7;
  const MatrixMap f = constant_map(3, 3, c);
  const int reps = 10000;
  double s1 = 0.0;
  double s2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    const double u = ukla_poisson(f, sample_counts(ModelKind::Poisson, x, std::nullopt, r), std::nullopt);
    s1 += u;
    s2 += u * u;
  }
  const double mean = s1 / reps;
  const double se = std::sqrt((s2 / reps - mean * mean) / reps);
  const double target = kla(ModelKind::Poisson, Matrix::Constant(3, 3, c), x) + (x.array() - x.array() * x.array().log()).sum();
  CHECK(std::abs(mean - target) <= 3.0 * se);
}

TEST_CASE("downsampling") {
  Matrix one(1, 3);
  one << 0, 5, 0;
  for (std::uint64_t s = 0; s < 20; ++s) CHECK(downsample_rows(CountMatrix(one), s).data() == Matrix(Eigen::RowVector3d(0, 4, 0)));

  const CountMatrix y = random_counts(6, 5, 2, 1, 4);
  const CountMatrix d = downsample_rows(y, 3);
  CHECK((y.row_totals() - d.row_totals()).isApprox(Vector::Ones(6)));
  CHECK((y.data() - d.data()).minCoeff() >= 0.0);

  Matrix pair(1, 2);
  pair << 1, 1;
  const int draws = 10000;
  int first = 0;
  for (int s = 0; s < draws; ++s) first += downsample_rows(CountMatrix(pair), static_cast<std::uint64_t>(s))(0, 0) == 0.0;
  CHECK(std::abs(first - draws / 2.0) <= 3.0 * std::sqrt(draws * 0.25));
}

TEST_CASE("downsampled law matches Multinomial(n - 1, p) at n = 2, k = 2") {
  // Y ~ Multinomial(2, p); the downsampled row is Multinomial(1, p).
  const double p = 0.3;
  const int draws = 100000;
  CounterRng rng(99);
  int ones = 0;
  for (int s = 0; s < draws; ++s) {
    Matrix y(1, 2);
    y << 0, 0;
    for (int t = 0; t < 2; ++t) y(0, rng.uniform() < p ? 0 : 1) += 1;
    ones += downsample_rows(CountMatrix(y), static_cast<std::uint64_t>(s))(0, 0) == 1.0;
  }
  const double e1 = draws * p;
  const double e0 = draws * (1 - p);
  const double chi2 = (ones - e1) * (ones - e1) / e1 + (draws - ones - e0) * (draws - ones - e0) / e0;
  CHECK(chi2 < 6.635);  // 1% critical value, one degree of freedom
}

TEST_CASE("cv splits have the documented sizes") {
  const CvConfig cfg{5, 20, 3};
  for (std::size_t l = 0; l < 20; ++l) {
    const CvSplit s = cv_split(23, 11, cfg, l);
    const Eigen::Index m1 = 4 * 23 / 5;
    const Eigen::Index k1 = 4 * 11 / 5;
    CHECK(static_cast<Eigen::Index>(s.held_out_rows.size()) == 23 - m1);
    CHECK(s.train_mask.count() == m1 * 11 + (23 - m1) * k1);
    for (Eigen::Index i : s.held_out_rows) CHECK(s.train_mask.row(i).count() == k1);
  }
  CHECK_THROWS_AS(cv_split(23, 11, CvConfig{1, 20, 0}, 0), ConfigError);
}

TEST_CASE("cv of the full-data maximum likelihood is zero") {
  const CountMatrix y = random_counts(10, 4, 5, 1, 6);
  const Matrix ml = evaluate_estimator(MlSpec{}, y.data());
  CHECK(cv_criterion([&](const Matrix&) { return ml; }, y, CvConfig{}) == 0.0);
}

TEST_CASE("cv is infinite when a held-out prediction is zero") {
  const CountMatrix y = random_counts(10, 4, 5, 1, 6);
  CHECK(std::isinf(cv_criterion(MlSpec{}, y, CvConfig{})));
}

TEST_CASE("shrinkage sweep on the Case 1 setup: cv prefers almost no shrinkage") {
  SimSpec spec;
  spec.seed = 1;
  const Simulation sim = simulate(spec);
  RiskCurveOptions options;
  options.cv = CvConfig{5, 20, 7};
  options.truth = sim.truth;
  options.parameter = "w";
  const EstimatorFamily family = [](double w) -> EstimatorSpec { return SimpleShrinkSpec{w, 0.5}; };
  const RiskCurve curve = risk_curve(ModelKind::Multinomial, family, sim.counts, linear_grid(0.0, 1.0, 21), options);
  const auto cv_min = std::min_element(curve.cv->begin(), curve.cv->end()) - curve.cv->begin();
  const double w_cv = curve.grid[static_cast<std::size_t>(cv_min)];
  CHECK(w_cv >= 0.85);
  CHECK(w_cv <= 1.0);
  CHECK(curve.selected_lambda >= 0.25);
  CHECK(curve.selected_lambda <= 0.55);
}

TEST_CASE("risk curve bookkeeping") {
  const CountMatrix y = random_counts(8, 5, 2, 1, 6);
  const EstimatorFamily family = [](double w) -> EstimatorSpec { return SimpleShrinkSpec{w, 0.5}; };
  RiskCurveOptions options;
  const RiskCurve single = risk_curve(ModelKind::Multinomial, family, y, {0.3}, options);
  CHECK(single.selected_lambda == 0.3);
  CHECK(single.constant_offset == 0.0);
  CHECK_FALSE(single.cv.has_value());
  CHECK_THROWS_AS(risk_curve(ModelKind::Multinomial, family, y, {}, options), ConfigError);
  CHECK_THROWS_AS(risk_curve(ModelKind::Multinomial, family, y, {0.5, 0.2}, options), ConfigError);
  CHECK_THROWS_AS(risk_curve(ModelKind::Poisson, family, y, {0.5}, options), ConfigError);

  // Ties go to the first grid value: w has no effect on an empty estimator.
  const EstimatorFamily flat = [](double) -> EstimatorSpec { return SimpleShrinkSpec{0.0, 0.5}; };
  CHECK(risk_curve(ModelKind::Multinomial, flat, y, {0.1, 0.2, 0.3}, options).selected_lambda == 0.1);

  const Matrix p = random_composition(8, 5, 4);
  options.truth = p;
  const RiskCurve with_truth = risk_curve(ModelKind::Multinomial, family, y, {0.3}, options);
  CHECK(with_truth.constant_offset == doctest::Approx((p.array() * p.array().log()).sum()));
  CHECK(with_truth.ukla[0] == doctest::Approx(single.ukla[0] + with_truth.constant_offset));
}

TEST_CASE("low-rank risk curve tracks the oracle minimizer and is reproducible") {
  SimSpec spec;
  spec.m = 30;
  spec.k = 20;
  spec.n0 = 100;
  spec.seed = 5;
  const Simulation sim = simulate(spec);
  FistaConfig f;
  const std::vector<double> grid = log_grid(0.02, 2.0, 12);
  TaylorConfig taylor;
  taylor.seed = 17;
  taylor.num_probe_draws = 5;
  const RiskCurve a = risk_curve(ModelKind::Multinomial, sim.counts, grid, f, taylor, std::nullopt, sim.truth);
  const auto oracle = std::min_element(a.kla_oracle->begin(), a.kla_oracle->end()) - a.kla_oracle->begin();
  const auto chosen = std::find(grid.begin(), grid.end(), a.selected_lambda) - grid.begin();
  CHECK(std::abs(oracle - chosen) <= 1);
  const RiskCurve b = risk_curve(ModelKind::Multinomial, sim.counts, grid, f, taylor, std::nullopt, sim.truth);
  CHECK(a.ukla == b.ukla);
}

TEST_CASE("grids") {
  const auto g = log_grid(0.01, 100.0, 5);
  CHECK(g.size() == 5);
  CHECK(g[0] == doctest::Approx(0.01));
  CHECK(g[2] == doctest::Approx(1.0));
  CHECK(g[4] == doctest::Approx(100.0));
  CHECK(linear_grid(0.0, 1.0, 3)[1] == 0.5);
  CHECK(log_grid(2.0, 5.0, 1) == std::vector<double>{2.0});
  CHECK_THROWS_AS(log_grid(0.0, 1.0, 3), ConfigError);
  CHECK_THROWS_AS(linear_grid(1.0, 0.0, 3), ConfigError);
}
