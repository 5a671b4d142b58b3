#include "klsure/simulate.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "klsure/errors.hpp"
#include "klsure/rng.hpp"

namespace klsure {
namespace {

constexpr int kMaxCase2Attempts = 100;

void require_shape(Eigen::Index m, Eigen::Index k) {
  if (m < 2 || k < 2) throw ConfigError("simulation needs m >= 2 and k >= 2");
}

// cos(6 pi i/k) sin(6 pi j/k) with 1-based indices.
Matrix oscillation(Eigen::Index m, Eigen::Index k) {
  const double w = 6.0 * std::numbers::pi / static_cast<double>(k);
  Matrix out(m, k);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double ci = std::cos(w * static_cast<double>(i + 1));
    for (Eigen::Index j = 0; j < k; ++j) out(i, j) = ci * std::sin(w * static_cast<double>(j + 1));
  }
  return out;
}

std::uint64_t sample_categorical(CounterRng& rng, const Vector& cdf) {
  const double u = rng.uniform() * cdf(cdf.size() - 1);
  for (Eigen::Index j = 0; j + 1 < cdf.size(); ++j) {
    if (u < cdf(j)) return static_cast<std::uint64_t>(j);
  }
  return static_cast<std::uint64_t>(cdf.size() - 1);
}

}  // namespace

void validate(const SimSpec& spec) {
  require_shape(spec.m, spec.k);
  if (const auto* c2 = std::get_if<Case2>(&spec.scenario)) {
    if (c2->rank < 1 || c2->rank > std::min(spec.m, spec.k)) throw ConfigError("rank must lie in [1, min(m, k)]");
  }
  if (const auto* ps = std::get_if<PoissonSinusoid>(&spec.scenario)) {
    if (!std::isfinite(ps->amplitude)) throw ConfigError("amplitude must be finite");
  } else if (!(spec.n0 >= 1.0) || !std::isfinite(spec.n0)) {
    throw ConfigError("n0 must be a finite value >= 1");
  }
}

std::string scenario_name(const Scenario& scenario) {
  if (std::holds_alternative<Case1>(scenario)) return "case1";
  if (std::holds_alternative<Case2>(scenario)) return "case2";
  return "poisson-sinusoid";
}

ModelKind model_of(const Scenario& scenario) {
  return std::holds_alternative<PoissonSinusoid>(scenario) ? ModelKind::Poisson : ModelKind::Multinomial;
}

Matrix case1_composition(Eigen::Index m, Eigen::Index k) {
  require_shape(m, k);
  const Matrix a = (10.0 * oscillation(m, k)).array().exp().matrix();
  Matrix p(m, k);
  const double floor = 1.0 / (10.0 * static_cast<double>(k));
  for (Eigen::Index i = 0; i < m; ++i) p.row(i) = (floor + 0.9 * (a.row(i) / a.row(i).sum()).array()).matrix();
  return p;
}

Matrix case2_composition(Eigen::Index m, Eigen::Index k, Eigen::Index rank, std::uint64_t seed) {
  require_shape(m, k);
  if (rank < 1 || rank > std::min(m, k)) throw ConfigError("rank must lie in [1, min(m, k)]");
  for (int attempt = 0; attempt < kMaxCase2Attempts; ++attempt) {
    CounterRng rng(derive_seed(seed, {static_cast<std::uint64_t>(attempt)}));
    Matrix u(m, rank);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index l = 0; l < rank; ++l) u(i, l) = std::abs(rng.normal());
    }
    Vector base(rank);
    for (Eigen::Index l = 0; l < rank; ++l) base(l) = 0.5 + rng.uniform();
    Matrix v(k, rank);
    for (Eigen::Index j = 0; j < k; ++j) {
      for (Eigen::Index l = 0; l < rank; ++l) v(j, l) = 0.1 * std::abs(rng.normal()) + base(l);
    }
    const Matrix w = u * v.transpose();
    if (!(w.array() > 0.0).all()) continue;
    Matrix p(m, k);
    for (Eigen::Index i = 0; i < m; ++i) p.row(i) = w.row(i) / w.row(i).sum();
    return p;
  }
  throw NumericalError("case2_composition: no strictly positive draw in 100 attempts");
}

Matrix poisson_sinusoid_latent(Eigen::Index m, Eigen::Index k, double amplitude) {
  require_shape(m, k);
  if (!std::isfinite(amplitude)) throw ConfigError("amplitude must be finite");
  return amplitude * oscillation(m, k);
}

Vector sample_row_totals(Eigen::Index m, double n0, std::uint64_t seed) {
  if (!(n0 >= 1.0) || !std::isfinite(n0)) throw ConfigError("n0 must be a finite value >= 1");
  Vector n(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    CounterRng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    std::uint64_t draw = 0;
    while (draw == 0) draw = rng.poisson(n0);
    n(i) = static_cast<double>(draw);
  }
  return n;
}

CountMatrix sample_counts(ModelKind model, const Matrix& truth, const std::optional<Vector>& row_totals,
                          std::uint64_t seed) {
  Matrix y = Matrix::Zero(truth.rows(), truth.cols());
  if (model == ModelKind::Poisson) {
    if (row_totals) throw ConfigError("Poisson sampling takes no row totals");
    if (!is_intensity(truth)) throw DomainError("Poisson truth must be a finite non-negative matrix");
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
      CounterRng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
      for (Eigen::Index j = 0; j < truth.cols(); ++j) y(i, j) = static_cast<double>(rng.poisson(truth(i, j)));
    }
    return CountMatrix(std::move(y));
  }

  if (!row_totals) throw ConfigError("multinomial sampling needs row totals");
  if (row_totals->size() != truth.rows()) throw DimensionError("row totals do not match the truth");
  if (!is_composition(truth)) throw DomainError("multinomial truth must be a composition");
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    const double n = (*row_totals)(i);
    if (!(n >= 0.0) || n != std::floor(n)) throw DomainError("row totals must be non-negative integers");
    CounterRng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    Vector cdf(truth.cols());
    double running = 0.0;
    for (Eigen::Index j = 0; j < truth.cols(); ++j) cdf(j) = running += truth(i, j);
    for (std::uint64_t t = 0; t < static_cast<std::uint64_t>(n); ++t) {
      y(i, static_cast<Eigen::Index>(sample_categorical(rng, cdf))) += 1.0;
    }
  }
  return CountMatrix(std::move(y));
}

Simulation simulate(const SimSpec& spec) {
  validate(spec);
  Simulation sim;
  sim.model = model_of(spec.scenario);
  const std::uint64_t truth_seed = derive_seed(spec.seed, {0});
  if (std::holds_alternative<Case1>(spec.scenario)) {
    sim.truth = case1_composition(spec.m, spec.k);
  } else if (const auto* c2 = std::get_if<Case2>(&spec.scenario)) {
    sim.truth = case2_composition(spec.m, spec.k, c2->rank, truth_seed);
  } else {
    const double amplitude = std::get<PoissonSinusoid>(spec.scenario).amplitude;
    sim.truth = link_forward(ModelKind::Poisson, poisson_sinusoid_latent(spec.m, spec.k, amplitude));
  }
  if (sim.model == ModelKind::Multinomial) sim.row_totals = sample_row_totals(spec.m, spec.n0, derive_seed(spec.seed, {1}));
  sim.counts = sample_counts(sim.model, sim.truth, sim.row_totals, derive_seed(spec.seed, {2}));
  return sim;
}

}  // namespace klsure
