#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "klsure/count_models.hpp"

namespace klsure {

/// Sinusoidal composition, no free parameter.
struct Case1 {};

/// Random positive low-rank composition of rank r.
struct Case2 {
  Eigen::Index rank = 20;
};

/// Poisson data with latent Z = amplitude cos(6 pi i/k) sin(6 pi j/k).
struct PoissonSinusoid {
  double amplitude = 5.0;
};

using Scenario = std::variant<Case1, Case2, PoissonSinusoid>;

struct SimSpec {
  Scenario scenario = Case1{};
  Eigen::Index m = 50;
  Eigen::Index k = 50;
  /// Mean row total; unused by PoissonSinusoid.
  double n0 = 10.0;
  std::uint64_t seed = 0;
};

void validate(const SimSpec& spec);
std::string scenario_name(const Scenario& scenario);
ModelKind model_of(const Scenario& scenario);

/// P_ij = 1/(10k) + 0.9 A_ij / sum_j A_ij,  A_ij = exp(10 cos(6 pi i/k) sin(6 pi j/k)),
/// with 1-based i and j.
Matrix case1_composition(Eigen::Index m, Eigen::Index k);

/// Row-normalized W = U V^T with U_il = |N(0,1)| and
/// V_jl = 0.1 |N(0,1)| + b_l, b_l ~ U[0.5, 1.5]. Draws are repeated until
/// every entry of W is positive; gives up after 100 attempts.
Matrix case2_composition(Eigen::Index m, Eigen::Index k, Eigen::Index rank, std::uint64_t seed);

/// Latent matrix of the Poisson study; the intensity is exp(Z).
Matrix poisson_sinusoid_latent(Eigen::Index m, Eigen::Index k, double amplitude);

/// n_i ~ Poisson(n0), zeros redrawn. Row i uses stream derive_seed(seed, {i}).
Vector sample_row_totals(Eigen::Index m, double n0, std::uint64_t seed);

/// Poisson: Y_ij ~ Poisson(X_ij). Multinomial: row i ~ Multinomial(n_i, p_i),
/// sampled trial by trial through inversion of the row CDF.
/// Row i uses stream derive_seed(seed, {i}).
CountMatrix sample_counts(ModelKind model, const Matrix& truth, const std::optional<Vector>& row_totals,
                          std::uint64_t seed);

/// Output of a full simulation run.
struct Simulation {
  ModelKind model = ModelKind::Multinomial;
  /// Composition (multinomial) or intensity (Poisson).
  Matrix truth;
  /// Present for multinomial scenarios.
  std::optional<Vector> row_totals;
  CountMatrix counts;
};

/// Truth from the scenario (seed stream derive_seed(seed, {0})), totals from
/// derive_seed(seed, {1}), counts from derive_seed(seed, {2}).
Simulation simulate(const SimSpec& spec);

}  // namespace klsure
