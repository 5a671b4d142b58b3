#include "klsure/optim.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "klsure/errors.hpp"

namespace klsure {
namespace {

struct Shrunk {
  Matrix value;
  double nuclear = 0.0;  // sum of the thresholded singular values
  std::size_t rank = 0;  // singular values above the threshold
};

// Soft-thresholds the spectrum of c through the eigendecomposition of its
// smaller Gram matrix. With G = c^T c = V S^2 V^T the thresholded matrix is
// c V diag(max(0, 1 - t / s)) V^T, which equals the SVD form exactly and
// reduces to c itself when no singular value is cut.
Shrunk soft_threshold_spectrum(const Matrix& c, double threshold) {
  const bool tall = c.cols() <= c.rows();
  const Matrix gram = tall ? Matrix(c.transpose() * c) : Matrix(c * c.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success || !eig.eigenvalues().allFinite()) {
    std::ostringstream msg;
    msg << "singular value decomposition failed on a " << c.rows() << "x" << c.cols()
        << " matrix (max |entry| = " << (c.size() ? c.cwiseAbs().maxCoeff() : 0.0)
        << ", finite = " << std::boolalpha << c.allFinite() << ")";
    throw NumericalError(msg.str());
  }
  const Eigen::Index r = gram.rows();
  Vector factor(r);
  double nuclear = 0.0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < r; ++i) {
    const double sigma = std::sqrt(std::max(eig.eigenvalues()(i), 0.0));
    if (sigma > threshold) {
      factor(i) = 1.0 - threshold / sigma;
      nuclear += sigma - threshold;
      ++rank;
    } else {
      factor(i) = 0.0;
    }
  }
  const Matrix& basis = eig.eigenvectors();
  const Matrix projector = basis * factor.asDiagonal() * basis.transpose();
  Shrunk out;
  out.value = tall ? Matrix(c * projector) : Matrix(projector * c);
  out.nuclear = nuclear;
  out.rank = rank;
  return out;
}

Shrunk prox_step(const Matrix& z, double threshold, bool center) {
  if (!center) {
    if (threshold == 0.0) return {z, 0.0};
    return soft_threshold_spectrum(z, threshold);
  }
  const Vector row_mean = z.rowwise().mean();
  Matrix centered = z;
  centered.colwise() -= row_mean;
  Shrunk s = threshold == 0.0 ? Shrunk{centered, 0.0} : soft_threshold_spectrum(centered, threshold);
  s.value.colwise() += row_mean;
  return s;
}

}  // namespace

Matrix center_rows(const Matrix& z) {
  Matrix out = z;
  out.colwise() -= z.rowwise().mean();
  return out;
}

Matrix prox_nuclear(const Matrix& z, double threshold) {
  if (!(threshold >= 0.0)) throw DomainError("prox threshold must be non-negative");
  if (threshold == 0.0) return z;
  return soft_threshold_spectrum(z, threshold).value;
}

Matrix prox_centered_nuclear(const Matrix& z, double threshold) {
  if (!(threshold >= 0.0)) throw DomainError("prox threshold must be non-negative");
  return prox_step(z, threshold, true).value;
}

double nuclear_norm(const Matrix& z) {
  if (z.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(z);
  return svd.singularValues().sum();
}

std::size_t numerical_rank(const Matrix& z, double rel_tol) {
  if (z.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(z);
  const Vector& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  if (!(smax > 0.0)) return 0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * smax) ++rank;
  }
  return rank;
}

double penalized_objective(ModelKind model, const Matrix& y, const Matrix& z, double lambda, bool center) {
  const double penalty = center ? nuclear_norm(center_rows(z)) : nuclear_norm(z);
  return nll(model, y, z) + lambda * penalty;
}

double resolve_step(ModelKind model, const Matrix& y, const FistaConfig& config) {
  if (config.max_iters < 1) throw ConfigError("FISTA needs at least one iteration");
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) {
    throw ConfigError("lambda must be finite and non-negative");
  }
  if (config.init && (config.init->rows() != y.rows() || config.init->cols() != y.cols())) {
    throw DimensionError("FISTA initial point has the wrong shape");
  }
  if (!config.step) return step_size(model, y);
  const double step = *config.step;
  const double upper = 2.0 / gradient_lipschitz(model, y);
  if (!(step > 0.0 && step < upper)) {
    throw ConfigError("step " + std::to_string(step) + " outside the admissible range (0, " +
                      std::to_string(upper) + ")");
  }
  return step;
}

FitResult fista_solve(ModelKind model, const Matrix& y, const FistaConfig& config) {
  FitResult result;
  result.step = resolve_step(model, y, config);
  const double gamma = result.step;
  const double threshold = gamma * config.lambda;
  const double bound = model == ModelKind::Poisson ? y.cwiseAbs().maxCoeff() : 0.0;

  Matrix x = config.init ? *config.init : Matrix::Zero(y.rows(), y.cols());
  Matrix probe = x;
  const auto leaves_box = [&](const Matrix& z) { return model == ModelKind::Poisson && z.maxCoeff() >= std::log(bound); };
  result.iterate_bound_violated = leaves_box(x);
  double rho = 1.0;
  std::size_t last_rank = 0;
  if (config.record_objective) result.objective_trace.reserve(config.max_iters);

  for (std::size_t t = 0; t < config.max_iters; ++t) {
    const Matrix forward = probe - gamma * nll_grad(model, y, probe);
    Shrunk next = prox_step(forward, threshold, config.center);
    if (!next.value.allFinite()) {
      throw DivergenceError(t + 1, "FISTA iterate became non-finite at iteration " + std::to_string(t + 1));
    }
    if (leaves_box(next.value)) result.iterate_bound_violated = true;
    if (config.record_objective) {
      // next.nuclear is only partial when lambda = 0, where it is not needed.
      result.objective_trace.push_back(nll(model, y, next.value) + config.lambda * next.nuclear);
    }
    if (config.accelerated) {
      const double rho_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * rho * rho));
      probe = next.value + ((rho - 1.0) / rho_next) * (next.value - x);
      rho = rho_next;
    } else {
      probe = next.value;
    }
    x = std::move(next.value);
    last_rank = next.rank;
  }

  // With a positive threshold the surviving singular values are known
  // exactly; a relative cutoff would count rounding residue as rank.
  result.effective_rank = threshold > 0.0 ? last_rank : numerical_rank(config.center ? center_rows(x) : x);
  result.z_hat = std::move(x);
  return result;
}

FitResult fista_solve(ModelKind model, const CountMatrix& y, const FistaConfig& config) {
  return fista_solve(model, y.data(), config);
}

}  // namespace klsure
