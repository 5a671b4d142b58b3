#include "klsure/count_models.hpp"

#include <cmath>
#include <string>

#include "klsure/errors.hpp"

namespace klsure {
namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* where) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(where) + ": dimension mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
  }
}

// y_ij / n_i with empty rows mapped to zero weight.
Matrix row_normalized(const Matrix& y) {
  Matrix w = y;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double n = y.row(i).sum();
    if (n != 0.0) {
      w.row(i) /= n;
    } else {
      w.row(i).setZero();
    }
  }
  return w;
}

}  // namespace

std::string_view to_string(ModelKind model) {
  return model == ModelKind::Poisson ? "poisson" : "multinomial";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "poisson") return ModelKind::Poisson;
  if (name == "multinomial") return ModelKind::Multinomial;
  throw ConfigError("unknown model '" + std::string(name) + "' (expected poisson or multinomial)");
}

CountMatrix::CountMatrix(Matrix counts) : data_(std::move(counts)) {
  for (Eigen::Index i = 0; i < data_.rows(); ++i) {
    for (Eigen::Index j = 0; j < data_.cols(); ++j) {
      const double v = data_(i, j);
      if (!std::isfinite(v) || v < 0.0 || v != std::floor(v)) {
        throw DomainError("count matrix entry (" + std::to_string(i) + "," + std::to_string(j) +
                          ") is not a non-negative integer");
      }
    }
  }
  row_totals_ = data_.rowwise().sum();
}

void CountMatrix::require_positive_totals() const {
  for (Eigen::Index i = 0; i < row_totals_.size(); ++i) {
    if (row_totals_(i) < 1.0) {
      throw DegenerateInputError("row " + std::to_string(i) + " has no counts (n_i = 0)");
    }
  }
}

bool is_composition(const Matrix& p, double tol) {
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      if (!(p(i, j) > 0.0 && p(i, j) < 1.0)) return false;
    }
    if (std::abs(p.row(i).sum() - 1.0) > tol) return false;
  }
  return true;
}

bool is_intensity(const Matrix& x) {
  return (x.array() > 0.0).all() && x.allFinite();
}

Matrix softmax_rows(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double mx = z.row(i).maxCoeff();
    out.row(i) = (z.row(i).array() - mx).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

Vector log_sum_exp_rows(const Matrix& z) {
  Vector out(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double mx = z.row(i).maxCoeff();
    out(i) = mx + std::log((z.row(i).array() - mx).exp().sum());
  }
  return out;
}

Matrix link_forward(ModelKind model, const Matrix& z) {
  if (model == ModelKind::Poisson) return z.array().exp().matrix();
  return softmax_rows(z);
}

Matrix link_inverse(ModelKind model, const Matrix& p) {
  if (!(p.array() > 0.0).all()) {
    throw DomainError("link_inverse: input has a non-positive entry");
  }
  Matrix logp = p.array().log().matrix();
  if (model == ModelKind::Poisson) return logp;
  const Vector row_mean = logp.rowwise().mean();
  logp.colwise() -= row_mean;
  return logp;
}

double nll(ModelKind model, const Matrix& y, const Matrix& z) {
  check_same_shape(y, z, "nll");
  if (model == ModelKind::Poisson) {
    return z.array().exp().sum() - (y.array() * z.array()).sum();
  }
  return -(row_normalized(y).array() * z.array()).sum() + log_sum_exp_rows(z).sum();
}

double nll(ModelKind model, const CountMatrix& y, const Matrix& z) { return nll(model, y.data(), z); }

Matrix nll_grad(ModelKind model, const Matrix& y, const Matrix& z) {
  check_same_shape(y, z, "nll_grad");
  if (model == ModelKind::Poisson) return z.array().exp().matrix() - y;
  return softmax_rows(z) - row_normalized(y);
}

Matrix nll_grad(ModelKind model, const CountMatrix& y, const Matrix& z) {
  return nll_grad(model, y.data(), z);
}

double step_size(ModelKind model, const Matrix& y) {
  if (model == ModelKind::Multinomial) return 2.0;
  return 1.0 / gradient_lipschitz(model, y);
}

double step_size(ModelKind model, const CountMatrix& y) { return step_size(model, y.data()); }

double gradient_lipschitz(ModelKind model, const Matrix& y) {
  if (model == ModelKind::Multinomial) return 0.5;
  const double l = y.size() == 0 ? 0.0 : y.cwiseAbs().maxCoeff();
  if (!(l > 0.0)) {
    throw DegenerateInputError("Poisson step size: data has no positive entry, Lipschitz bound L_Y = 0");
  }
  return l;
}

}  // namespace klsure
