#include "klsure/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "klsure/errors.hpp"

namespace klsure {

Vector column_frequencies(const Matrix& p_hat, const Vector& row_totals) {
  if (row_totals.size() != p_hat.rows()) throw DimensionError("row totals do not match the composition");
  if (!(row_totals.array() > 0.0).all()) throw DomainError("row totals must be positive");
  const Vector weighted = p_hat.transpose() * row_totals;
  return weighted / weighted.sum();
}

Cooccurrence cosine_cooccurrence(const Matrix& p_hat) {
  if (p_hat.rows() < 2) throw DimensionError("cosine co-occurrence needs at least two rows");
  const Matrix centered = p_hat.rowwise() - p_hat.colwise().mean();
  Vector norms = centered.colwise().norm();
  Cooccurrence out;
  out.values = centered.transpose() * centered;
  // a constant column centers to rounding residue, not to exact zero
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() * std::sqrt(static_cast<double>(p_hat.rows()));
  for (Eigen::Index a = 0; a < out.values.rows(); ++a) {
    if (norms(a) <= tol * p_hat.col(a).cwiseAbs().maxCoeff()) {
      norms(a) = 0.0;
      out.degenerate_columns.push_back(a);
    }
  }
  for (Eigen::Index a = 0; a < out.values.rows(); ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      double c = 0.0;
      if (norms(a) > 0.0 && norms(b) > 0.0) c = std::clamp(out.values(a, b) / (norms(a) * norms(b)), -1.0, 1.0);
      out.values(a, b) = c;
      out.values(b, a) = c;
    }
  }
  return out;
}

std::vector<RankedColumn> top_frequencies(const Vector& frequencies, std::size_t n) {
  std::vector<RankedColumn> all;
  for (Eigen::Index j = 0; j < frequencies.size(); ++j) all.push_back({j, frequencies(j)});
  std::stable_sort(all.begin(), all.end(),
                   [](const RankedColumn& a, const RankedColumn& b) { return a.frequency > b.frequency; });
  all.resize(std::min(n, all.size()));
  return all;
}

std::vector<RankedPair> top_pairs(const Cooccurrence& cooccurrence, std::size_t n) {
  const auto& degenerate = cooccurrence.degenerate_columns;
  auto is_degenerate = [&](Eigen::Index j) { return std::find(degenerate.begin(), degenerate.end(), j) != degenerate.end(); };
  std::vector<RankedPair> all;
  const Eigen::Index k = cooccurrence.values.rows();
  for (Eigen::Index a = 0; a < k; ++a) {
    if (is_degenerate(a)) continue;
    for (Eigen::Index b = a + 1; b < k; ++b) {
      if (!is_degenerate(b)) all.push_back({a, b, cooccurrence.values(a, b)});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const RankedPair& x, const RankedPair& y) { return x.cosine > y.cosine; });
  all.resize(std::min(n, all.size()));
  return all;
}

}  // namespace klsure
