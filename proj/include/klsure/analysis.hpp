#pragma once

#include <cstddef>
#include <vector>

#include "klsure/count_models.hpp"

namespace klsure {

/// f_j = sum_i n_i p_ij / sum_i n_i sum_q p_iq.
Vector column_frequencies(const Matrix& p_hat, const Vector& row_totals);

struct Cooccurrence {
  /// k x k centered cosines between columns.
  Matrix values;
  /// Columns with zero centered norm; their rows and columns are 0,
  /// including the diagonal entry.
  std::vector<Eigen::Index> degenerate_columns;
};

/// c_ab = <p_a - mean(p_a), p_b - mean(p_b)> / (|p_a - mean| |p_b - mean|)
/// over the columns p_a, p_b of p_hat.
Cooccurrence cosine_cooccurrence(const Matrix& p_hat);

struct RankedColumn {
  Eigen::Index column = 0;
  double frequency = 0.0;
};

struct RankedPair {
  Eigen::Index first = 0;
  Eigen::Index second = 0;
  double cosine = 0.0;
};

/// The n most frequent columns, ties broken by the smaller index.
std::vector<RankedColumn> top_frequencies(const Vector& frequencies, std::size_t n);

/// The n pairs (a < b) with the largest cosine, ties broken by (a, b).
/// Pairs involving a degenerate column are skipped.
std::vector<RankedPair> top_pairs(const Cooccurrence& cooccurrence, std::size_t n);

}  // namespace klsure
