#pragma once

#include <vector>

#include "gapkit/types.hpp"

// Data-parallel inner loops. Every kernel in gapkit::kernels has a
// straightforward single-threaded twin in gapkit::kernels::serial that is kept
// for testing and benchmarking. Parallel variants only split work across
// output rows, so their results do not depend on the thread count.
namespace gapkit::kernels {

/// Fixed-order dot product; dot(a, b) == dot(b, a) bit-exactly.
double dot(const double* a, const double* b, Index d) noexcept;

/// out(i, j) = a_i . b_j
Matrix gram(const Matrix& a, const Matrix& b);
/// out(i, j) = |a_i - b_j|^2, computed from the difference (exact zero for equal rows).
Matrix pairwise_sq_euclidean(const Matrix& a, const Matrix& b);

/// Per-query ranking summary in a mixed corpus of 2n rows (images first).
/// Similarity is the raw dot product; the query itself is excluded; ties go to
/// the lower row index. Ranks are 1-based positions in the full mixed ranking.
struct QueryStats {
  Index top = -1;              // row index of the most similar other row
  Index first_other_rank = 0;  // rank of the best item of the other modality
  Index partner_rank = 0;      // rank of the paired row
};

std::vector<QueryStats> query_stats(const Matrix& z, Index begin, Index end);

namespace serial {

Matrix gram(const Matrix& a, const Matrix& b);
Matrix pairwise_sq_euclidean(const Matrix& a, const Matrix& b);
std::vector<QueryStats> query_stats(const Matrix& z, Index begin, Index end);

}  // namespace serial
}  // namespace gapkit::kernels
