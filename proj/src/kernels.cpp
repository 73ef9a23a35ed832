#include "gapkit/kernels.hpp"

#include <algorithm>

#include "gapkit/error.hpp"

namespace gapkit::kernels {
namespace {

void check_dims(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw ValidationError("dimension mismatch: " + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.cols()));
}

double sq_dist(const double* a, const double* b, Index d) noexcept {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  Index k = 0;
  for (; k + 4 <= d; k += 4) {
    for (int l = 0; l < 4; ++l) {
      const double t = a[k + l] - b[k + l];
      acc[l] += t * t;
    }
  }
  for (; k < d; ++k) {
    const double t = a[k] - b[k];
    acc[0] += t * t;
  }
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

// Scans one row of similarities. `sims` covers all 2n rows; entry q is ignored.
QueryStats scan_row(const double* sims, Index q, Index n2) {
  const Index n = n2 / 2;
  const bool is_image = q < n;
  const Index partner = is_image ? q + n : q - n;
  const Index other_lo = is_image ? n : 0;
  const Index other_hi = is_image ? n2 : n;

  QueryStats st;
  Index best_other = -1;
  for (Index l = 0; l < n2; ++l) {
    if (l == q) continue;
    if (st.top < 0 || sims[l] > sims[st.top]) st.top = l;
    if (l >= other_lo && l < other_hi && (best_other < 0 || sims[l] > sims[best_other]))
      best_other = l;
  }
  auto rank_of = [&](Index j) {
    Index ahead = 0;
    const double s = sims[j];
    for (Index l = 0; l < n2; ++l) {
      if (l == q || l == j) continue;
      if (sims[l] > s || (sims[l] == s && l < j)) ++ahead;
    }
    return ahead + 1;
  };
  st.first_other_rank = rank_of(best_other);
  st.partner_rank = rank_of(partner);
  return st;
}

void check_corpus(const Matrix& z, Index begin, Index end) {
  if (z.rows() < 2 || z.rows() % 2 != 0) throw ValidationError("mixed corpus needs 2n rows, n >= 1");
  if (begin < 0 || end > z.rows() || begin > end) throw PreconditionError("query range out of bounds");
}

}  // namespace

double dot(const double* a, const double* b, Index d) noexcept {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  Index k = 0;
  for (; k + 4 <= d; k += 4) {
    for (int l = 0; l < 4; ++l) acc[l] += a[k + l] * b[k + l];
  }
  for (; k < d; ++k) acc[0] += a[k] * b[k];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

Matrix gram(const Matrix& a, const Matrix& b) {
  check_dims(a, b);
  Matrix out(a.rows(), b.rows());
  const Index d = a.cols();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i).data();
    for (Index j = 0; j < b.rows(); ++j) out(i, j) = dot(ai, b.row(j).data(), d);
  }
  return out;
}

Matrix pairwise_sq_euclidean(const Matrix& a, const Matrix& b) {
  check_dims(a, b);
  Matrix out(a.rows(), b.rows());
  const Index d = a.cols();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i).data();
    for (Index j = 0; j < b.rows(); ++j) out(i, j) = sq_dist(ai, b.row(j).data(), d);
  }
  return out;
}

std::vector<QueryStats> query_stats(const Matrix& z, Index begin, Index end) {
  check_corpus(z, begin, end);
  const Index n2 = z.rows();
  const Index d = z.cols();
  std::vector<QueryStats> out(static_cast<std::size_t>(end - begin));
#pragma omp parallel
  {
    std::vector<double> sims(static_cast<std::size_t>(n2));
#pragma omp for schedule(dynamic, 16)
    for (Index q = begin; q < end; ++q) {
      const double* zq = z.row(q).data();
      for (Index l = 0; l < n2; ++l) sims[static_cast<std::size_t>(l)] = dot(zq, z.row(l).data(), d);
      out[static_cast<std::size_t>(q - begin)] = scan_row(sims.data(), q, n2);
    }
  }
  return out;
}

namespace serial {

Matrix gram(const Matrix& a, const Matrix& b) {
  check_dims(a, b);
  Matrix out(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i).data(), b.row(j).data(), a.cols());
  return out;
}

Matrix pairwise_sq_euclidean(const Matrix& a, const Matrix& b) {
  check_dims(a, b);
  Matrix out(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j) out(i, j) = sq_dist(a.row(i).data(), b.row(j).data(), a.cols());
  return out;
}

std::vector<QueryStats> query_stats(const Matrix& z, Index begin, Index end) {
  check_corpus(z, begin, end);
  const Index n2 = z.rows();
  std::vector<QueryStats> out;
  out.reserve(static_cast<std::size_t>(end - begin));
  std::vector<double> sims(static_cast<std::size_t>(n2));
  for (Index q = begin; q < end; ++q) {
    for (Index l = 0; l < n2; ++l) sims[static_cast<std::size_t>(l)] = dot(z.row(q).data(), z.row(l).data(), z.cols());
    out.push_back(scan_row(sims.data(), q, n2));
  }
  return out;
}

}  // namespace serial
}  // namespace gapkit::kernels
