#include "gapkit/metrics.hpp"

#include <cmath>
#include <limits>

#include "gapkit/error.hpp"
#include "gapkit/numerics.hpp"

namespace gapkit {
namespace {

double ratio(Index num, Index den) {
  if (den > 0) return static_cast<double>(num) / static_cast<double>(den);
  return num > 0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
}

void require_pairs(Index n, Index min) {
  if (n < min) throw PreconditionError("need at least " + std::to_string(min) + " pairs");
}

}  // namespace

CorpusRanking rank_corpus(const MixedCorpus& mc) {
  CorpusRanking r;
  r.pairs = mc.pairs();
  r.queries = kernels::query_stats(mc.z, 0, mc.z.rows());
  return r;
}

HeterogeneityResult heterogeneity_indices(const CorpusRanking& r) {
  require_pairs(r.pairs, 2);
  const Index n = r.pairs;
  HeterogeneityResult h;
  for (Index q = 0; q < 2 * n; ++q) {
    const bool top_is_image = r.queries[static_cast<std::size_t>(q)].top < n;
    if (q < n)
      ++(top_is_image ? h.image_to_image : h.image_to_text);
    else
      ++(top_is_image ? h.text_to_image : h.text_to_text);
  }
  h.itr = ratio(h.image_to_image, h.image_to_text);
  h.tir = ratio(h.text_to_text, h.text_to_image);
  return h;
}

HeterogeneityResult heterogeneity_indices(const MixedCorpus& mc) {
  require_pairs(mc.pairs(), 2);
  return heterogeneity_indices(rank_corpus(mc));
}

RankResult mean_ranks(const CorpusRanking& r) {
  require_pairs(r.pairs, 2);
  const Index n = r.pairs;
  RankResult out;
  out.text_ranks.reserve(static_cast<std::size_t>(n));
  out.image_ranks.reserve(static_cast<std::size_t>(n));
  double ts = 0.0, is = 0.0;
  for (Index q = 0; q < n; ++q) {
    const Index rk = r.queries[static_cast<std::size_t>(q)].first_other_rank;
    out.text_ranks.push_back(rk);
    ts += static_cast<double>(rk);
  }
  for (Index q = n; q < 2 * n; ++q) {
    const Index rk = r.queries[static_cast<std::size_t>(q)].first_other_rank;
    out.image_ranks.push_back(rk);
    is += static_cast<double>(rk);
  }
  out.tmr = ts / static_cast<double>(n);
  out.imr = is / static_cast<double>(n);
  return out;
}

RankResult mean_ranks(const MixedCorpus& mc) {
  require_pairs(mc.pairs(), 2);
  return mean_ranks(rank_corpus(mc));
}

std::map<Index, double> recall_at_k(const CorpusRanking& r, Modality query, std::span<const Index> ks) {
  if (ks.empty()) throw PreconditionError("recall needs at least one K");
  if (query == Modality::Joint) throw PreconditionError("query modality must be image or text");
  const Index n = r.pairs;
  for (Index k : ks)
    if (k < 1 || k > 2 * n - 1)
      throw PreconditionError("K=" + std::to_string(k) + " out of range [1, " + std::to_string(2 * n - 1) + "]");
  const Index begin = query == Modality::Image ? 0 : n;
  std::map<Index, double> out;
  for (Index k : ks) {
    Index hits = 0;
    for (Index q = begin; q < begin + n; ++q)
      if (r.queries[static_cast<std::size_t>(q)].partner_rank <= k) ++hits;
    out[k] = static_cast<double>(hits) / static_cast<double>(n);
  }
  return out;
}

std::map<Index, double> recall_at_k(const MixedCorpus& mc, Modality query, std::span<const Index> ks) {
  CorpusRanking r;
  r.pairs = mc.pairs();
  const Index n = mc.pairs();
  if (query == Modality::Image) {
    r.queries = kernels::query_stats(mc.z, 0, n);
    r.queries.resize(static_cast<std::size_t>(2 * n));
  } else {
    auto tail = kernels::query_stats(mc.z, n, 2 * n);
    r.queries.resize(static_cast<std::size_t>(n));
    r.queries.insert(r.queries.end(), tail.begin(), tail.end());
  }
  return recall_at_k(r, query, ks);
}

double fid(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols())
    throw ValidationError("dimension mismatch: " + std::to_string(x.cols()) + " vs " + std::to_string(y.cols()));
  const auto gx = gaussian_summary(x);
  const auto gy = gaussian_summary(y);
  const Eigen::MatrixXd root = psd_sqrt(gx.covariance);
  Eigen::MatrixXd cross = root * gy.covariance * root;
  cross = 0.5 * (cross + cross.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cross, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed in FID");
  const double tr_cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (gx.mean - gy.mean).squaredNorm() + gx.covariance.trace() + gy.covariance.trace() -
                       2.0 * tr_cross;
  return std::max(0.0, value);
}

std::string_view to_string(DistanceMetric m) {
  switch (m) {
    case DistanceMetric::Cosine: return "cosine";
    case DistanceMetric::Euclidean: return "euclidean";
    case DistanceMetric::SqEuclidean: return "sqeuclidean";
  }
  return "unknown";
}

DistanceStats paired_distance_stats(const PairedDataset& ds, DistanceMetric metric, bool exclude_matching) {
  const Matrix& x = ds.images().data();
  const Matrix& y = ds.texts().data();
  const Index n = ds.size();
  Matrix d;
  if (metric == DistanceMetric::Cosine) {
    d = (1.0 - similarity_matrix(x, y, SimilarityMetric::Cosine).array()).matrix();
  } else {
    d = pairwise_sq_euclidean(x, y);
    if (metric == DistanceMetric::Euclidean) d = d.cwiseSqrt();
  }
  DistanceStats st;
  st.metric = metric;
  st.cross_excludes_matching = exclude_matching;
  st.per_pair.resize(static_cast<std::size_t>(n));
  double diag = 0.0;
  for (Index i = 0; i < n; ++i) {
    st.per_pair[static_cast<std::size_t>(i)] = d(i, i);
    diag += d(i, i);
  }
  st.paired_mean = diag / static_cast<double>(n);
  const double total = d.sum();
  if (exclude_matching) {
    st.cross_mean = n > 1 ? (total - diag) / static_cast<double>(n * (n - 1))
                          : std::numeric_limits<double>::quiet_NaN();
  } else {
    st.cross_mean = total / static_cast<double>(n * n);
  }
  return st;
}

}  // namespace gapkit
