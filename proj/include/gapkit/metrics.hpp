#pragma once

#include <map>
#include <span>
#include <vector>

#include "gapkit/embedding_io.hpp"
#include "gapkit/kernels.hpp"
#include "gapkit/types.hpp"

namespace gapkit {

/// Top-1 neighbour modality tallies. ITR = same/cross for image queries, TIR
/// likewise for texts. A zero denominator with a positive numerator gives +inf;
/// 0/0 gives NaN ("undefined").
struct HeterogeneityResult {
  double itr = 0.0;
  double tir = 0.0;
  Index image_to_image = 0;  // |i_i_n_ids|
  Index image_to_text = 0;   // |i_t_n_ids|
  Index text_to_text = 0;    // |t_t_n_ids|
  Index text_to_image = 0;   // |t_i_n_ids|
};

/// TMR: mean rank of the best text under image queries. IMR: mean rank of the
/// best image under text queries. Ranks are positions in the full mixed list.
struct RankResult {
  double tmr = 0.0;
  double imr = 0.0;
  std::vector<Index> text_ranks;   // one per image query
  std::vector<Index> image_ranks;  // one per text query
};

/// Per-query neighbour statistics of every row of a mixed corpus. Computing it
/// once lets several metrics share the O(n^2 d) similarity pass.
struct CorpusRanking {
  Index pairs = 0;
  std::vector<kernels::QueryStats> queries;  // 2n entries, images first
};

CorpusRanking rank_corpus(const MixedCorpus& mc);

HeterogeneityResult heterogeneity_indices(const CorpusRanking& r);
HeterogeneityResult heterogeneity_indices(const MixedCorpus& mc);

RankResult mean_ranks(const CorpusRanking& r);
RankResult mean_ranks(const MixedCorpus& mc);

/// recall@K for queries of one modality: share of queries whose paired item is in the top K.
std::map<Index, double> recall_at_k(const CorpusRanking& r, Modality query, std::span<const Index> ks);
std::map<Index, double> recall_at_k(const MixedCorpus& mc, Modality query, std::span<const Index> ks);

/// Squared Frechet distance between Gaussians fitted to the two row sets.
double fid(const Matrix& x, const Matrix& y);
inline double fid(const EmbeddingMatrix& x, const EmbeddingMatrix& y) { return fid(x.data(), y.data()); }

enum class DistanceMetric { Cosine, Euclidean, SqEuclidean };

std::string_view to_string(DistanceMetric m);

struct DistanceStats {
  DistanceMetric metric = DistanceMetric::Cosine;
  std::vector<double> per_pair;  // d(x_i, y_i)
  double paired_mean = 0.0;
  double cross_mean = 0.0;       // mean of d(x_i, y_j) over all (or all non-matching) pairs
  bool cross_excludes_matching = false;
};

DistanceStats paired_distance_stats(const PairedDataset& ds, DistanceMetric metric,
                                    bool exclude_matching = false);

}  // namespace gapkit
