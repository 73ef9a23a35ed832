#include "gapkit/spectral.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "gapkit/error.hpp"
#include "gapkit/numerics.hpp"

namespace gapkit {

Eigen::MatrixXd BipartiteGraph::adjacency() const {
  const Index n = pairs();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  a.topRightCorner(n, n) = w;
  a.bottomLeftCorner(n, n) = w.transpose();
  return a;
}

Eigen::MatrixXd BipartiteGraph::laplacian() const {
  Eigen::MatrixXd l = -adjacency();
  l.diagonal() = degrees;
  return l;
}

namespace {

// Keeps entry (i, j) if j is among i's top-k texts or i among j's top-k images.
void sparsify_knn(Matrix& w, Index k) {
  const Index n = w.rows();
  k = std::min(k, n);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> keep =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return w(i, a) > w(i, b); });
    for (Index t = 0; t < k; ++t) keep(i, idx[static_cast<std::size_t>(t)]) = true;
  }
  for (Index j = 0; j < n; ++j) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return w(a, j) > w(b, j); });
    for (Index t = 0; t < k; ++t) keep(idx[static_cast<std::size_t>(t)], j) = true;
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (!keep(i, j)) w(i, j) = 0.0;
}

}  // namespace

BipartiteGraph build_bipartite_graph(const PairedDataset& ds, WeightMode mode, Index knn) {
  const auto metric = mode == WeightMode::ClampDot ? SimilarityMetric::Dot : SimilarityMetric::Cosine;
  BipartiteGraph g;
  g.w = similarity_matrix(ds.images().data(), ds.texts().data(), metric).cwiseMax(0.0);
  if (knn > 0) sparsify_knn(g.w, knn);

  const Index n = g.pairs();
  g.degrees.resize(2 * n);
  g.degrees.head(n) = g.w.rowwise().sum();
  g.degrees.tail(n) = g.w.colwise().sum().transpose();

  std::vector<Index> isolated;
  for (Index i = 0; i < 2 * n; ++i)
    if (!(g.degrees(i) > 0.0)) isolated.push_back(i);
  if (!isolated.empty()) {
    std::ostringstream msg;
    msg << "isolated node(s) with zero degree:";
    for (std::size_t t = 0; t < isolated.size() && t < 20; ++t) {
      const Index r = isolated[t];
      msg << (r < n ? " image " : " text ") << (r < n ? r : r - n);
    }
    if (isolated.size() > 20) msg << " ... (" << isolated.size() << " total)";
    throw ValidationError(msg.str());
  }
  return g;
}

SpectralAlignment spectral_embed(const PairedDataset& ds, Index k, const SpectralOptions& opts) {
  if (k < 1) throw PreconditionError("k must be >= 1");
  const auto g = build_bipartite_graph(ds, opts.weight_mode, opts.knn);
  const Index n = g.pairs();
  if (k > 2 * n) throw PreconditionError("k exceeds the number of graph nodes");

  const Eigen::MatrixXd l = g.laplacian();
  const auto eig = smallest_eigenpairs(l, Vector(g.degrees), k, opts.null_tol);

  SpectralAlignment sa;
  sa.k = k;
  sa.eigenvalues = eig.eigenvalues;
  sa.f_img = eig.eigenvectors.topRows(n);
  sa.f_txt = eig.eigenvectors.bottomRows(n);
  sa.null_count = eig.skipped;
  return sa;
}

PairedDataset alignment_as_dataset(const SpectralAlignment& sa) {
  return PairedDataset(EmbeddingMatrix(sa.f_img, Modality::Image),
                       EmbeddingMatrix(sa.f_txt, Modality::Text));
}

}  // namespace gapkit
