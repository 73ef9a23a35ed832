#pragma once

#include "gapkit/embedding_io.hpp"
#include "gapkit/types.hpp"

namespace gapkit {

enum class WeightMode { ClampDot, ClampCosine };

/// Bipartite image/text graph with adjacency A = [[0, W], [W^T, 0]].
struct BipartiteGraph {
  Matrix w;        // n x n, nonnegative
  Vector degrees;  // 2n: row sums of W for images, then column sums for texts

  Index pairs() const noexcept { return w.rows(); }
  Eigen::MatrixXd adjacency() const;
  Eigen::MatrixXd laplacian() const;  // D - A
};

struct SpectralOptions {
  WeightMode weight_mode = WeightMode::ClampCosine;
  double null_tol = 1e-8;
  /// Keep only each node's `knn` strongest edges (union over both endpoints); 0 = dense.
  Index knn = 0;
};

struct SpectralAlignment {
  Matrix f_img;  // n x k
  Matrix f_txt;  // n x k
  Vector eigenvalues;
  Index k = 0;
  Index null_count = 0;  // eigenvalues skipped below null_tol
};

BipartiteGraph build_bipartite_graph(const PairedDataset& ds, WeightMode mode, Index knn = 0);

SpectralAlignment spectral_embed(const PairedDataset& ds, Index k, const SpectralOptions& opts = {});

PairedDataset alignment_as_dataset(const SpectralAlignment& sa);

}  // namespace gapkit
