#pragma once

#include <optional>

#include "gapkit/embedding_io.hpp"
#include "gapkit/types.hpp"

namespace gapkit {

enum class SimilarityMetric { Dot, Cosine };

/// Entry (i, j) = a_i . b_j, or the cosine of the angle for Cosine.
Matrix similarity_matrix(const Matrix& a, const Matrix& b, SimilarityMetric metric);

/// Entry (i, j) = |a_i - b_j|^2, clamped at zero.
Matrix pairwise_sq_euclidean(const Matrix& a, const Matrix& b);

struct SymmetricEigenResult {
  Vector eigenvalues;          // ascending
  Eigen::MatrixXd eigenvectors;  // column j pairs with eigenvalues(j)
  Index skipped = 0;             // eigenvalues below null_tol passed over
};

/// Smallest `k` eigenpairs of L u = lambda D u whose eigenvalue is >= null_tol.
///
/// `mass` holds the diagonal of D (identity when absent). The problem is solved
/// in symmetric form on D^{-1/2} L D^{-1/2}, and vectors are mapped back with
/// u = D^{-1/2} v, so the returned columns are D-orthonormal. Only the lower
/// part of the spectrum is computed (LAPACK dsyevr with an index range).
SymmetricEigenResult smallest_eigenpairs(const Eigen::MatrixXd& laplacian,
                                         const std::optional<Vector>& mass, Index k,
                                         double null_tol = 1e-8);

/// max_j |L u_j - lambda_j D u_j| / |u_j|_D over the returned pairs.
double generalized_residual(const Eigen::MatrixXd& laplacian, const std::optional<Vector>& mass,
                            const SymmetricEigenResult& eig);

struct GaussianSummary {
  Vector mean;
  Eigen::MatrixXd covariance;  // unbiased, divisor n - 1
};

GaussianSummary gaussian_summary(const Matrix& m);
inline GaussianSummary gaussian_summary(const EmbeddingMatrix& m) { return gaussian_summary(m.data()); }

/// Symmetric square root of a PSD matrix via eigendecomposition. Eigenvalues in
/// [-1e-6, 0) are treated as zero; anything more negative is rejected.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s);

struct PcaResult {
  Matrix scores;               // m x k
  Eigen::MatrixXd components;  // d x k, orthonormal columns
  Vector explained_variance;   // non-increasing
  Vector mean;
};

/// Centres z and projects it onto its k leading principal directions. Each
/// component's largest-magnitude loading is made positive.
PcaResult pca_fit(const Matrix& z, Index k);
Matrix pca_fit_transform(const Matrix& z, Index k);

}  // namespace gapkit
