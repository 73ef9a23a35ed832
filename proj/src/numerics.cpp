#include "gapkit/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <lapacke.h>

#include "gapkit/error.hpp"
#include "gapkit/kernels.hpp"

namespace gapkit {

Matrix similarity_matrix(const Matrix& a, const Matrix& b, SimilarityMetric metric) {
  if (a.cols() != b.cols())
    throw ValidationError("dimension mismatch: " + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.cols()));
  Matrix s = kernels::gram(a, b);
  if (metric == SimilarityMetric::Dot) return s;

  const Vector na = a.rowwise().norm();
  const Vector nb = b.rowwise().norm();
  for (Index i = 0; i < na.size(); ++i)
    if (na(i) == 0.0) throw ValidationError("zero row " + std::to_string(i) + " in left operand");
  for (Index j = 0; j < nb.size(); ++j)
    if (nb(j) == 0.0) throw ValidationError("zero row " + std::to_string(j) + " in right operand");
  for (Index i = 0; i < s.rows(); ++i)
    for (Index j = 0; j < s.cols(); ++j) s(i, j) /= na(i) * nb(j);
  return s;
}

Matrix pairwise_sq_euclidean(const Matrix& a, const Matrix& b) {
  return kernels::pairwise_sq_euclidean(a, b).cwiseMax(0.0);
}

namespace {

void check_symmetric(const Eigen::MatrixXd& l) {
  if (l.rows() != l.cols()) throw ValidationError("matrix is not square");
  const double scale = std::max(1.0, l.cwiseAbs().maxCoeff());
  if ((l - l.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ValidationError("matrix is not symmetric");
}

}  // namespace

SymmetricEigenResult smallest_eigenpairs(const Eigen::MatrixXd& laplacian,
                                         const std::optional<Vector>& mass, Index k,
                                         double null_tol) {
  check_symmetric(laplacian);
  const Index m = laplacian.rows();
  if (k < 1) throw PreconditionError("k must be >= 1");
  if (k > m) throw PreconditionError("k exceeds matrix order");

  Vector inv_sqrt = Vector::Ones(m);
  if (mass) {
    if (mass->size() != m) throw ValidationError("mass matrix size does not match");
    for (Index i = 0; i < m; ++i) {
      if (!((*mass)(i) > 0.0))
        throw ValidationError("non-positive mass entry at " + std::to_string(i));
      inv_sqrt(i) = 1.0 / std::sqrt((*mass)(i));
    }
  }
  const Eigen::MatrixXd sym_base =
      inv_sqrt.asDiagonal() * (0.5 * (laplacian + laplacian.transpose())) * inv_sqrt.asDiagonal();

  // Ask for a few extra pairs beyond k to skip null eigenvalues; widen if needed.
  Index want = std::min<Index>(m, k + 8);
  for (;;) {
    Eigen::MatrixXd a = sym_base;  // dsyevr overwrites its input
    Vector w(m);
    Eigen::MatrixXd z(m, want);
    std::vector<lapack_int> support(static_cast<std::size_t>(2 * want));
    lapack_int found = 0;
    const lapack_int info = LAPACKE_dsyevr(
        LAPACK_COL_MAJOR, 'V', 'I', 'L', static_cast<lapack_int>(m), a.data(),
        static_cast<lapack_int>(m), 0.0, 0.0, 1, static_cast<lapack_int>(want), 0.0, &found,
        w.data(), z.data(), static_cast<lapack_int>(m), support.data());
    if (info != 0) throw NumericalError("dsyevr failed with info=" + std::to_string(info));

    std::vector<Index> keep;
    Index skipped = 0;
    for (Index j = 0; j < found && static_cast<Index>(keep.size()) < k; ++j) {
      if (w(j) >= null_tol)
        keep.push_back(j);
      else
        ++skipped;
    }

    if (static_cast<Index>(keep.size()) == k) {
      SymmetricEigenResult out;
      out.skipped = skipped;
      out.eigenvalues.resize(k);
      out.eigenvectors.resize(m, k);
      for (Index c = 0; c < k; ++c) {
        out.eigenvalues(c) = w(keep[static_cast<std::size_t>(c)]);
        out.eigenvectors.col(c) = inv_sqrt.asDiagonal() * z.col(keep[static_cast<std::size_t>(c)]);
      }
      return out;
    }
    if (want == m)
      throw NumericalError("not enough non-null eigenvalues: requested " + std::to_string(k) +
                           ", available " + std::to_string(keep.size()));
    want = std::min<Index>(m, 2 * want);
  }
}

double generalized_residual(const Eigen::MatrixXd& laplacian, const std::optional<Vector>& mass,
                            const SymmetricEigenResult& eig) {
  const Index m = laplacian.rows();
  const Vector d = mass ? *mass : Vector::Ones(m);
  double worst = 0.0;
  for (Index j = 0; j < eig.eigenvectors.cols(); ++j) {
    const Vector u = eig.eigenvectors.col(j);
    const Vector r = laplacian * u - eig.eigenvalues(j) * d.cwiseProduct(u);
    const double unorm = std::sqrt(u.dot(d.cwiseProduct(u)));
    worst = std::max(worst, r.norm() / unorm);
  }
  return worst;
}

GaussianSummary gaussian_summary(const Matrix& m) {
  if (m.rows() < 2) throw PreconditionError("need at least 2 rows for a covariance");
  GaussianSummary g;
  g.mean = m.colwise().mean().transpose();
  const Eigen::MatrixXd centered = m.rowwise() - g.mean.transpose();
  g.covariance = (centered.transpose() * centered) / static_cast<double>(m.rows() - 1);
  g.covariance = 0.5 * (g.covariance + g.covariance.transpose());
  return g;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s) {
  check_symmetric(s);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  Vector w = es.eigenvalues();
  if (w.size() > 0 && w.minCoeff() < -1e-6)
    throw NumericalError("not PSD: eigenvalue " + std::to_string(w.minCoeff()));
  w = w.cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd& v = es.eigenvectors();
  Eigen::MatrixXd r = v * w.asDiagonal() * v.transpose();
  return 0.5 * (r + r.transpose());
}

PcaResult pca_fit(const Matrix& z, Index k) {
  const Index m = z.rows();
  const Index d = z.cols();
  if (k < 1 || k > std::min(m, d))
    throw PreconditionError("k=" + std::to_string(k) + " out of range [1, " +
                            std::to_string(std::min(m, d)) + "]");
  PcaResult out;
  out.mean = z.colwise().mean().transpose();
  const Eigen::MatrixXd centered = z.rowwise() - out.mean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  Eigen::MatrixXd v = svd.matrixV().leftCols(k);
  const Vector sv = svd.singularValues().head(k);
  for (Index c = 0; c < k; ++c) {
    Index arg = 0;
    v.col(c).cwiseAbs().maxCoeff(&arg);
    if (v(arg, c) < 0) v.col(c) = -v.col(c);
  }
  const double denom = m > 1 ? static_cast<double>(m - 1) : 1.0;
  out.explained_variance = sv.array().square() / denom;
  out.components = v;
  out.scores = centered * v;
  return out;
}

Matrix pca_fit_transform(const Matrix& z, Index k) { return pca_fit(z, k).scores; }

}  // namespace gapkit
