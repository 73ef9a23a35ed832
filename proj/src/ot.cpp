#include "gapkit/ot.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Sparse>

#include "gapkit/emd.hpp"
#include "gapkit/error.hpp"
#include "gapkit/numerics.hpp"

namespace gapkit {

std::string_view to_string(RegMode m) {
  return m == RegMode::Displacement ? "displacement" : "position";
}

RegMode parse_reg_mode(std::string_view s) {
  if (s == "displacement" || s == "disp") return RegMode::Displacement;
  if (s == "position" || s == "pos") return RegMode::Position;
  throw PreconditionError("unknown reg mode '" + std::string(s) + "'");
}

void OtParams::validate() const {
  if (!(eta >= 0.0) || !(lambda_s >= 0.0) || !(lambda_t >= 0.0))
    throw PreconditionError("eta, lambda_s and lambda_t must be >= 0");
  if (sim_k < 1) throw PreconditionError("sim_k must be >= 1");
  if (!(tol > 0.0)) throw PreconditionError("tol must be > 0");
  if (max_iters < 0) throw PreconditionError("max_iters must be >= 0");
}

std::vector<std::vector<Index>> knn_indices(const Matrix& x, Index k) {
  const Index n = x.rows();
  if (k < 1 || k >= n)
    throw PreconditionError("k=" + std::to_string(k) + " out of range [1, " + std::to_string(n - 1) + "]");
  const Matrix d2 = pairwise_sq_euclidean(x, x);
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(n));
  std::vector<Index> idx;
  for (Index i = 0; i < n; ++i) {
    idx.clear();
    for (Index j = 0; j < n; ++j)
      if (j != i) idx.push_back(j);
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Index a, Index b) {
      return d2(i, a) < d2(i, b) || (d2(i, a) == d2(i, b) && a < b);
    });
    out[static_cast<std::size_t>(i)].assign(idx.begin(), idx.begin() + k);
  }
  return out;
}

Matrix build_knn_similarity(const Matrix& x, Index k) {
  const Index n = x.rows();
  const Vector norms = x.rowwise().norm();
  for (Index i = 0; i < n; ++i)
    if (norms(i) == 0.0) throw ValidationError("zero-norm row " + std::to_string(i));
  const auto nbrs = knn_indices(x, k);
  Matrix s = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j : nbrs[static_cast<std::size_t>(i)]) {
      const double w = std::max(0.0, x.row(i).dot(x.row(j)) / (norms(i) * norms(j)));
      s(i, j) = w;
      s(j, i) = w;
    }
  }
  return s;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

SpMat graph_laplacian(const Matrix& s) {
  std::vector<Eigen::Triplet<double>> trips;
  const Index n = s.rows();
  for (Index i = 0; i < n; ++i) {
    double deg = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (s(i, j) != 0.0) {
        trips.emplace_back(i, j, -s(i, j));
        deg += s(i, j);
      }
    }
    if (deg != 0.0) trips.emplace_back(i, i, deg);
  }
  SpMat l(n, n);
  l.setFromTriplets(trips.begin(), trips.end());
  return l;
}

// Quadratic model of the regulariser. With M(g) = diag(1/mu) g Y and
// M'(g) = diag(1/nu) g^T X, the smoothed quantities are
//   delta  = M(g)  - X   (Displacement) or M(g)  (Position)
//   delta' = M'(g) - Y   (Displacement) or M'(g) (Position)
// and R(g) = ws tr(delta^T Ls delta) + wt tr(delta'^T Lt delta'),
// where ws = 2 eta lambda_s / n^2 (the pair sum counts each edge twice).
class LaplaceProblem {
 public:
  LaplaceProblem(const PairedDataset& ds, const OtParams& p)
      : x_(ds.images().data()), y_(ds.texts().data()), params_(p) {
    const Index n = ds.size();
    mu_ = Vector::Constant(n, 1.0 / static_cast<double>(n));
    nu_ = mu_;
    cost_ = pairwise_sq_euclidean(x_, y_);
    const double scale = p.eta / (static_cast<double>(n) * static_cast<double>(n));
    ws_ = 2.0 * scale * p.lambda_s;
    wt_ = 2.0 * scale * p.lambda_t;
    if (ws_ > 0.0) ls_ = graph_laplacian(build_knn_similarity(x_, p.sim_k));
    if (wt_ > 0.0) lt_ = graph_laplacian(build_knn_similarity(y_, p.sim_k));
    disp_ = p.reg_mode == RegMode::Displacement;
  }

  const Vector& mu() const { return mu_; }
  const Vector& nu() const { return nu_; }
  const Matrix& cost() const { return cost_; }
  bool regularized() const { return ws_ > 0.0 || wt_ > 0.0; }

  Matrix delta_src(const Matrix& g, bool affine) const {
    Matrix d = mu_.cwiseInverse().asDiagonal() * (g * y_);
    if (affine && disp_) d -= x_;
    return d;
  }
  Matrix delta_tgt(const Matrix& g, bool affine) const {
    Matrix d = nu_.cwiseInverse().asDiagonal() * (g.transpose() * x_);
    if (affine && disp_) d -= y_;
    return d;
  }

  double quad(const Matrix& ds, const Matrix& dt) const {
    double r = 0.0;
    if (ws_ > 0.0) r += ws_ * (ds.cwiseProduct(ls_ * ds)).sum();
    if (wt_ > 0.0) r += wt_ * (dt.cwiseProduct(lt_ * dt)).sum();
    return r;
  }

  LaplaceObjective objective(const Matrix& g) const {
    LaplaceObjective o;
    o.transport = g.cwiseProduct(cost_).sum();
    if (regularized()) o.regularizer = quad(delta_src(g, true), delta_tgt(g, true));
    return o;
  }

  Matrix gradient(const Matrix& g) const {
    Matrix grad = Matrix::Zero(g.rows(), g.cols());
    if (ws_ > 0.0) {
      const Matrix d = delta_src(g, true);
      const Matrix ld = ls_ * d;
      grad += (2.0 * ws_) * (mu_.cwiseInverse().asDiagonal() * (ld * y_.transpose()));
    }
    if (wt_ > 0.0) {
      const Matrix d = delta_tgt(g, true);
      const Matrix ld = lt_ * d;
      grad += (2.0 * wt_) * ((x_ * ld.transpose()) * nu_.cwiseInverse().asDiagonal());
    }
    return grad;
  }

  // Curvature of R along direction `dir`: R(g + t dir) = R(g) + t <grad, dir> + t^2 curvature.
  double curvature(const Matrix& dir) const { return quad(delta_src(dir, false), delta_tgt(dir, false)); }

 private:
  const Matrix& x_;
  const Matrix& y_;
  OtParams params_;
  Vector mu_, nu_;
  Matrix cost_;
  double ws_ = 0.0, wt_ = 0.0;
  bool disp_ = true;
  SpMat ls_, lt_;
};

}  // namespace

TransportPlan solve_laplace_ot(const PairedDataset& ds, const OtParams& params) {
  params.validate();
  if (ds.size() < 2) throw PreconditionError("need at least 2 pairs");
  const LaplaceProblem prob(ds, params);

  TransportPlan plan;
  plan.params = params;
  plan.mu = prob.mu();
  plan.nu = prob.nu();
  plan.x_train = ds.images().data();
  plan.y_train = ds.texts().data();

  Matrix gamma = solve_emd(prob.mu(), prob.nu(), prob.cost()).plan;
  double f = prob.objective(gamma).total();
  plan.objective_trace.push_back(f);

  if (!prob.regularized()) {
    plan.gamma = std::move(gamma);
    plan.converged = true;
    return plan;
  }

  for (Index it = 0; it < params.max_iters; ++it) {
    const Matrix lin = prob.cost() + prob.gradient(gamma);
    const Matrix vertex = solve_emd(prob.mu(), prob.nu(), lin).plan;
    const Matrix dir = vertex - gamma;
    const double slope = lin.cwiseProduct(dir).sum();
    const double fw_gap = -slope;
    if (fw_gap <= 1e-15 * std::max(1.0, std::abs(f))) {
      plan.converged = true;
      break;
    }
    const double curv = prob.curvature(dir);
    double step = 1.0;
    if (curv > 0.0) step = std::clamp(-slope / (2.0 * curv), 0.0, 1.0);

    Matrix next = gamma + step * dir;
    const double f_next = prob.objective(next).total();
    if (!(f_next <= f)) {
      // Rounding left no measurable descent along this direction.
      plan.converged = true;
      break;
    }
    const double rel = (f - f_next) / std::max(std::abs(f), 1e-300);
    gamma = std::move(next);
    f = f_next;
    plan.objective_trace.push_back(f);
    if (rel < params.tol) {
      plan.converged = true;
      break;
    }
  }
  plan.gamma = std::move(gamma.cwiseMax(0.0).eval());
  return plan;
}

LaplaceObjective laplace_objective(const PairedDataset& ds, const OtParams& params, const Matrix& gamma) {
  const LaplaceProblem prob(ds, params);
  return prob.objective(gamma);
}

Matrix transport_in_sample(const TransportPlan& plan) {
  for (Index i = 0; i < plan.mu.size(); ++i)
    if (!(plan.mu(i) > 0.0)) throw PreconditionError("zero marginal at source row " + std::to_string(i));
  return plan.mu.cwiseInverse().asDiagonal() * (plan.gamma * plan.y_train);
}

Matrix transport_inverse_in_sample(const TransportPlan& plan) {
  for (Index j = 0; j < plan.nu.size(); ++j)
    if (!(plan.nu(j) > 0.0)) throw PreconditionError("zero marginal at target row " + std::to_string(j));
  return plan.nu.cwiseInverse().asDiagonal() * (plan.gamma.transpose() * plan.x_train);
}

namespace {

Matrix displace_by_neighbours(const Matrix& train, const Matrix& mapped, const Matrix& pts, Index nn) {
  if (train.rows() == 0) throw PreconditionError("empty training set");
  if (nn < 1) throw PreconditionError("nn must be >= 1");
  if (pts.cols() != train.cols())
    throw ValidationError("dimension mismatch: " + std::to_string(pts.cols()) + " vs " +
                          std::to_string(train.cols()));
  nn = std::min(nn, train.rows());
  const Matrix disp = mapped - train;
  const Matrix d2 = pairwise_sq_euclidean(pts, train);
  Matrix out = pts;
  std::vector<Index> idx(static_cast<std::size_t>(train.rows()));
  for (Index i = 0; i < pts.rows(); ++i) {
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + nn, idx.end(), [&](Index a, Index b) {
      return d2(i, a) < d2(i, b) || (d2(i, a) == d2(i, b) && a < b);
    });
    Eigen::RowVectorXd shift = Eigen::RowVectorXd::Zero(train.cols());
    for (Index t = 0; t < nn; ++t) shift += disp.row(idx[static_cast<std::size_t>(t)]);
    out.row(i) += shift / static_cast<double>(nn);
  }
  return out;
}

}  // namespace

Matrix transport_out_of_sample(const TransportPlan& plan, const Matrix& x_new, Index nn) {
  return displace_by_neighbours(plan.x_train, transport_in_sample(plan), x_new, nn);
}

Matrix transport_inverse_out_of_sample(const TransportPlan& plan, const Matrix& y_new, Index nn) {
  return displace_by_neighbours(plan.y_train, transport_inverse_in_sample(plan), y_new, nn);
}

}  // namespace gapkit
