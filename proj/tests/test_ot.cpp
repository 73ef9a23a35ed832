#include <cmath>

#include "doctest.h"
#include "gapkit/emd.hpp"
#include "gapkit/error.hpp"
#include "gapkit/numerics.hpp"
#include "gapkit/ot.hpp"
#include "gapkit/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gapkit;

namespace {

PairedDataset pairs(const Matrix& x, const Matrix& y) {
  return PairedDataset(EmbeddingMatrix(x, Modality::Image), EmbeddingMatrix(y, Modality::Text));
}

double feasibility_error(const TransportPlan& p) {
  const double rows = (p.gamma.rowwise().sum() - p.mu).cwiseAbs().maxCoeff();
  const double cols = (p.gamma.colwise().sum().transpose() - p.nu).cwiseAbs().maxCoeff();
  return std::max({rows, cols, -std::min(0.0, p.gamma.minCoeff())});
}

// Direct double-sum form of the objective.
double objective_oracle(const PairedDataset& ds, const OtParams& p, const Matrix& g, double* transport = nullptr) {
  const Matrix& x = ds.images().data();
  const Matrix& y = ds.texts().data();
  const Index n = ds.size();
  const Matrix c = oracle::naive_sq_euclidean(x, y);
  double t = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) t += g(i, j) * c(i, j);
  if (transport) *transport = t;
  if (p.eta == 0) return t;
  const Matrix ss = build_knn_similarity(x, p.sim_k);
  const Matrix st = build_knn_similarity(y, p.sim_k);
  const double mass = 1.0 / static_cast<double>(n);
  Matrix ds_(n, x.cols()), dt(n, x.cols());
  for (Index i = 0; i < n; ++i) {
    ds_.row(i) = (g.row(i) * y) / mass;
    dt.row(i) = (g.col(i).transpose() * x) / mass;
    if (p.reg_mode == RegMode::Displacement) {
      ds_.row(i) -= x.row(i);
      dt.row(i) -= y.row(i);
    }
  }
  double rs = 0, rt = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      rs += ss(i, j) * (ds_.row(i) - ds_.row(j)).squaredNorm();
      rt += st(i, j) * (dt.row(i) - dt.row(j)).squaredNorm();
    }
  return t + p.eta / static_cast<double>(n * n) * (p.lambda_s * rs + p.lambda_t * rt);
}

}  // namespace

TEST_SUITE("ot") {
  TEST_CASE("knn similarity examples") {
    const Matrix e = Matrix::Identity(3, 3);
    CHECK(build_knn_similarity(e, 1).cwiseAbs().maxCoeff() == 0.0);
    Matrix tw(3, 2);
    tw << 1, 0, 1, 0, 0, 1;
    const Matrix s = build_knn_similarity(tw, 1);
    CHECK(s(0, 1) == doctest::Approx(1.0));
    CHECK(s(1, 0) == doctest::Approx(1.0));
    CHECK(s.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS(build_knn_similarity(tw, 3));
    CHECK_THROWS(build_knn_similarity(tw, 0));
  }

  TEST_CASE("knn edge set matches exhaustive distance sort") {
    const Matrix x = oracle::gaussian(10, 4, 2);
    const Matrix s = build_knn_similarity(x, 3);
    const Matrix d = oracle::naive_sq_euclidean(x, x);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> edge = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(10, 10, false);
    for (Index i = 0; i < 10; ++i) {
      std::vector<Index> o;
      for (Index j = 0; j < 10; ++j)
        if (j != i) o.push_back(j);
      std::sort(o.begin(), o.end(), [&](Index a, Index b) { return d(i, a) < d(i, b) || (d(i, a) == d(i, b) && a < b); });
      for (int t = 0; t < 3; ++t) edge(i, o[t]) = edge(o[t], i) = true;
    }
    const auto nb = knn_indices(x, 3);
    for (Index i = 0; i < 10; ++i) {
      for (Index j : nb[static_cast<std::size_t>(i)]) CHECK(edge(i, j));
      for (Index j = 0; j < 10; ++j) {
        if (!edge(i, j)) CHECK(s(i, j) == 0.0);
        if (edge(i, j)) {
          const double cosv = oracle::naive_dot(x, i, x, j) /
                              std::sqrt(oracle::naive_dot(x, i, x, i) * oracle::naive_dot(x, j, x, j));
          CHECK(s(i, j) == doctest::Approx(std::max(0.0, cosv)).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("eta = 0 reproduces the exact EMD") {
    const auto ds = pairs(oracle::gaussian(12, 3, 1), oracle::gaussian(12, 3, 2));
    OtParams p;
    p.eta = 0;
    const auto plan = solve_laplace_ot(ds, p);
    const Vector u = Vector::Constant(12, 1.0 / 12);
    const auto emd = solve_emd(u, u, oracle::naive_sq_euclidean(ds.images().data(), ds.texts().data()));
    CHECK(std::abs(plan.objective_trace.back() - emd.cost) < 1e-9);
    CHECK((plan.gamma - emd.plan).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("identical source and target gives the identity coupling") {
    Matrix x(2, 2);
    x << 1, 0, 1, 1;
    for (double eta : {0.0, 1.0, 10.0}) {
    OtParams p;
    p.sim_k = 1;
    p.eta = eta;
    p.lambda_s = 1.0;
    p.lambda_t = 2.0;
    const auto plan = solve_laplace_ot(pairs(x, x), p);
    CHECK(plan.gamma(0, 0) == doctest::Approx(0.5));
    CHECK(plan.gamma(1, 1) == doctest::Approx(0.5));
    CHECK(laplace_objective(pairs(x, x), p, plan.gamma).transport == doctest::Approx(0.0));
    }
  }

  TEST_CASE("n=4 regularised instance: monotone trace and direct-formula objective") {
    const auto ds = pairs(oracle::gaussian(4, 3, 7), oracle::gaussian(4, 3, 8) + Matrix::Constant(4, 3, 0.5));
    OtParams p;
    p.sim_k = 2;
    const auto plan = solve_laplace_ot(ds, p);
    for (std::size_t i = 1; i < plan.objective_trace.size(); ++i)
      CHECK(plan.objective_trace[i] <= plan.objective_trace[i - 1] + 1e-10);
    CHECK(feasibility_error(plan) <= 1e-8);
    double transport = 0;
    const double direct = objective_oracle(ds, p, plan.gamma, &transport);
    const auto obj = laplace_objective(ds, p, plan.gamma);
    CHECK(std::abs(obj.total() - direct) < 1e-10);
    CHECK(std::abs(obj.transport - transport) < 1e-12);
    // regularised optimum is no worse than the EMD vertex under the same objective
    OtParams p0 = p;
    p0.eta = 0;
    const auto emd_plan = solve_laplace_ot(ds, p0);
    CHECK(obj.total() <= objective_oracle(ds, p, emd_plan.gamma) + 1e-12);
  }

  TEST_CASE("property: plans are feasible and traces monotone across modes and seeds") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const auto ds = pairs(oracle::gaussian(20, 4, seed), oracle::gaussian(20, 4, seed + 40) * 0.7);
      for (RegMode mode : {RegMode::Displacement, RegMode::Position}) {
        OtParams p;
        p.sim_k = 4;
        p.eta = 5;
        p.reg_mode = mode;
        const auto plan = solve_laplace_ot(ds, p);
        CHECK(feasibility_error(plan) <= 1e-8);
        for (std::size_t i = 1; i < plan.objective_trace.size(); ++i)
          CHECK(plan.objective_trace[i] <= plan.objective_trace[i - 1] + 1e-10);
        CHECK(std::abs(plan.objective_trace.back() - objective_oracle(ds, p, plan.gamma)) < 1e-8);
      }
    }
  }

  TEST_CASE("property: doubling eta never lowers the transport cost") {
    int violations = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto ds = pairs(oracle::gaussian(16, 3, 300 + seed), oracle::gaussian(16, 3, 400 + seed));
      OtParams p;
      p.sim_k = 3;
      p.max_iters = 500;
      p.tol = 1e-12;
      double last = -1;
      for (double eta : {0.5, 1.0, 2.0, 4.0}) {
        p.eta = eta;
        const auto plan = solve_laplace_ot(ds, p);
        const double t = laplace_objective(ds, p, plan.gamma).transport;
        if (t < last - 1e-9) ++violations;
        last = t;
      }
    }
    CHECK(violations == 0);
  }

  TEST_CASE("in-sample barycentric projection") {
    const Matrix y = oracle::gaussian(3, 2, 5);
    TransportPlan plan;
    plan.mu = plan.nu = Vector::Constant(3, 1.0 / 3);
    plan.x_train = oracle::gaussian(3, 2, 6);
    plan.y_train = y;
    plan.gamma = Matrix::Zero(3, 3);
    plan.gamma(0, 2) = plan.gamma(1, 0) = plan.gamma(2, 1) = 1.0 / 3;
    const Matrix m = transport_in_sample(plan);
    CHECK((m.row(0) - y.row(2)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((m.row(1) - y.row(0)).cwiseAbs().maxCoeff() < 1e-15);
    plan.gamma = Matrix::Constant(3, 3, 1.0 / 9);
    const Matrix avg = transport_in_sample(plan);
    for (Index i = 0; i < 3; ++i) CHECK((avg.row(i) - y.colwise().mean()).cwiseAbs().maxCoeff() < 1e-15);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ur(0, 1);
    Matrix g(3, 3);
    for (Index i = 0; i < 9; ++i) g.data()[i] = ur(rng);
    plan.gamma = g;
    plan.mu = g.rowwise().sum();
    const Matrix got = transport_in_sample(plan);
    for (Index i = 0; i < 3; ++i)
      for (Index k = 0; k < 2; ++k) {
        double s = 0;
        for (Index j = 0; j < 3; ++j) s += g(i, j) * y(j, k);
        CHECK(std::abs(got(i, k) - s / plan.mu(i)) < 1e-12);
      }
  }

  TEST_CASE("property: in-sample images stay inside the bounding box of Y") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto ds = pairs(oracle::gaussian(15, 3, seed), oracle::gaussian(15, 3, seed + 10));
      OtParams p;
      p.sim_k = 3;
      const auto m = transport_in_sample(solve_laplace_ot(ds, p));
      const Eigen::RowVectorXd lo = ds.texts().data().colwise().minCoeff();
      const Eigen::RowVectorXd hi = ds.texts().data().colwise().maxCoeff();
      for (Index i = 0; i < 15; ++i)
        for (Index k = 0; k < 3; ++k) {
          CHECK(m(i, k) >= lo(k) - 1e-12);
          CHECK(m(i, k) <= hi(k) + 1e-12);
        }
    }
  }

  TEST_CASE("out-of-sample mapping") {
    const auto ds = pairs(oracle::gaussian(10, 3, 1), oracle::gaussian(10, 3, 2));
    OtParams p;
    p.sim_k = 3;
    const auto plan = solve_laplace_ot(ds, p);
    const Matrix in = transport_in_sample(plan);
    const Matrix out = transport_out_of_sample(plan, ds.images().data().middleRows(4, 1), 1);
    CHECK((out.row(0) - in.row(4)).cwiseAbs().maxCoeff() < 1e-12);

    const Matrix same = oracle::gaussian(6, 2, 3);
    const auto id = solve_laplace_ot(pairs(same, same), p);
    const Matrix fresh = oracle::gaussian(4, 2, 4);
    CHECK((transport_out_of_sample(id, fresh, 3) - fresh).cwiseAbs().maxCoeff() < 1e-12);

    // opposite displacements cancel at the midpoint
    TransportPlan sym;
    sym.mu = sym.nu = Vector::Constant(2, 0.5);
    sym.x_train = Matrix(2, 2);
    sym.x_train << -1, 0, 1, 0;
    sym.y_train = Matrix(2, 2);
    sym.y_train << -1, 1, 1, -1;
    sym.gamma = Matrix::Identity(2, 2) * 0.5;
    Matrix mid(1, 2);
    mid << 0, 0;
    CHECK(transport_out_of_sample(sym, mid, 2).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS(transport_out_of_sample(sym, mid, 0));
  }

  TEST_CASE("plan persistence round trip") {
    const auto dir = testutil::scratch_dir("plan");
    const auto ds = pairs(oracle::gaussian(8, 3, 1), oracle::gaussian(8, 3, 2));
    OtParams p;
    p.sim_k = 2;
    p.reg_mode = RegMode::Position;
    const auto plan = solve_laplace_ot(ds, p);
    save_plan(plan, dir / "plan.npz");
    const auto back = load_plan(dir / "plan.npz");
    CHECK(back.gamma == plan.gamma);
    CHECK(back.mu == plan.mu);
    CHECK(back.x_train == plan.x_train);
    CHECK(back.y_train == plan.y_train);
    CHECK(back.objective_trace == plan.objective_trace);
    CHECK(back.params.reg_mode == RegMode::Position);
    CHECK(back.params.sim_k == 2);
    CHECK(back.converged == plan.converged);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("parameter validation") {
    OtParams p;
    p.eta = -1;
    CHECK_THROWS(p.validate());
    p = OtParams{};
    p.tol = 0;
    CHECK_THROWS(p.validate());
    CHECK(parse_reg_mode("position") == RegMode::Position);
    CHECK_THROWS(parse_reg_mode("sideways"));
  }
}
