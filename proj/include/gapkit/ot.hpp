#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gapkit/embedding_io.hpp"
#include "gapkit/types.hpp"

namespace gapkit {

enum class RegMode { Displacement, Position };

std::string_view to_string(RegMode m);
RegMode parse_reg_mode(std::string_view s);

struct OtParams {
  double eta = 1.0;       // overall regularisation weight
  double lambda_s = 1.0;  // source-graph smoothness weight
  double lambda_t = 1.0;  // target-graph smoothness weight
  Index sim_k = 10;       // neighbours per point in the similarity graphs
  RegMode reg_mode = RegMode::Displacement;
  Index max_iters = 100;
  double tol = 1e-9;      // stop once the relative objective decrease falls below this

  void validate() const;
};

/// Fitted coupling plus the training points needed to map new samples.
struct TransportPlan {
  Matrix gamma;  // n_s x n_t
  Vector mu;
  Vector nu;
  Matrix x_train;
  Matrix y_train;
  std::vector<double> objective_trace;
  OtParams params;
  bool converged = false;
};

/// Neighbour lists of the k nearest other rows (squared Euclidean, ties to the lower index).
std::vector<std::vector<Index>> knn_indices(const Matrix& x, Index k);

/// Union-symmetrised kNN graph with cosine weights clamped at zero; zero diagonal.
Matrix build_knn_similarity(const Matrix& x, Index k);

/// Objective of the regularised problem evaluated at `gamma`:
/// <gamma, C> + eta / n^2 * (lambda_s sum_ij Ss_ij |d_i - d_j|^2 + lambda_t sum_ij St_ij |d'_i - d'_j|^2).
struct LaplaceObjective {
  double transport = 0.0;
  double regularizer = 0.0;
  double total() const { return transport + regularizer; }
};

LaplaceObjective laplace_objective(const PairedDataset& ds, const OtParams& params, const Matrix& gamma);

/// Minimises the Laplacian-regularised objective over couplings with uniform
/// marginals using generalized conditional gradient: each step linearises the
/// quadratic term, solves the resulting exact EMD, and line-searches exactly.
/// The loop starts from the unregularised EMD plan.
TransportPlan solve_laplace_ot(const PairedDataset& ds, const OtParams& params);

/// Barycentric projection of the training sources onto the target support.
Matrix transport_in_sample(const TransportPlan& plan);
/// Barycentric projection of the training targets onto the source support (gamma^T).
Matrix transport_inverse_in_sample(const TransportPlan& plan);

/// Maps each new point by the mean displacement of its `nn` nearest training sources.
Matrix transport_out_of_sample(const TransportPlan& plan, const Matrix& x_new, Index nn = 5);
/// Same for new targets using displacements of the inverse map.
Matrix transport_inverse_out_of_sample(const TransportPlan& plan, const Matrix& y_new, Index nn = 5);

void save_plan(const TransportPlan& plan, const std::filesystem::path& path);
TransportPlan load_plan(const std::filesystem::path& path);

}  // namespace gapkit
