#include <fstream>

#include "json.hpp"

#include "gapkit/error.hpp"
#include "gapkit/npy.hpp"
#include "gapkit/npz.hpp"
#include "gapkit/ot.hpp"

namespace gapkit {
namespace {

constexpr const char* kSolverVersion = "gapkit-gcg-netsimplex/1";

nlohmann::json plan_metadata(const TransportPlan& plan) {
  nlohmann::json j;
  j["solver_version"] = kSolverVersion;
  j["params"] = {{"eta", plan.params.eta},
                 {"lambda_s", plan.params.lambda_s},
                 {"lambda_t", plan.params.lambda_t},
                 {"sim_k", plan.params.sim_k},
                 {"reg_mode", std::string(to_string(plan.params.reg_mode))},
                 {"max_iters", plan.params.max_iters},
                 {"tol", plan.params.tol}};
  j["objective_trace"] = plan.objective_trace;
  j["converged"] = plan.converged;
  return j;
}

Matrix member_matrix(const npz::Members& m, const std::string& name) {
  auto it = m.find(name);
  if (it == m.end()) throw IoError("plan archive lacks " + name);
  return npy::to_matrix(npy::parse(it->second));
}

Vector member_vector(const npz::Members& m, const std::string& name) {
  auto it = m.find(name);
  if (it == m.end()) throw IoError("plan archive lacks " + name);
  const auto arr = npy::parse(it->second);
  if (arr.shape.size() != 1) throw IoError(name + " must be 1-D");
  return Eigen::Map<const Vector>(arr.values.data(), static_cast<Index>(arr.values.size()));
}

}  // namespace

void save_plan(const TransportPlan& plan, const std::filesystem::path& path) {
  npz::Members m;
  m["gamma.npy"] = npy::encode_matrix(plan.gamma);
  m["mu.npy"] = npy::encode_vector(plan.mu);
  m["nu.npy"] = npy::encode_vector(plan.nu);
  m["x_train.npy"] = npy::encode_matrix(plan.x_train);
  m["y_train.npy"] = npy::encode_matrix(plan.y_train);
  m["meta.json"] = plan_metadata(plan).dump(2);
  npz::write(path, m);
}

TransportPlan load_plan(const std::filesystem::path& path) {
  const auto m = npz::read(path);
  TransportPlan plan;
  plan.gamma = member_matrix(m, "gamma.npy");
  plan.mu = member_vector(m, "mu.npy");
  plan.nu = member_vector(m, "nu.npy");
  plan.x_train = member_matrix(m, "x_train.npy");
  plan.y_train = member_matrix(m, "y_train.npy");
  auto it = m.find("meta.json");
  if (it == m.end()) throw IoError("plan archive lacks meta.json");
  const auto j = nlohmann::json::parse(it->second);
  const auto& p = j.at("params");
  plan.params.eta = p.at("eta");
  plan.params.lambda_s = p.at("lambda_s");
  plan.params.lambda_t = p.at("lambda_t");
  plan.params.sim_k = p.at("sim_k");
  plan.params.reg_mode = parse_reg_mode(p.at("reg_mode").get<std::string>());
  plan.params.max_iters = p.at("max_iters");
  plan.params.tol = p.at("tol");
  plan.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  plan.converged = j.at("converged");
  if (plan.gamma.rows() != plan.mu.size() || plan.gamma.cols() != plan.nu.size() ||
      plan.x_train.rows() != plan.mu.size() || plan.y_train.rows() != plan.nu.size())
    throw IoError(path.string() + ": inconsistent plan shapes");
  return plan;
}

}  // namespace gapkit
