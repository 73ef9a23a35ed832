#include <algorithm>
#include <cctype>
#include <random>

#include "gapkit/cli.hpp"
#include "gapkit/error.hpp"

namespace gapkit::cli {

namespace {
std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}
}  // namespace

Method parse_method(std::string_view s) {
  const auto v = lower(s);
  if (v == "orig") return Method::Orig;
  if (v == "spec") return Method::Spec;
  if (v == "ot") return Method::Ot;
  if (v == "pca") return Method::Pca;
  throw ValidationError("unknown method '" + std::string(s) + "' (expected orig, spec, ot or pca)");
}

std::string method_label(Method m, std::optional<Index> k) {
  switch (m) {
    case Method::Orig: return "ORIG";
    case Method::Ot: return "OT";
    case Method::Spec: return "SPEC" + std::to_string(k.value_or(0));
    case Method::Pca: return "PCA" + std::to_string(k.value_or(0));
  }
  return "?";
}

MetricSet parse_metrics(const std::vector<std::string>& names) {
  if (names.empty()) return {};
  MetricSet s{false, false, false, false, false};
  for (const auto& raw : names) {
    const auto n = lower(raw);
    if (n == "all") return {};
    if (n == "heterogeneity" || n == "itr" || n == "tir") s.heterogeneity = true;
    else if (n == "ranks" || n == "imr" || n == "tmr") s.ranks = true;
    else if (n == "fid") s.fid = true;
    else if (n == "recall") s.recall = true;
    else if (n == "distance" || n == "distances") s.distance = true;
    else throw ValidationError("unknown metric '" + raw + "'");
  }
  return s;
}

void RunConfig::validate() const {
  const bool needs_k = method == Method::Spec || method == Method::Pca;
  if (command == Command::Align) {
    if (manifests.size() != 1) throw ValidationError("align takes exactly one --manifest");
    if (needs_k && !k) throw ValidationError("--k is required for --method spec and pca");
    if (!needs_k && k) throw ValidationError("--k is only valid with --method spec or pca");
    if (needs_k && *k < 1) throw ValidationError("--k must be >= 1");
    if ((method == Method::Ot) != ot.has_value())
      throw ValidationError("OT parameters are only valid with --method ot");
    if (method != Method::Ot && (train_pairs || inverse))
      throw ValidationError("--train-pairs and --inverse are only valid with --method ot");
  }
  if (ot) ot->validate();
  if (train_pairs && *train_pairs < 2) throw ValidationError("--train-pairs must be >= 2");
  if (oos_nn < 1) throw ValidationError("--oos-nn must be >= 1");
  for (Index kk : recall_k)
    if (kk < 1) throw ValidationError("--recall-k values must be >= 1");
  if (command == Command::Eval && manifests.empty()) throw ValidationError("eval needs at least one --manifest");
  if (command == Command::TuneOt) {
    if (manifests.size() != 1) throw ValidationError("tune-ot takes exactly one --manifest");
    if (grid.eta.empty() || grid.lambda_s.empty() || grid.lambda_t.empty()) throw ValidationError("empty grid");
    if (!(grid.val_fraction > 0.0 && grid.val_fraction < 1.0))
      throw ValidationError("--val-fraction must lie in (0, 1)");
  }
  if (command == Command::Report && inputs.empty()) throw ValidationError("report needs at least one --input");
  if (command == Command::Synth) synth.validate();
  if (out.empty()) throw ValidationError("--out is required");
}

nlohmann::json RunConfig::params_json() const {
  nlohmann::json j;
  j["normalize"] = normalize;
  j["seed"] = seed;
  switch (command) {
    case Command::Synth:
      j["n"] = synth.n;
      j["d_latent"] = synth.d_latent;
      j["d_embed"] = synth.d_embed;
      j["gap"] = synth.gap;
      j["noise"] = synth.noise;
      j["anchor"] = synth.anchor;
      j["map_mismatch"] = synth.map_mismatch;
      j["seed"] = synth.seed;
      j.erase("normalize");
      break;
    case Command::Align:
      j["method"] = method_label(method, k);
      if (k) j["k"] = *k;
      if (ot) {
        j["eta"] = ot->eta;
        j["lambda_s"] = ot->lambda_s;
        j["lambda_t"] = ot->lambda_t;
        j["sim_k"] = ot->sim_k;
        j["reg_mode"] = std::string(to_string(ot->reg_mode));
        j["max_iters"] = ot->max_iters;
        j["tol"] = ot->tol;
        j["oos_nn"] = oos_nn;
        j["inverse"] = inverse;
        if (train_pairs) j["train_pairs"] = *train_pairs;
      }
      break;
    case Command::Eval:
      j["recall_k"] = recall_k;
      j["baseline"] = baseline;
      j["exclude_matching"] = exclude_matching;
      j["metrics"] = {{"heterogeneity", metrics.heterogeneity},
                      {"ranks", metrics.ranks},
                      {"fid", metrics.fid},
                      {"recall", metrics.recall},
                      {"distance", metrics.distance}};
      break;
    case Command::TuneOt:
      j["grid"] = {{"eta", grid.eta}, {"lambda_s", grid.lambda_s}, {"lambda_t", grid.lambda_t}};
      j["val_fraction"] = grid.val_fraction;
      j["sim_k"] = ot ? ot->sim_k : OtParams{}.sim_k;
      j["reg_mode"] = std::string(to_string(ot ? ot->reg_mode : RegMode::Displacement));
      j["oos_nn"] = oos_nn;
      if (train_pairs) j["train_pairs"] = *train_pairs;
      break;
    case Command::Report:
      j = {{"allow_mixed", allow_mixed}};
      break;
  }
  return j;
}

std::vector<Index> seeded_permutation(Index n, std::uint64_t seed) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    // modulo bias is below 2^-40 for any realistic n
    const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

}  // namespace gapkit::cli
