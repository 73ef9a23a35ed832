#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include "gapkit/cli.hpp"
#include "gapkit/error.hpp"
#include "gapkit/hash.hpp"
#include "gapkit/numerics.hpp"
#include "gapkit/report.hpp"
#include "gapkit/spectral.hpp"
#include "gapkit/stats.hpp"

namespace gapkit::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json file_record(const std::string& role, const fs::path& path) {
  return {{"role", role}, {"path", path.generic_string()}, {"sha256", sha256_file(path)}};
}

// The manifest plus every file it points at.
json manifest_records(const fs::path& manifest) {
  const auto m = read_manifest(manifest);
  json arr = json::array();
  arr.push_back(file_record("manifest", manifest));
  arr.push_back(file_record("images", m.images));
  arr.push_back(file_record("texts", m.texts));
  if (m.ids) arr.push_back(file_record("ids", *m.ids));
  return arr;
}

void write_provenance(const RunConfig& cfg, const std::string& command, const json& inputs,
                      const std::vector<fs::path>& outputs, const json& extra = json::object()) {
  json outs = json::array();
  for (const auto& p : outputs) outs.push_back({{"path", p.filename().string()}, {"sha256", sha256_file(p)}});
  json j = {{"format", "gapkit-provenance/1"},
            {"command", command},
            {"params", cfg.params_json()},
            {"inputs", inputs},
            {"outputs", outs}};
  if (!extra.empty()) j["details"] = extra;
  write_json(cfg.out / "provenance.json", j);
}

PairedDataset load_input(const fs::path& manifest, bool normalize) {
  auto ds = load_paired_dataset(manifest);
  return normalize ? l2_normalize_rows(ds) : ds;
}

Matrix take_rows(const Matrix& m, const std::vector<Index>& idx) {
  Matrix out(static_cast<Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = m.row(idx[i]);
  return out;
}

PairedDataset take_pairs(const PairedDataset& ds, const std::vector<Index>& idx) {
  return PairedDataset(EmbeddingMatrix(take_rows(ds.images().data(), idx), Modality::Image),
                       EmbeddingMatrix(take_rows(ds.texts().data(), idx), Modality::Text));
}

std::string file_safe(const std::string& s) {
  std::string out;
  for (unsigned char c : s) out.push_back(std::isalnum(c) || c == '-' || c == '.' ? static_cast<char>(c) : '_');
  return out.empty() ? "_" : out;
}

struct OtFit {
  TransportPlan plan;
  Matrix mapped;  // n rows, original order
  std::vector<Index> train;
};

OtFit fit_and_map(const PairedDataset& ds, const OtParams& params, std::optional<Index> train_pairs,
                  std::uint64_t seed, Index oos_nn, bool inverse) {
  const Index n = ds.size();
  const Index m = std::min(train_pairs.value_or(n), n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  if (m < n) {
    order = seeded_permutation(n, seed);
  } else {
    for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  }
  std::vector<Index> train(order.begin(), order.begin() + m);
  std::vector<Index> rest(order.begin() + m, order.end());

  OtFit fit{solve_laplace_ot(take_pairs(ds, train), params), Matrix(), train};
  const Matrix& moving = inverse ? ds.texts().data() : ds.images().data();
  fit.mapped = moving;
  const Matrix in = inverse ? transport_inverse_in_sample(fit.plan) : transport_in_sample(fit.plan);
  for (std::size_t i = 0; i < train.size(); ++i) fit.mapped.row(train[i]) = in.row(static_cast<Index>(i));
  if (!rest.empty()) {
    const Matrix src = take_rows(moving, rest);
    const Matrix out = inverse ? transport_inverse_out_of_sample(fit.plan, src, oos_nn)
                               : transport_out_of_sample(fit.plan, src, oos_nn);
    for (std::size_t i = 0; i < rest.size(); ++i) fit.mapped.row(rest[i]) = out.row(static_cast<Index>(i));
  }
  return fit;
}

struct Feasibility {
  double row_error = 0.0;
  double col_error = 0.0;
  double min_entry = 0.0;
};

Feasibility check_plan(const TransportPlan& plan) {
  Feasibility f;
  f.row_error = (plan.gamma.rowwise().sum() - plan.mu).cwiseAbs().maxCoeff();
  f.col_error = (plan.gamma.colwise().sum().transpose() - plan.nu).cwiseAbs().maxCoeff();
  f.min_entry = plan.gamma.minCoeff();
  return f;
}

}  // namespace

void cmd_synth(const RunConfig& cfg) {
  const auto ds = generate_paired(cfg.synth);
  ensure_dir(cfg.out);
  const auto manifest = save_paired_dataset(ds, cfg.out, cfg.dataset_label, "ORIG", cfg.model_label);
  write_provenance(cfg, "synth", json::array(), {cfg.out / "images.npy", cfg.out / "texts.npy", manifest},
                   {{"generator", "mt19937_64 + Marsaglia polar"}});
}

void cmd_align(const RunConfig& cfg) {
  const auto& manifest_path = cfg.manifests.front();
  const auto manifest = read_manifest(manifest_path);
  const auto ds = load_input(manifest_path, cfg.normalize);
  const Index n = ds.size();
  const auto label = method_label(cfg.method, cfg.k);
  ensure_dir(cfg.out);

  Matrix xi = ds.images().data();
  Matrix yt = ds.texts().data();
  json details = json::object();
  std::vector<fs::path> outputs;

  switch (cfg.method) {
    case Method::Orig:
      break;
    case Method::Spec: {
      const auto sa = spectral_embed(ds, *cfg.k);
      xi = sa.f_img;
      yt = sa.f_txt;
      details["eigenvalues"] = std::vector<double>(sa.eigenvalues.data(), sa.eigenvalues.data() + sa.eigenvalues.size());
      details["null_eigenvalues_skipped"] = sa.null_count;
      break;
    }
    case Method::Pca: {
      const auto mc = stack_mixed(ds);
      const auto pca = pca_fit(mc.z, *cfg.k);
      xi = pca.scores.topRows(n);
      yt = pca.scores.bottomRows(n);
      details["explained_variance"] =
          std::vector<double>(pca.explained_variance.data(), pca.explained_variance.data() + pca.explained_variance.size());
      break;
    }
    case Method::Ot: {
      auto fit = fit_and_map(ds, *cfg.ot, cfg.train_pairs, cfg.seed, cfg.oos_nn, cfg.inverse);
      (cfg.inverse ? yt : xi) = fit.mapped;
      const auto plan_path = cfg.out / "plan.npz";
      save_plan(fit.plan, plan_path);
      // validate what was written, not what is in memory
      const auto reread = load_plan(plan_path);
      const auto f = check_plan(reread);
      if (f.row_error > 1e-8 || f.col_error > 1e-8 || f.min_entry < -1e-12)
        throw NumericalError("written plan fails the marginal check (row " + std::to_string(f.row_error) +
                             ", col " + std::to_string(f.col_error) + ")");
      const auto obj = laplace_objective(take_pairs(ds, fit.train), fit.plan.params, fit.plan.gamma);
      json pj = {{"train_pairs", fit.train.size()},
                 {"train_indices", fit.train},
                 {"mapped", cfg.inverse ? "texts" : "images"},
                 {"objective_trace", fit.plan.objective_trace},
                 {"converged", fit.plan.converged},
                 {"transport_cost", obj.transport},
                 {"regularizer", obj.regularizer},
                 {"marginal_error_rows", f.row_error},
                 {"marginal_error_cols", f.col_error}};
      write_json(cfg.out / "plan.json", pj);
      outputs.push_back(plan_path);
      outputs.push_back(cfg.out / "plan.json");
      details["converged"] = fit.plan.converged;
      details["iterations"] = fit.plan.objective_trace.empty() ? 0 : fit.plan.objective_trace.size() - 1;
      break;
    }
  }

  PairedDataset aligned(EmbeddingMatrix(std::move(xi), Modality::Image, ds.images().ids()),
                        EmbeddingMatrix(std::move(yt), Modality::Text, ds.texts().ids()));
  const auto out_manifest = save_paired_dataset(aligned, cfg.out, manifest.dataset, label, manifest.model);
  outputs.insert(outputs.begin(), {cfg.out / "images.npy", cfg.out / "texts.npy", out_manifest});
  write_provenance(cfg, "align", manifest_records(manifest_path), outputs, details);
}

void cmd_eval(const RunConfig& cfg) {
  std::vector<MetricReport> cells;
  json inputs = json::array();
  for (const auto& path : cfg.manifests) {
    const auto manifest = read_manifest(path);
    const auto ds = load_input(path, cfg.normalize);
    for (auto& r : manifest_records(path)) inputs.push_back(std::move(r));

    MetricReport cell;
    cell.dataset = manifest.dataset;
    cell.method = manifest.method;
    cell.model = manifest.model;
    for (const auto& c : cells)
      if (c.dataset == cell.dataset && c.method == cell.method && c.model == cell.model)
        throw ValidationError("duplicate report cell " + cell.dataset + "/" + cell.method);

    const auto& m = cfg.metrics;
    if (m.heterogeneity || m.ranks || m.recall) {
      const auto ranking = rank_corpus(stack_mixed(ds));
      if (m.heterogeneity) cell.heterogeneity = heterogeneity_indices(ranking);
      if (m.ranks) cell.ranks = mean_ranks(ranking);
      if (m.recall) cell.recall = recall_at_k(ranking, Modality::Image, cfg.recall_k);
    }
    if (m.fid) cell.fid = fid(ds.images(), ds.texts());
    if (m.distance) {
      const auto st = paired_distance_stats(ds, DistanceMetric::Cosine, cfg.exclude_matching);
      DistanceSummary d;
      d.metric = st.metric;
      d.paired_mean = st.paired_mean;
      d.cross_mean = st.cross_mean;
      d.cross_excludes_matching = st.cross_excludes_matching;
      d.per_pair = st.per_pair;
      cell.distance = std::move(d);
    }
    cells.push_back(std::move(cell));
  }

  // Per-pair distance shifts against the baseline method of the same dataset and model.
  for (auto& c : cells) {
    if (!c.distance || c.method == cfg.baseline) continue;
    const auto base = std::find_if(cells.begin(), cells.end(), [&](const MetricReport& b) {
      return b.method == cfg.baseline && b.dataset == c.dataset && b.model == c.model && b.distance;
    });
    if (base == cells.end() || base->distance->per_pair.size() != c.distance->per_pair.size()) continue;
    const auto& before = base->distance->per_pair;
    const auto& after = c.distance->per_pair;
    c.distance->baseline = cfg.baseline;
    try {
      c.distance->p_paired_t = paired_t_test(before, after);
    } catch (const Error& e) {
      std::cerr << "gapkit: warning: paired t-test skipped for " << c.method << ": " << e.what() << '\n';
    }
    try {
      c.distance->p_wilcoxon = wilcoxon_signed_rank(before, after);
    } catch (const Error& e) {
      std::cerr << "gapkit: warning: Wilcoxon test skipped for " << c.method << ": " << e.what() << '\n';
    }
  }

  ensure_dir(cfg.out);
  std::vector<fs::path> outputs{cfg.out / "report.json", cfg.out / "report.txt", cfg.out / "report.csv"};
  write_json(outputs[0], reports_to_json(cells));
  write_text(outputs[1], render_text(cells));
  write_text(outputs[2], render_csv(cells));
  for (const auto& c : cells) {
    if (!c.distance) continue;
    std::string name = "hist_";
    if (!c.model.empty()) name += file_safe(c.model) + "_";
    name += file_safe(c.dataset) + "_" + file_safe(c.method) + ".csv";
    outputs.push_back(cfg.out / name);
    write_text(outputs.back(), render_histogram_csv(c));
  }
  write_provenance(cfg, "eval", inputs, outputs);
}

void cmd_tune_ot(const RunConfig& cfg) {
  const auto& path = cfg.manifests.front();
  const auto ds = load_input(path, cfg.normalize);
  const Index n = ds.size();
  const auto n_val = static_cast<Index>(std::llround(static_cast<double>(n) * cfg.grid.val_fraction));
  if (n_val < 20)
    throw PreconditionError("validation too small: " + std::to_string(n_val) + " pairs (need >= 20)");
  Index n_train = n - n_val;
  if (cfg.train_pairs) n_train = std::min(n_train, *cfg.train_pairs);
  if (n_train < 2) throw PreconditionError("training split too small: " + std::to_string(n_train) + " pairs");

  const auto perm = seeded_permutation(n, cfg.seed);
  const std::vector<Index> train(perm.begin(), perm.begin() + n_train);
  const std::vector<Index> val(perm.end() - n_val, perm.end());
  const auto train_ds = take_pairs(ds, train);
  const Matrix x_val = take_rows(ds.images().data(), val);
  const Matrix y_val = take_rows(ds.texts().data(), val);
  const OtParams base = cfg.ot.value_or(OtParams{});
  const Index k5[] = {5};

  struct Entry {
    OtParams params;
    double recall5 = 0.0;
    double objective = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
  };
  std::vector<Entry> board;
  for (double eta : cfg.grid.eta)
    for (double ls : cfg.grid.lambda_s)
      for (double lt : cfg.grid.lambda_t) {
        Entry e;
        e.params = base;
        e.params.eta = eta;
        e.params.lambda_s = ls;
        e.params.lambda_t = lt;
        const auto plan = solve_laplace_ot(train_ds, e.params);
        EmbeddingMatrix mapped(transport_out_of_sample(plan, x_val, cfg.oos_nn), Modality::Image);
        if (cfg.normalize) mapped = l2_normalize_rows(mapped);
        const PairedDataset val_ds(std::move(mapped), EmbeddingMatrix(y_val, Modality::Text));
        e.recall5 = recall_at_k(stack_mixed(val_ds), Modality::Image, k5).at(5);
        e.objective = plan.objective_trace.empty() ? 0.0 : plan.objective_trace.back();
        e.converged = plan.converged;
        e.iterations = plan.objective_trace.empty() ? 0 : plan.objective_trace.size() - 1;
        board.push_back(e);
      }
  std::stable_sort(board.begin(), board.end(),
                   [](const Entry& a, const Entry& b) { return a.recall5 > b.recall5; });

  ensure_dir(cfg.out);
  json entries = json::array();
  std::string csv = "rank,eta,lambda_s,lambda_t,recall_at_5,objective,converged\n";
  for (std::size_t i = 0; i < board.size(); ++i) {
    const auto& e = board[i];
    entries.push_back({{"rank", i + 1},
                       {"eta", e.params.eta},
                       {"lambda_s", e.params.lambda_s},
                       {"lambda_t", e.params.lambda_t},
                       {"recall_at_5", e.recall5},
                       {"objective", e.objective},
                       {"converged", e.converged},
                       {"iterations", e.iterations}});
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", i + 1, e.params.eta, e.params.lambda_s,
                  e.params.lambda_t, e.recall5, e.objective, e.converged ? 1 : 0);
    csv += buf;
  }
  const auto& best = board.front();
  const json best_json = {{"eta", best.params.eta},
                          {"lambda_s", best.params.lambda_s},
                          {"lambda_t", best.params.lambda_t},
                          {"sim_k", best.params.sim_k},
                          {"reg_mode", std::string(to_string(best.params.reg_mode))},
                          {"max_iters", best.params.max_iters},
                          {"tol", best.params.tol},
                          {"recall_at_5", best.recall5}};
  const std::vector<fs::path> outputs{cfg.out / "leaderboard.json", cfg.out / "leaderboard.csv",
                                      cfg.out / "best_params.json"};
  write_json(outputs[0], {{"train_pairs", n_train}, {"validation_pairs", n_val}, {"entries", entries}});
  write_text(outputs[1], csv);
  write_json(outputs[2], best_json);
  write_provenance(cfg, "tune-ot", manifest_records(path), outputs);
}

void cmd_report(const RunConfig& cfg) {
  std::vector<std::vector<MetricReport>> sets;
  json inputs = json::array();
  for (const auto& p : cfg.inputs) {
    sets.push_back(read_reports(p));
    inputs.push_back(file_record("report", p));
  }
  const auto merged = merge_reports(sets, cfg.allow_mixed);
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& c : merged)
    if (!seen.emplace(c.model, c.dataset, c.method).second)
      throw ValidationError("duplicate report cell " + c.dataset + "/" + c.method);
  ensure_dir(cfg.out);
  const std::vector<fs::path> outputs{cfg.out / "report.json", cfg.out / "report.txt", cfg.out / "report.csv"};
  write_json(outputs[0], reports_to_json(merged));
  write_text(outputs[1], render_text(merged));
  write_text(outputs[2], render_csv(merged));
  write_provenance(cfg, "report", inputs, outputs);
}

void dispatch(const RunConfig& cfg) {
  cfg.validate();
  switch (cfg.command) {
    case Command::Synth: return cmd_synth(cfg);
    case Command::Align: return cmd_align(cfg);
    case Command::Eval: return cmd_eval(cfg);
    case Command::TuneOt: return cmd_tune_ot(cfg);
    case Command::Report: return cmd_report(cfg);
  }
}

}  // namespace gapkit::cli
