#include <iostream>

#include "CLI11.hpp"

#include "gapkit/cli.hpp"
#include "gapkit/error.hpp"

namespace gapkit::cli {

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"gapkit: measure and close the image/text modality gap in paired embeddings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gapkit 1.0");

  RunConfig cfg;
  std::string method = "orig";
  std::string reg_mode = "displacement";
  std::vector<std::string> metrics;
  OtParams ot;
  Index k = 0;
  Index train_pairs = 0;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic paired dataset with a controllable gap");
  synth->add_option("--n", cfg.synth.n, "Number of pairs")->capture_default_str();
  synth->add_option("--d-latent", cfg.synth.d_latent, "Latent dimension")->capture_default_str();
  synth->add_option("--d-embed", cfg.synth.d_embed, "Embedding dimension")->capture_default_str();
  synth->add_option("--gap", cfg.synth.gap, "Offset magnitude between modalities")->capture_default_str();
  synth->add_option("--noise", cfg.synth.noise, "Per-row noise scale")->capture_default_str();
  synth->add_option("--anchor", cfg.synth.anchor, "Norm of the shared latent anchor (<0: sqrt(d_latent))");
  synth->add_option("--map-mismatch", cfg.synth.map_mismatch, "Perturbation of the text map")->capture_default_str();
  synth->add_option("--seed", cfg.synth.seed, "RNG seed")->capture_default_str();
  synth->add_option("--dataset", cfg.dataset_label, "Dataset label written to the manifest")->capture_default_str();
  synth->add_option("--model", cfg.model_label, "Model label written to the manifest");
  synth->add_option("--out", cfg.out, "Output directory")->required();

  auto* align = app.add_subcommand("align", "Transform a paired dataset with ORIG, SPEC, OT or PCA");
  align->add_option("--manifest", cfg.manifests, "Input manifest")->required();
  align->add_option("--method", method, "orig | spec | ot | pca")->capture_default_str();
  auto* k_opt = align->add_option("--k", k, "Components for spec / pca");
  auto* eta_opt = align->add_option("--eta", ot.eta, "OT regularisation weight");
  auto* ls_opt = align->add_option("--lambda-s", ot.lambda_s, "OT source-graph weight");
  auto* lt_opt = align->add_option("--lambda-t", ot.lambda_t, "OT target-graph weight");
  auto* simk_opt = align->add_option("--sim-k", ot.sim_k, "OT neighbours per point");
  auto* reg_opt = align->add_option("--reg-mode", reg_mode, "displacement | position");
  auto* iters_opt = align->add_option("--max-iters", ot.max_iters, "OT outer iterations");
  auto* tp_opt = align->add_option("--train-pairs", train_pairs, "Fit OT on this many pairs (seeded shuffle)");
  align->add_option("--oos-nn", cfg.oos_nn, "Neighbours for out-of-sample OT mapping")->capture_default_str();
  align->add_flag("--inverse", cfg.inverse, "OT: move texts towards images instead of images towards texts");
  align->add_option("--seed", cfg.seed, "Seed for the train/apply shuffle")->capture_default_str();
  align->add_flag("--normalize", cfg.normalize, "L2-normalise rows before aligning");
  align->add_option("--out", cfg.out, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Compute gap metrics for one or more datasets");
  eval->add_option("--manifest", cfg.manifests, "Input manifest (repeatable)")->required();
  eval->add_option("--metrics", metrics, "Subset of heterogeneity,ranks,fid,recall,distance")->delimiter(',');
  eval->add_option("--recall-k", cfg.recall_k, "Recall cut-offs")->delimiter(',')->capture_default_str();
  eval->add_option("--baseline", cfg.baseline, "Method used as reference for significance tests")->capture_default_str();
  eval->add_flag("--exclude-matching", cfg.exclude_matching, "All-pairs mean distance skips matching pairs");
  eval->add_option("--seed", cfg.seed, "Unused; accepted for uniformity");
  eval->add_flag("--normalize", cfg.normalize, "L2-normalise rows before measuring");
  eval->add_option("--out", cfg.out, "Output directory")->required();

  auto* tune = app.add_subcommand("tune-ot", "Grid-search OT parameters by validation recall@5");
  tune->add_option("--manifest", cfg.manifests, "Input manifest")->required();
  tune->add_option("--grid-eta", cfg.grid.eta, "Candidate eta values")->delimiter(',')->capture_default_str();
  tune->add_option("--grid-lambda-s", cfg.grid.lambda_s, "Candidate lambda_s values")->delimiter(',')->capture_default_str();
  tune->add_option("--grid-lambda-t", cfg.grid.lambda_t, "Candidate lambda_t values")->delimiter(',')->capture_default_str();
  tune->add_option("--val-fraction", cfg.grid.val_fraction, "Share of pairs held out")->capture_default_str();
  tune->add_option("--sim-k", ot.sim_k, "OT neighbours per point");
  auto* treg_opt = tune->add_option("--reg-mode", reg_mode, "displacement | position");
  tune->add_option("--max-iters", ot.max_iters, "OT outer iterations");
  auto* ttp_opt = tune->add_option("--train-pairs", train_pairs, "Cap on training pairs");
  tune->add_option("--oos-nn", cfg.oos_nn, "Neighbours for out-of-sample mapping")->capture_default_str();
  tune->add_option("--seed", cfg.seed, "Seed for the train/validation split")->capture_default_str();
  tune->add_flag("--normalize", cfg.normalize, "L2-normalise rows first");
  tune->add_option("--out", cfg.out, "Output directory")->required();

  auto* report = app.add_subcommand("report", "Merge report.json files into one comparison");
  report->add_option("--input", cfg.inputs, "report.json (repeatable)")->required();
  report->add_flag("--allow-mixed", cfg.allow_mixed, "Permit different dataset labels");
  report->add_option("--out", cfg.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth->parsed()) {
      cfg.command = Command::Synth;
    } else if (align->parsed()) {
      cfg.command = Command::Align;
      cfg.method = parse_method(method);
      if (k_opt->count()) cfg.k = k;
      if (tp_opt->count()) cfg.train_pairs = train_pairs;
      const bool any_ot = eta_opt->count() || ls_opt->count() || lt_opt->count() || simk_opt->count() ||
                          reg_opt->count() || iters_opt->count();
      if (cfg.method == Method::Ot || any_ot) {
        ot.reg_mode = parse_reg_mode(reg_mode);
        cfg.ot = ot;
      }
    } else if (eval->parsed()) {
      cfg.command = Command::Eval;
      cfg.metrics = parse_metrics(metrics);
    } else if (tune->parsed()) {
      cfg.command = Command::TuneOt;
      if (ttp_opt->count()) cfg.train_pairs = train_pairs;
      if (treg_opt->count()) ot.reg_mode = parse_reg_mode(reg_mode);
      cfg.ot = ot;
    } else {
      cfg.command = Command::Report;
    }
    dispatch(cfg);
  } catch (const std::exception& e) {
    std::cerr << "gapkit: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace gapkit::cli
