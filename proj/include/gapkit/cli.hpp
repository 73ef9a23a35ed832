#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gapkit/metrics.hpp"
#include "gapkit/ot.hpp"
#include "gapkit/synth.hpp"

namespace gapkit::cli {

enum class Command { Synth, Align, Eval, TuneOt, Report };
enum class Method { Orig, Spec, Ot, Pca };

Method parse_method(std::string_view s);
/// Table label: ORIG, SPEC{k}, OT, PCA{k}.
std::string method_label(Method m, std::optional<Index> k);

/// Metric subset accepted by `eval --metrics`.
struct MetricSet {
  bool heterogeneity = true;
  bool ranks = true;
  bool fid = true;
  bool recall = true;
  bool distance = true;
};
MetricSet parse_metrics(const std::vector<std::string>& names);

struct TuneGrid {
  std::vector<double> eta{0.1, 1.0, 10.0};
  std::vector<double> lambda_s{0.5, 1.0, 2.0};
  std::vector<double> lambda_t{0.5, 1.0, 2.0};
  double val_fraction = 0.2;
};

struct RunConfig {
  Command command = Command::Eval;
  std::vector<std::filesystem::path> manifests;
  std::vector<std::filesystem::path> inputs;  // report files for `report`
  Method method = Method::Orig;
  std::optional<Index> k;        // Spec, Pca
  std::optional<OtParams> ot;    // Ot, tune-ot
  std::optional<Index> train_pairs;
  Index oos_nn = 5;
  bool inverse = false;          // Ot: move texts towards images instead
  MetricSet metrics;
  std::vector<Index> recall_k{5, 10, 20};
  std::string baseline = "ORIG";
  bool exclude_matching = false;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  bool normalize = false;
  bool allow_mixed = false;
  SynthSpec synth;
  std::string dataset_label = "SYNTH";
  std::string model_label;
  TuneGrid grid;

  /// Throws ValidationError when method parameters are missing or superfluous.
  void validate() const;
  nlohmann::json params_json() const;
};

void cmd_synth(const RunConfig& cfg);
void cmd_align(const RunConfig& cfg);
void cmd_eval(const RunConfig& cfg);
void cmd_tune_ot(const RunConfig& cfg);
void cmd_report(const RunConfig& cfg);
void dispatch(const RunConfig& cfg);

/// Parses argv, runs the command, and maps failures to a one-line diagnostic
/// on stderr. Returns the process exit code (0 ok, 1 runtime error, 2 usage).
int run_cli(int argc, const char* const* argv);

/// Deterministic permutation of 0..n-1 (Fisher-Yates over mt19937_64).
std::vector<Index> seeded_permutation(Index n, std::uint64_t seed);

}  // namespace gapkit::cli
