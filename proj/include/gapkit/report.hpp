#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gapkit/metrics.hpp"

namespace gapkit {

struct DistanceSummary {
  DistanceMetric metric = DistanceMetric::Cosine;
  double paired_mean = 0.0;
  double cross_mean = 0.0;
  bool cross_excludes_matching = false;
  std::vector<double> per_pair;
  // Significance of the per-pair change against a baseline cell, when one was evaluated.
  std::optional<std::string> baseline;
  std::optional<double> p_paired_t;
  std::optional<double> p_wilcoxon;
};

/// One (dataset, method) cell of the comparison tables. Metrics that were not
/// requested are left empty and omitted from every serialisation.
struct MetricReport {
  std::string dataset;
  std::string method;
  std::string model;  // row label in the tables; the dataset label is used when empty
  std::optional<HeterogeneityResult> heterogeneity;
  std::optional<RankResult> ranks;
  std::optional<double> fid;
  std::optional<DistanceSummary> distance;
  std::optional<std::map<Index, double>> recall;
};

nlohmann::json to_json(const MetricReport& r);
MetricReport report_from_json(const nlohmann::json& j);

nlohmann::json reports_to_json(const std::vector<MetricReport>& cells);
std::vector<MetricReport> reports_from_json(const nlohmann::json& j);
std::vector<MetricReport> read_reports(const std::filesystem::path& path);

/// Aligned-column tables. Rows are models; columns are grouped by dataset,
/// then method (first-seen order), then metric. Sections: heterogeneity
/// (ITR/TIR), mean ranks (IMR/TMR), FID, recall@K, distances. Sections without
/// data are skipped.
std::string render_text(const std::vector<MetricReport>& cells);

/// Long format: model,dataset,method,metric,value.
std::string render_csv(const std::vector<MetricReport>& cells);

/// pair_index,distance rows for one cell (empty when distances were not computed).
std::string render_histogram_csv(const MetricReport& cell);

/// Concatenates report sets; throws unless all share one dataset label or allow_mixed is set.
std::vector<MetricReport> merge_reports(const std::vector<std::vector<MetricReport>>& sets, bool allow_mixed);

/// Formats a ratio the way the tables do: 2 decimals, "+inf", or "undef".
std::string format_ratio(double v);

}  // namespace gapkit
