#include "gapkit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "gapkit/error.hpp"

namespace gapkit {
namespace {

using nlohmann::json;

json encode_real(double v) {
  if (std::isnan(v)) return "undefined";
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return v;
}

double decode_real(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "+inf" || s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

DistanceMetric parse_distance_metric(const std::string& s) {
  if (s == "cosine") return DistanceMetric::Cosine;
  if (s == "euclidean") return DistanceMetric::Euclidean;
  if (s == "sqeuclidean") return DistanceMetric::SqEuclidean;
  throw IoError("unknown distance metric '" + s + "'");
}

std::string fixed(double v, int decimals) {
  if (std::isnan(v)) return "undef";
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string out = buf;
  // values that round to zero print without a sign
  if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

std::string integer(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.0f", std::round(v));
  return buf;
}

std::string shortest(double v) {
  if (std::isnan(v)) return "undefined";
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Table {
  std::string title;
  std::vector<std::string> datasets;  // per column
  std::vector<std::string> methods;   // per column
  std::vector<std::string> subheads;  // per column
  std::vector<std::vector<std::string>> rows;  // first entry is the model label
};

std::string layout(const Table& t) {
  const std::size_t cols = t.subheads.size() + 1;
  std::vector<std::vector<std::string>> head(3, std::vector<std::string>(cols));
  head[2][0] = "model";
  for (std::size_t c = 1; c < cols; ++c) {
    const bool new_ds = c == 1 || t.datasets[c - 1] != t.datasets[c - 2];
    const bool new_m = new_ds || t.methods[c - 1] != t.methods[c - 2];
    head[0][c] = new_ds ? t.datasets[c - 1] : "";
    head[1][c] = new_m ? t.methods[c - 1] : "";
    head[2][c] = t.subheads[c - 1];
  }
  std::vector<std::size_t> width(cols, 0);
  for (std::size_t c = 0; c < cols; ++c) {
    for (const auto& h : head) width[c] = std::max(width[c], h[c].size());
    for (const auto& r : t.rows) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream os;
  os << "== " << t.title << " ==\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c > 0) os << " | ";
      os << cells[c];
      if (c + 1 < cols) os << std::string(width[c] - cells[c].size(), ' ');
    }
    os << '\n';
  };
  for (const auto& h : head) line(h);
  for (const auto& r : t.rows) line(r);
  os << '\n';
  return os.str();
}

template <typename T>
std::vector<std::string> ordered_unique(const std::vector<MetricReport>& cells, T key) {
  std::vector<std::string> out;
  for (const auto& c : cells) {
    const std::string k = key(c);
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  }
  return out;
}

std::string row_label(const MetricReport& c) { return c.model.empty() ? c.dataset : c.model; }

const MetricReport* find_cell(const std::vector<MetricReport>& cells, const std::string& model,
                              const std::string& ds, const std::string& m) {
  for (const auto& c : cells)
    if (row_label(c) == model && c.dataset == ds && c.method == m) return &c;
  return nullptr;
}

}  // namespace

std::string format_ratio(double v) { return fixed(v, 2); }

json to_json(const MetricReport& r) {
  json j;
  j["dataset"] = r.dataset;
  j["method"] = r.method;
  if (!r.model.empty()) j["model"] = r.model;
  if (r.heterogeneity) {
    const auto& h = *r.heterogeneity;
    j["heterogeneity"] = {{"itr", encode_real(h.itr)},
                          {"tir", encode_real(h.tir)},
                          {"i_i_n", h.image_to_image},
                          {"i_t_n", h.image_to_text},
                          {"t_t_n", h.text_to_text},
                          {"t_i_n", h.text_to_image}};
  }
  if (r.ranks) {
    j["ranks"] = {{"tmr", r.ranks->tmr},
                  {"imr", r.ranks->imr},
                  {"text_ranks", r.ranks->text_ranks},
                  {"image_ranks", r.ranks->image_ranks}};
  }
  if (r.fid) j["fid"] = *r.fid;
  if (r.distance) {
    const auto& d = *r.distance;
    json dj = {{"metric", std::string(to_string(d.metric))},
               {"paired_mean", d.paired_mean},
               {"cross_mean", encode_real(d.cross_mean)},
               {"cross_excludes_matching", d.cross_excludes_matching},
               {"per_pair", d.per_pair}};
    if (d.baseline) dj["baseline"] = *d.baseline;
    if (d.p_paired_t) dj["p_paired_t"] = *d.p_paired_t;
    if (d.p_wilcoxon) dj["p_wilcoxon"] = *d.p_wilcoxon;
    j["distance"] = std::move(dj);
  }
  if (r.recall) {
    json rj = json::object();
    for (const auto& [k, v] : *r.recall) rj[std::to_string(k)] = v;
    j["recall"] = std::move(rj);
  }
  return j;
}

MetricReport report_from_json(const json& j) {
  MetricReport r;
  r.dataset = j.at("dataset").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.model = j.value("model", std::string());
  if (j.contains("heterogeneity")) {
    const auto& h = j.at("heterogeneity");
    HeterogeneityResult out;
    out.itr = decode_real(h.at("itr"));
    out.tir = decode_real(h.at("tir"));
    out.image_to_image = h.at("i_i_n");
    out.image_to_text = h.at("i_t_n");
    out.text_to_text = h.at("t_t_n");
    out.text_to_image = h.at("t_i_n");
    r.heterogeneity = out;
  }
  if (j.contains("ranks")) {
    const auto& k = j.at("ranks");
    RankResult out;
    out.tmr = k.at("tmr");
    out.imr = k.at("imr");
    out.text_ranks = k.at("text_ranks").get<std::vector<Index>>();
    out.image_ranks = k.at("image_ranks").get<std::vector<Index>>();
    r.ranks = std::move(out);
  }
  if (j.contains("fid")) r.fid = j.at("fid").get<double>();
  if (j.contains("distance")) {
    const auto& d = j.at("distance");
    DistanceSummary out;
    out.metric = parse_distance_metric(d.at("metric").get<std::string>());
    out.paired_mean = d.at("paired_mean");
    out.cross_mean = decode_real(d.at("cross_mean"));
    out.cross_excludes_matching = d.at("cross_excludes_matching");
    out.per_pair = d.at("per_pair").get<std::vector<double>>();
    if (d.contains("baseline")) out.baseline = d.at("baseline").get<std::string>();
    if (d.contains("p_paired_t")) out.p_paired_t = d.at("p_paired_t").get<double>();
    if (d.contains("p_wilcoxon")) out.p_wilcoxon = d.at("p_wilcoxon").get<double>();
    r.distance = std::move(out);
  }
  if (j.contains("recall")) {
    std::map<Index, double> rec;
    for (const auto& [k, v] : j.at("recall").items()) rec[std::stoll(k)] = v.get<double>();
    r.recall = std::move(rec);
  }
  return r;
}

json reports_to_json(const std::vector<MetricReport>& cells) {
  json arr = json::array();
  for (const auto& c : cells) arr.push_back(to_json(c));
  return json{{"format", "gapkit-report/1"}, {"reports", std::move(arr)}};
}

std::vector<MetricReport> reports_from_json(const json& j) {
  std::vector<MetricReport> out;
  for (const auto& c : j.at("reports")) out.push_back(report_from_json(c));
  return out;
}

std::vector<MetricReport> read_reports(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing file " + path.string());
  try {
    json j;
    in >> j;
    return reports_from_json(j);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string render_text(const std::vector<MetricReport>& cells) {
  const auto models = ordered_unique(cells, row_label);
  const auto datasets = ordered_unique(cells, [](const MetricReport& c) { return c.dataset; });
  const auto methods = ordered_unique(cells, [](const MetricReport& c) { return c.method; });
  std::ostringstream os;

  auto section = [&](const std::string& title, auto has, const std::vector<std::string>& subs, auto cell_fn) {
    Table t;
    t.title = title;
    std::vector<std::pair<std::string, std::string>> groups;
    for (const auto& ds : datasets)
      for (const auto& m : methods)
        for (const auto& mo : models)
          if (const auto* c = find_cell(cells, mo, ds, m); c && has(*c)) {
            groups.emplace_back(ds, m);
            break;
          }
    if (groups.empty()) return;
    for (const auto& [ds, m] : groups)
      for (const auto& s : subs) {
        t.datasets.push_back(ds);
        t.methods.push_back(m);
        t.subheads.push_back(s);
      }
    for (const auto& mo : models) {
      std::vector<std::string> row{mo};
      for (const auto& [ds, m] : groups) {
        const auto* c = find_cell(cells, mo, ds, m);
        for (std::size_t s = 0; s < subs.size(); ++s)
          row.push_back(c && has(*c) ? cell_fn(*c, s) : "-");
      }
      t.rows.push_back(std::move(row));
    }
    os << layout(t);
  };

  section("Heterogeneity indices", [](const MetricReport& c) { return c.heterogeneity.has_value(); },
          {"ITR", "TIR"}, [](const MetricReport& c, std::size_t s) {
            return format_ratio(s == 0 ? c.heterogeneity->itr : c.heterogeneity->tir);
          });
  section("IMR and TMR (rounded to the nearest integer)", [](const MetricReport& c) { return c.ranks.has_value(); },
          {"IMR", "TMR"}, [](const MetricReport& c, std::size_t s) {
            return integer(s == 0 ? c.ranks->imr : c.ranks->tmr);
          });
  section("FID", [](const MetricReport& c) { return c.fid.has_value(); }, {"FID"},
          [](const MetricReport& c, std::size_t) { return fixed(*c.fid, 2); });

  std::set<Index> ks;
  for (const auto& c : cells)
    if (c.recall)
      for (const auto& [k, v] : *c.recall) ks.insert(k);
  if (!ks.empty()) {
    std::vector<std::string> subs;
    std::vector<Index> kv(ks.begin(), ks.end());
    for (Index k : kv) subs.push_back(std::to_string(k));
    section("Recall at K (image queries, mixed corpus)", [](const MetricReport& c) { return c.recall.has_value(); }, subs,
            [kv](const MetricReport& c, std::size_t s) {
              auto it = c.recall->find(kv[s]);
              return it == c.recall->end() ? std::string("-") : fixed(it->second, 2);
            });
  }
  section("Paired distances", [](const MetricReport& c) { return c.distance.has_value(); },
          {"paired", "all-pairs", "p(t)", "p(wilcoxon)"}, [](const MetricReport& c, std::size_t s) {
            const auto& d = *c.distance;
            switch (s) {
              case 0: return fixed(d.paired_mean, 4);
              case 1: return fixed(d.cross_mean, 4);
              case 2: {
                if (!d.p_paired_t) return std::string("-");
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.3g", *d.p_paired_t);
                return std::string(buf);
              }
              default: {
                if (!d.p_wilcoxon) return std::string("-");
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.3g", *d.p_wilcoxon);
                return std::string(buf);
              }
            }
          });
  return os.str();
}

std::string render_csv(const std::vector<MetricReport>& cells) {
  std::ostringstream os;
  os << "model,dataset,method,metric,value\n";
  for (const auto& c : cells) {
    auto row = [&](const std::string& metric, double v) {
      os << row_label(c) << ',' << c.dataset << ',' << c.method << ',' << metric << ',' << shortest(v) << '\n';
    };
    if (c.heterogeneity) {
      row("ITR", c.heterogeneity->itr);
      row("TIR", c.heterogeneity->tir);
    }
    if (c.ranks) {
      row("IMR", c.ranks->imr);
      row("TMR", c.ranks->tmr);
    }
    if (c.fid) row("FID", *c.fid);
    if (c.recall)
      for (const auto& [k, v] : *c.recall) row("recall@" + std::to_string(k), v);
    if (c.distance) {
      row("paired_mean_distance", c.distance->paired_mean);
      row("cross_mean_distance", c.distance->cross_mean);
      if (c.distance->p_paired_t) row("p_paired_t", *c.distance->p_paired_t);
      if (c.distance->p_wilcoxon) row("p_wilcoxon", *c.distance->p_wilcoxon);
    }
  }
  return os.str();
}

std::string render_histogram_csv(const MetricReport& cell) {
  std::ostringstream os;
  os << "pair_index,distance\n";
  if (cell.distance)
    for (std::size_t i = 0; i < cell.distance->per_pair.size(); ++i)
      os << i << ',' << shortest(cell.distance->per_pair[i]) << '\n';
  return os.str();
}

std::vector<MetricReport> merge_reports(const std::vector<std::vector<MetricReport>>& sets, bool allow_mixed) {
  std::vector<MetricReport> out;
  for (const auto& s : sets) out.insert(out.end(), s.begin(), s.end());
  if (out.empty()) throw PreconditionError("no reports to merge");
  if (!allow_mixed) {
    for (const auto& c : out)
      if (c.dataset != out.front().dataset)
        throw PreconditionError("incompatible dataset labels: '" + out.front().dataset + "' vs '" + c.dataset +
                                "' (pass --allow-mixed to combine)");
  }
  return out;
}

}  // namespace gapkit
