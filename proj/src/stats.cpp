#include "gapkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "gapkit/error.hpp"

namespace gapkit {
namespace {

std::vector<double> differences(std::span<const double> before, std::span<const double> after) {
  if (before.size() != after.size()) throw PreconditionError("samples must have equal length");
  std::vector<double> d(before.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = before[i] - after[i];
  return d;
}

struct SignedRanks {
  std::vector<int> doubled;  // 2 * mid-rank of |d|, so ties stay integral
  int w_plus_doubled = 0;
  double tie_term = 0.0;     // sum over tie groups of t^3 - t
};

SignedRanks signed_ranks(const std::vector<double>& nz) {
  const std::size_t n = nz.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(nz[a]) < std::abs(nz[b]); });
  SignedRanks out;
  out.doubled.resize(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(nz[order[j + 1]]) == std::abs(nz[order[i]])) ++j;
    const int doubled_rank = static_cast<int>(i + 1 + j + 1);  // 2 * ((i+1 + j+1) / 2)
    for (std::size_t t = i; t <= j; ++t) out.doubled[order[t]] = doubled_rank;
    const double size = static_cast<double>(j - i + 1);
    out.tie_term += size * size * size - size;
    i = j + 1;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (nz[i] > 0) out.w_plus_doubled += out.doubled[i];
  return out;
}

double wilcoxon_exact(const SignedRanks& r) {
  const int total = std::accumulate(r.doubled.begin(), r.doubled.end(), 0);
  // counts[s] = number of sign patterns whose positive doubled-rank sum is s
  std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
  counts[0] = 1.0;
  int reach = 0;
  for (int v : r.doubled) {
    for (int s = reach; s >= 0; --s)
      if (counts[static_cast<std::size_t>(s)] != 0.0) counts[static_cast<std::size_t>(s + v)] += counts[static_cast<std::size_t>(s)];
    reach += v;
  }
  const double patterns = std::ldexp(1.0, static_cast<int>(r.doubled.size()));
  double lower = 0.0, upper = 0.0;
  for (int s = 0; s <= total; ++s) {
    if (s <= r.w_plus_doubled) lower += counts[static_cast<std::size_t>(s)];
    if (s >= r.w_plus_doubled) upper += counts[static_cast<std::size_t>(s)];
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / patterns);
}

double wilcoxon_normal(const SignedRanks& r) {
  const double n = static_cast<double>(r.doubled.size());
  const double w = 0.5 * static_cast<double>(r.w_plus_doubled);
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - r.tie_term / 48.0;
  if (var <= 0.0) return 1.0;
  const double z = std::max(0.0, std::abs(w - mean) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

}  // namespace

double paired_t_test(std::span<const double> before, std::span<const double> after) {
  const auto d = differences(before, after);
  const std::size_t n = d.size();
  if (n < 2) throw PreconditionError("paired t-test needs at least 2 pairs");
  if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) return 1.0;
  if (std::all_of(d.begin(), d.end(), [&](double v) { return v == d.front(); }))
    throw PreconditionError("zero variance");
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) throw PreconditionError("zero variance");
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  boost::math::students_t dist(static_cast<double>(n - 1));
  return std::min(1.0, 2.0 * boost::math::cdf(dist, -std::abs(t)));
}

double wilcoxon_signed_rank(std::span<const double> before, std::span<const double> after,
                            WilcoxonMethod method) {
  const auto d = differences(before, after);
  if (d.size() < 6) throw PreconditionError("Wilcoxon test needs at least 6 pairs");
  std::vector<double> nz;
  for (double v : d)
    if (v != 0.0) nz.push_back(v);
  if (nz.empty()) return 1.0;
  const auto ranks = signed_ranks(nz);
  const bool exact = method == WilcoxonMethod::Exact || (method == WilcoxonMethod::Auto && nz.size() <= 20);
  if (exact && nz.size() > 200) throw PreconditionError("exact Wilcoxon limited to 200 non-zero differences");
  return exact ? wilcoxon_exact(ranks) : wilcoxon_normal(ranks);
}

double significance_test(std::span<const double> before, std::span<const double> after, SignificanceTest test) {
  return test == SignificanceTest::PairedT ? paired_t_test(before, after) : wilcoxon_signed_rank(before, after);
}

}  // namespace gapkit
