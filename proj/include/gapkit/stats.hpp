#pragma once

#include <span>

namespace gapkit {

enum class SignificanceTest { PairedT, Wilcoxon };
enum class WilcoxonMethod { Auto, Exact, Normal };

/// Two-sided p-value of the paired t-test on before - after.
/// All-zero differences give p = 1; constant non-zero differences are rejected.
double paired_t_test(std::span<const double> before, std::span<const double> after);

/// Two-sided Wilcoxon signed-rank p-value. Zero differences are dropped and
/// tied magnitudes get mid-ranks. Auto uses the exact null distribution for up
/// to 20 non-zero differences and the tie- and continuity-corrected normal
/// approximation above that.
double wilcoxon_signed_rank(std::span<const double> before, std::span<const double> after,
                            WilcoxonMethod method = WilcoxonMethod::Auto);

double significance_test(std::span<const double> before, std::span<const double> after,
                         SignificanceTest test);

}  // namespace gapkit
