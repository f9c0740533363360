#pragma once

#include <cstddef>
#include <span>

namespace wristhap::stats {

/// Largest sample size for which the exact null distribution is used.
inline constexpr std::size_t kWilcoxonExactMaxN = 25;

struct WilcoxonResult {
  double statistic = 0.0;  // W = min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_value = 1.0;    // two-sided
  std::size_t n = 0;       // pairs left after dropping zero differences
  bool exact = true;
  bool degenerate = false;  // every difference was zero
};

/// Paired Wilcoxon signed-rank test on the differences x_i - y_i.
///
/// Zero differences are dropped, tied magnitudes share their average rank.
/// For n <= kWilcoxonExactMaxN the p-value comes from the exact permutation
/// distribution of W+ (all 2^n sign assignments, counted by dynamic
/// programming over doubled ranks so ties stay integral); above that a
/// normal approximation with tie-corrected variance is used.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs);

}  // namespace wristhap::stats
