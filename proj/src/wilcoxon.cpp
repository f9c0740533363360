#include "wristhap/wilcoxon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace wristhap::stats {

namespace {

struct Ranked {
  std::vector<double> ranks;  // average ranks of |d|, same order as the input
  double tie_term = 0.0;      // sum over tie groups of (t^3 - t)
};

Ranked rank_magnitudes(const std::vector<double>& d) {
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
  Ranked r;
  r.ranks.assign(n, 0.0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) r.ranks[order[k]] = avg;
    const double t = static_cast<double>(j - i + 1);
    r.tie_term += t * t * t - t;
    i = j + 1;
  }
  return r;
}

// P(W+ <= w) under the null, by counting sign assignments.
double exact_lower_tail(const std::vector<double>& ranks, double w) {
  std::vector<long> doubled(ranks.size());
  long total = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    doubled[i] = std::lround(2.0 * ranks[i]);
    total += doubled[i];
  }
  std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
  count[0] = 1.0;
  long reach = 0;
  for (long r : doubled) {
    for (long s = reach; s >= 0; --s) {
      if (count[static_cast<std::size_t>(s)] != 0.0) count[static_cast<std::size_t>(s + r)] += count[static_cast<std::size_t>(s)];
    }
    reach += r;
  }
  const long limit = std::lround(2.0 * w);
  double below = 0.0;
  for (long s = 0; s <= limit && s <= total; ++s) below += count[static_cast<std::size_t>(s)];
  return below / std::ldexp(1.0, static_cast<int>(ranks.size()));
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs) {
  if (diffs.empty()) throw std::invalid_argument("wilcoxon_signed_rank: need at least one pair");
  std::vector<double> d;
  d.reserve(diffs.size());
  for (double x : diffs) {
    if (!std::isfinite(x)) throw std::invalid_argument("wilcoxon_signed_rank: non-finite difference");
    if (x != 0.0) d.push_back(x);
  }

  WilcoxonResult res;
  res.n = d.size();
  if (d.empty()) {
    res.degenerate = true;
    res.p_value = 1.0;
    return res;
  }

  const Ranked r = rank_magnitudes(d);
  for (std::size_t i = 0; i < d.size(); ++i) (d[i] > 0.0 ? res.w_plus : res.w_minus) += r.ranks[i];
  res.statistic = std::min(res.w_plus, res.w_minus);

  const double n = static_cast<double>(d.size());
  if (d.size() <= kWilcoxonExactMaxN) {
    res.exact = true;
    res.p_value = std::min(1.0, 2.0 * exact_lower_tail(r.ranks, res.statistic));
  } else {
    res.exact = false;
    const double mean = n * (n + 1.0) / 4.0;
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - r.tie_term / 48.0;
    if (var <= 0.0) {
      res.p_value = 1.0;
    } else {
      const double z = (res.statistic - mean) / std::sqrt(var);
      res.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
    }
  }
  return res;
}

}  // namespace wristhap::stats
