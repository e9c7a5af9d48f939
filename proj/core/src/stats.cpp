#include "centra/stats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "centra/error.hpp"

namespace centra {

namespace {

// Average ranks (1-based) of already-sorted values; equal runs share the
// mean of the ranks they span.
std::vector<double> average_ranks(const std::vector<double>& sorted_abs) {
  const size_t n = sorted_abs.size();
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && sorted_abs[j + 1] == sorted_abs[i]) ++j;
    double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t k = i; k <= j; ++k) ranks[k] = avg;
    i = j + 1;
  }
  return ranks;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    raise(ErrorCode::LengthMismatch,
          fmt::format("paired samples differ in length: {} vs {}", x.size(), y.size()));

  std::vector<double> diffs;
  diffs.reserve(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    if (!std::isfinite(d)) raise(ErrorCode::NonFiniteInput, "non-finite difference");
    if (d != 0.0) diffs.push_back(d);
  }

  WilcoxonResult res;
  res.n_eff = diffs.size();
  if (diffs.empty()) return res;  // p = 1, w = 0

  const size_t n = diffs.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return std::abs(diffs[a]) < std::abs(diffs[b]); });
  std::vector<double> sorted_abs(n);
  for (size_t i = 0; i < n; ++i) sorted_abs[i] = std::abs(diffs[order[i]]);
  std::vector<double> ranks = average_ranks(sorted_abs);

  double w_plus = 0.0, w_minus = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (diffs[order[i]] > 0.0)
      w_plus += ranks[i];
    else
      w_minus += ranks[i];
  }
  res.w = std::min(w_plus, w_minus);

  if (n <= 12) {
    // Exact, tie-aware: enumerate every sign assignment of the ranked
    // magnitudes and count those at least as extreme as the observed W.
    res.exact = true;
    const uint64_t total_masks = 1ULL << n;
    const double total_rank = std::accumulate(ranks.begin(), ranks.end(), 0.0);
    uint64_t hits = 0;
    for (uint64_t mask = 0; mask < total_masks; ++mask) {
      double t_plus = 0.0;
      for (size_t i = 0; i < n; ++i)
        if (mask & (1ULL << i)) t_plus += ranks[i];
      double stat = std::min(t_plus, total_rank - t_plus);
      if (stat <= res.w + 1e-9) ++hits;
    }
    res.p = static_cast<double>(hits) / static_cast<double>(total_masks);
  } else {
    res.exact = false;
    const double nn = static_cast<double>(n);
    double mean = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    // tie correction: subtract sum(t^3 - t)/48 over tie groups
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && sorted_abs[j + 1] == sorted_abs[i]) ++j;
      double t = static_cast<double>(j - i + 1);
      var -= (t * t * t - t) / 48.0;
      i = j + 1;
    }
    double z = (res.w - mean + 0.5) / std::sqrt(var);
    res.p = std::min(1.0, 2.0 * normal_cdf(z));
  }
  return res;
}

std::vector<double> bh_fdr_adjust(const std::vector<double>& p_values) {
  const size_t m = p_values.size();
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0))
      raise(ErrorCode::OutOfRangeP, fmt::format("p-value {} outside [0, 1]", p));
  if (m == 0) return {};

  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return p_values[a] < p_values[b]; });

  std::vector<double> adjusted(m);
  double running = 1.0;
  for (size_t i = m; i-- > 0;) {
    double q = p_values[order[i]] * static_cast<double>(m) / static_cast<double>(i + 1);
    running = std::min(running, std::min(q, 1.0));
    adjusted[order[i]] = running;
  }
  return adjusted;
}

}  // namespace centra
