#pragma once

#include <cstddef>
#include <vector>

namespace centra {

// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
// are discarded; |differences| are ranked with average ranks for ties;
// W = min(W+, W-). With n_eff <= 12 the p-value is exact (tie-aware
// enumeration of all 2^n sign assignments); above that a normal
// approximation with tie-corrected variance and continuity correction is
// used. n_eff == 0 yields p = 1.
struct WilcoxonResult {
  double p = 1.0;
  double w = 0.0;        // min(W+, W-)
  size_t n_eff = 0;      // pairs surviving zero-discard
  bool exact = true;
};

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y);

// Benjamini-Hochberg step-up adjustment: sorted ascending, q_(i) =
// p_(i) * m / i, running minimum from the largest index, clipped at 1,
// restored to input order. Throws OutOfRangeP for values outside [0, 1].
std::vector<double> bh_fdr_adjust(const std::vector<double>& p_values);

}  // namespace centra
