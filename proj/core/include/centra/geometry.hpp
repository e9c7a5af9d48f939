#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "centra/store.hpp"

namespace centra {

// Arithmetic mean of the views; deliberately NOT re-normalized (the mean is
// the exact minimizer of the summed squared Euclidean distance).
Eigen::VectorXd centroid(const std::vector<Eigen::VectorXd>& views);

// Per-table centroids for each variant (centroid_popular/_data/_structural/
// _schema/_all) over whichever member formats are present in the store. A
// variant is absent for a table when none of its member formats are; "mixed"
// never contributes.
struct CentroidSet {
  // variant -> table -> centroid
  std::map<std::string, std::map<std::string, Eigen::VectorXd>> centroids;
  // variant -> table -> member formats averaged (sorted)
  std::map<std::string, std::map<std::string, std::vector<std::string>>> members;

  const Eigen::VectorXd* find(const std::string& variant, const std::string& table) const;
};

CentroidSet build_centroid_set(const EmbeddingStore& store);

// J(u) = sum_s ||u - z_s||^2 evaluated at the centroid and at each candidate.
struct OptimalityReport {
  double j_centroid = 0.0;
  std::vector<double> j_candidates;
  bool centroid_is_best = false;  // j_centroid <= every candidate's J
};

OptimalityReport verify_centroid_optimality(const std::vector<Eigen::VectorXd>& views,
                                            const std::vector<Eigen::VectorXd>& candidates);

// Builds z_s = mu + delta_s and returns ||centroid(z) - mu||; equals
// ||mean(delta)|| exactly, and 0 when the deltas sum to zero.
double semantic_recovery_check(const Eigen::VectorXd& mu,
                               const std::vector<Eigen::VectorXd>& deltas);

// Raw inner products <q, z_s> per view, their variance (population, /n),
// <q, centroid>, and the linearity check <q, centroid> == mean of scores.
struct ScoreVarianceReport {
  std::vector<double> view_scores;
  double variance = 0.0;
  double centroid_score = 0.0;
  double mean_score = 0.0;
  bool linear_ok = false;  // |centroid_score - mean_score| <= 1e-10
};

ScoreVarianceReport score_variance_report(const Eigen::VectorXd& q,
                                          const std::vector<Eigen::VectorXd>& views);

// Format-shift decomposition against a reference centroid variant:
//   delta_s(T)   = z_s(T) - c(T)
//   mu_delta(s)  = mean over tables of delta_s(T)
//   eps_s(T)     = delta_s(T) - mu_delta(s)
//   eps_bar(s)   = mean over tables of ||eps_s(T)||
//   ratio(s)     = ||mu_delta(s)|| / eps_bar(s)
// ratio_infinite flags eps_bar == 0 with ||mu_delta|| > 0; both zero gives
// ratio 0. Centroid pseudo-formats are not decomposed.
struct FormatShift {
  Eigen::VectorXd mean_shift;                          // mu_delta(s)
  double mu_norm = 0.0;
  double eps_bar = 0.0;
  double ratio = 0.0;
  bool ratio_infinite = false;
  std::map<std::string, Eigen::VectorXd> residuals;    // table -> eps_s(T)
};

struct ShiftDecomposition {
  std::string reference;
  std::map<std::string, FormatShift> by_format;
};

// Throws MissingCentroid when a table with format s lacks the reference
// centroid, EmptyViewSet when the store has no decomposable entries.
ShiftDecomposition shift_decompose(const EmbeddingStore& store,
                                   const std::string& reference = "centroid_all");

// CSV with columns format,mu_norm,eps_bar,ratio (ratio "inf" when flagged).
void write_shift_csv(const ShiftDecomposition& d, const std::filesystem::path& path);

}  // namespace centra
