#pragma once

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "centra/store.hpp"
#include "centra/table.hpp"

namespace centra {

// Brute-force cosine ranking. Documents are sorted by descending cosine
// score; exact ties break by ascending document id.
struct RankedList {
  std::vector<std::string> ids;
  std::vector<double> scores;
};

RankedList rank_documents(const Eigen::VectorXd& query,
                          const std::vector<std::pair<std::string, const Eigen::VectorXd*>>& docs);

// Fraction of gold ranks <= k (ranks are 1-based).
double recall_at_k(const std::vector<size_t>& gold_ranks, size_t k);

// ln(1 + base_rank) - ln(1 + adapted_rank); positive when adaptation helps.
double log_rank_delta(size_t base_rank, size_t adapted_rank);

struct VariationStats {
  double stddev = 0.0;  // population (divide by n)
  double min = 0.0;
  double max = 0.0;
  double range = 0.0;
};

// Requires >= 2 values (TooFewFormats).
VariationStats variation_stats(const std::vector<double>& values);

// Mean elementwise difference a_i - b_i of matched score lists.
double mean_score_diff(const std::vector<double>& a, const std::vector<double>& b);

struct RankResult {
  std::string query_id;
  std::string format;
  size_t gold_rank = 0;
  double gold_score = 0.0;
  std::vector<std::string> top_ids;
};

// format -> query id -> gold rank
using RankTable = std::map<std::string, std::map<std::string, double>>;

// Mean pairwise rank difference Delta[i][j] = mean over matched queries of
// rank_under_format_i - rank_under_format_j (positive: j ranks gold better).
// Formats are ordered by ascending mean rank. All formats must share one
// query set (UnmatchedQueries).
struct PairwiseDelta {
  std::vector<std::string> formats;
  Eigen::MatrixXd delta;
};

PairwiseDelta pairwise_rank_diff_matrix(const RankTable& ranks);

// Two-sided Wilcoxon signed-rank p-values per format pair on the matched
// per-query ranks, Benjamini-Hochberg adjusted across the unordered pairs
// (the matrices are symmetric; the diagonal is fixed at p = 1, n_eff = 0).
struct SignificanceMatrix {
  std::vector<std::string> formats;
  Eigen::MatrixXd p_raw;
  Eigen::MatrixXd p_adjusted;
  Eigen::MatrixXi n_eff;
};

SignificanceMatrix significance_matrix(const RankTable& ranks);

struct MetricsReport {
  std::vector<RankResult> ranks;                       // format-major, query order
  std::map<std::string, std::map<size_t, double>> recall;  // format -> k -> recall@k
  std::map<std::string, double> mean_rank;
  // Recall@1 spread across the renderable formats evaluated (pseudo-formats
  // excluded); absent when fewer than two renderable formats were evaluated.
  std::optional<VariationStats> variation;
  // Mean Recall@1 over the renderable formats — the aggregate a per-format
  // average reading gives, distinct from ranking centroids as documents.
  std::optional<double> mean_recall1_over_formats;
  PairwiseDelta pairwise_delta;
  SignificanceMatrix significance;
  // format -> mean ln(1+r_base) - ln(1+r_this); present when a baseline was
  // supplied.
  std::map<std::string, double> mean_log_rank_delta;
};

// Ranks every query against every requested format's documents. Formats may
// be renderable names, "mixed", or centroid variants (their per-table
// centroid vectors become the documents; queries whose gold table lacks the
// variant are skipped for it). Pairwise matrices are computed over the
// queries ranked by every format. `baseline` supplies gold ranks from a
// previous run, matched by format and query id.
MetricsReport evaluate_run(const std::vector<Query>& queries,
                           const std::vector<Eigen::VectorXd>& query_vectors,
                           const EmbeddingStore& store, const std::vector<std::string>& formats,
                           const std::vector<size_t>& k_list,
                           const RankTable* baseline = nullptr);

// recall.csv, variation.csv, pairwise_delta.csv, pairwise_p.csv, ranks.csv,
// and logrank.csv (with a baseline) under `dir`.
void write_report_csvs(const MetricsReport& report, const std::filesystem::path& dir);

// Reads the gold ranks back out of a ranks.csv written above.
RankTable load_ranks_csv(const std::filesystem::path& path);

// Top-2 PCA by power iteration (200 iterations per component, deflation in
// between, start vectors drawn from SplitMix64(0), covariance = Xc^T Xc / n).
// Components are sign-canonicalized so their largest-magnitude coordinate is
// positive. A spread-free cloud comes back degenerate with zero output.
struct Projection2D {
  std::vector<std::array<double, 2>> points;
  double var1 = 0.0, var2 = 0.0;  // explained variance per component
  bool degenerate = false;
};

Projection2D project_2d(const std::vector<Eigen::VectorXd>& vectors);

}  // namespace centra
