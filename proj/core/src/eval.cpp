#include "centra/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "centra/error.hpp"
#include "centra/geometry.hpp"
#include "centra/prng.hpp"
#include "centra/serialize.hpp"
#include "centra/stats.hpp"

namespace centra {

RankedList rank_documents(const Eigen::VectorXd& query,
                          const std::vector<std::pair<std::string, const Eigen::VectorXd*>>& docs) {
  if (docs.empty()) raise(ErrorCode::EmptyResults, "no documents to rank");
  double qn = query.norm();
  if (qn == 0.0) raise(ErrorCode::ZeroVector, "query vector has zero norm");
  if (!query.allFinite()) raise(ErrorCode::NonFiniteInput, "query vector is not finite");

  std::vector<double> scores(docs.size());
  for (size_t i = 0; i < docs.size(); ++i) {
    const Eigen::VectorXd& d = *docs[i].second;
    if (d.size() != query.size())
      raise(ErrorCode::DimensionMismatch,
            fmt::format("document '{}' has dimension {}, query has {}", docs[i].first, d.size(),
                        query.size()));
    double dn = d.norm();
    if (dn == 0.0)
      raise(ErrorCode::ZeroVector, fmt::format("document '{}' has zero norm", docs[i].first));
    scores[i] = query.dot(d) / (qn * dn);
    if (!std::isfinite(scores[i]))
      raise(ErrorCode::NonFiniteValue, fmt::format("non-finite score for '{}'", docs[i].first));
  }

  std::vector<size_t> order(docs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return docs[a].first < docs[b].first;
  });

  RankedList out;
  out.ids.reserve(docs.size());
  out.scores.reserve(docs.size());
  for (size_t i : order) {
    out.ids.push_back(docs[i].first);
    out.scores.push_back(scores[i]);
  }
  return out;
}

double recall_at_k(const std::vector<size_t>& gold_ranks, size_t k) {
  if (k == 0) raise(ErrorCode::BadRange, "recall cutoff k must be >= 1");
  if (gold_ranks.empty()) raise(ErrorCode::EmptyResults, "no ranks to aggregate");
  size_t hits = 0;
  for (size_t r : gold_ranks) hits += (r <= k) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(gold_ranks.size());
}

double log_rank_delta(size_t base_rank, size_t adapted_rank) {
  if (base_rank == 0 || adapted_rank == 0) raise(ErrorCode::BadRange, "ranks are 1-based");
  return std::log1p(static_cast<double>(base_rank)) -
         std::log1p(static_cast<double>(adapted_rank));
}

VariationStats variation_stats(const std::vector<double>& values) {
  if (values.size() < 2)
    raise(ErrorCode::TooFewFormats, "variation needs at least two values");
  VariationStats s;
  double mean = 0.0;
  s.min = values[0];
  s.max = values[0];
  for (double v : values) {
    if (!std::isfinite(v)) raise(ErrorCode::NonFiniteInput, "non-finite value in variation input");
    mean += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size()));
  s.range = s.max - s.min;
  return s;
}

double mean_score_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    raise(ErrorCode::LengthMismatch,
          fmt::format("score lists have sizes {} and {}", a.size(), b.size()));
  if (a.empty()) raise(ErrorCode::EmptyResults, "no scores to compare");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] - b[i];
  return acc / static_cast<double>(a.size());
}

namespace {

// Formats ordered by ascending mean gold rank (ties by name); every format
// must carry the same query ids.
std::vector<std::string> order_by_mean_rank(const RankTable& ranks) {
  std::vector<std::pair<double, std::string>> keyed;
  const std::map<std::string, double>* first = nullptr;
  for (const auto& [format, per_query] : ranks) {
    if (first == nullptr) {
      first = &per_query;
    } else if (per_query.size() != first->size() ||
               !std::equal(per_query.begin(), per_query.end(), first->begin(),
                           [](const auto& a, const auto& b) { return a.first == b.first; })) {
      raise(ErrorCode::UnmatchedQueries,
            fmt::format("format '{}' covers a different query set", format));
    }
    double mean = 0.0;
    for (const auto& [qid, r] : per_query) mean += r;
    if (!per_query.empty()) mean /= static_cast<double>(per_query.size());
    keyed.emplace_back(mean, format);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> out;
  out.reserve(keyed.size());
  for (auto& [mean, format] : keyed) out.push_back(std::move(format));
  return out;
}

}  // namespace

PairwiseDelta pairwise_rank_diff_matrix(const RankTable& ranks) {
  if (ranks.size() < 2)
    raise(ErrorCode::TooFewFormats, "pairwise matrix needs at least two formats");
  PairwiseDelta out;
  out.formats = order_by_mean_rank(ranks);
  Eigen::Index m = static_cast<Eigen::Index>(out.formats.size());
  out.delta = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& ri = ranks.at(out.formats[static_cast<size_t>(i)]);
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const auto& rj = ranks.at(out.formats[static_cast<size_t>(j)]);
      double acc = 0.0;
      size_t n = 0;
      auto itj = rj.begin();
      for (auto iti = ri.begin(); iti != ri.end(); ++iti, ++itj) {
        acc += iti->second - itj->second;
        ++n;
      }
      if (n == 0) raise(ErrorCode::EmptyResults, "no matched queries for pairwise matrix");
      double mean = acc / static_cast<double>(n);
      out.delta(i, j) = mean;
      out.delta(j, i) = -mean;
    }
  }
  return out;
}

SignificanceMatrix significance_matrix(const RankTable& ranks) {
  if (ranks.size() < 2)
    raise(ErrorCode::TooFewFormats, "significance matrix needs at least two formats");
  SignificanceMatrix out;
  out.formats = order_by_mean_rank(ranks);
  Eigen::Index m = static_cast<Eigen::Index>(out.formats.size());
  out.p_raw = Eigen::MatrixXd::Ones(m, m);
  out.p_adjusted = Eigen::MatrixXd::Ones(m, m);
  out.n_eff = Eigen::MatrixXi::Zero(m, m);

  std::vector<std::vector<double>> cols(out.formats.size());
  for (size_t f = 0; f < out.formats.size(); ++f) {
    const auto& per_query = ranks.at(out.formats[f]);
    cols[f].reserve(per_query.size());
    for (const auto& [qid, r] : per_query) cols[f].push_back(r);
  }

  std::vector<double> p_flat;  // unordered pairs, row-major upper triangle
  p_flat.reserve(static_cast<size_t>(m) * (static_cast<size_t>(m) - 1) / 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      WilcoxonResult w =
          wilcoxon_signed_rank(cols[static_cast<size_t>(i)], cols[static_cast<size_t>(j)]);
      out.p_raw(i, j) = w.p;
      out.p_raw(j, i) = w.p;
      out.n_eff(i, j) = static_cast<int>(w.n_eff);
      out.n_eff(j, i) = static_cast<int>(w.n_eff);
      p_flat.push_back(w.p);
    }
  }
  std::vector<double> q_flat = bh_fdr_adjust(p_flat);
  size_t idx = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j, ++idx) {
      out.p_adjusted(i, j) = q_flat[idx];
      out.p_adjusted(j, i) = q_flat[idx];
    }
  }
  return out;
}

MetricsReport evaluate_run(const std::vector<Query>& queries,
                           const std::vector<Eigen::VectorXd>& query_vectors,
                           const EmbeddingStore& store, const std::vector<std::string>& formats,
                           const std::vector<size_t>& k_list, const RankTable* baseline) {
  if (queries.size() != query_vectors.size())
    raise(ErrorCode::LengthMismatch,
          fmt::format("{} queries but {} query vectors", queries.size(), query_vectors.size()));
  if (queries.empty()) raise(ErrorCode::EmptyResults, "no queries to evaluate");
  if (formats.empty()) raise(ErrorCode::ConfigError, "no formats requested for evaluation");
  for (size_t k : k_list)
    if (k == 0) raise(ErrorCode::BadRange, "recall cutoff k must be >= 1");

  bool any_centroid = false;
  for (const std::string& f : formats) any_centroid = any_centroid || is_centroid_variant(f);
  CentroidSet cs;
  if (any_centroid) cs = build_centroid_set(store);

  MetricsReport report;
  RankTable rank_table;

  for (const std::string& format : formats) {
    std::vector<std::pair<std::string, const Eigen::VectorXd*>> docs;
    bool centroid = is_centroid_variant(format);
    if (centroid) {
      auto it = cs.centroids.find(format);
      if (it == cs.centroids.end() || it->second.empty())
        raise(ErrorCode::MissingCentroid,
              fmt::format("no tables have a '{}' centroid in this store", format));
      docs.reserve(it->second.size());
      for (const auto& [table, vec] : it->second) docs.emplace_back(table, &vec);
    } else {
      auto entries = store.format_entries(format);
      if (entries.empty())
        raise(ErrorCode::EmptyResults,
              fmt::format("format '{}' has no documents in the store", format));
      docs = std::move(entries);
    }

    std::set<std::string> doc_ids;
    for (const auto& [id, vec] : docs) doc_ids.insert(id);

    std::vector<size_t> gold_ranks;
    gold_ranks.reserve(queries.size());
    for (size_t qi = 0; qi < queries.size(); ++qi) {
      const Query& q = queries[qi];
      if (doc_ids.count(q.gold_table_id) == 0) {
        if (centroid) continue;  // the gold table simply lacks this variant
        raise(ErrorCode::UnmatchedQueries,
              fmt::format("query '{}' gold table '{}' missing from format '{}'", q.id,
                          q.gold_table_id, format));
      }
      RankedList ranked = rank_documents(query_vectors[qi], docs);
      RankResult rr;
      rr.query_id = q.id;
      rr.format = format;
      for (size_t pos = 0; pos < ranked.ids.size(); ++pos) {
        if (ranked.ids[pos] == q.gold_table_id) {
          rr.gold_rank = pos + 1;
          rr.gold_score = ranked.scores[pos];
          break;
        }
      }
      rr.top_ids.assign(ranked.ids.begin(),
                        ranked.ids.begin() + std::min<size_t>(5, ranked.ids.size()));
      gold_ranks.push_back(rr.gold_rank);
      rank_table[format][q.id] = static_cast<double>(rr.gold_rank);
      report.ranks.push_back(std::move(rr));
    }
    if (gold_ranks.empty())
      raise(ErrorCode::EmptyResults,
            fmt::format("no query matched any document of format '{}'", format));

    for (size_t k : k_list) report.recall[format][k] = recall_at_k(gold_ranks, k);
    double mean_rank = 0.0;
    for (size_t r : gold_ranks) mean_rank += static_cast<double>(r);
    report.mean_rank[format] = mean_rank / static_cast<double>(gold_ranks.size());
  }

  // Aggregates over the renderable formats only (centroid variants and the
  // mixed perturbation are pseudo-formats).
  std::vector<double> recall1;
  for (const std::string& format : formats) {
    if (is_centroid_variant(format) || format == kMixedFormat) continue;
    std::vector<size_t> gr;
    for (const RankResult& rr : report.ranks)
      if (rr.format == format) gr.push_back(rr.gold_rank);
    recall1.push_back(recall_at_k(gr, 1));
  }
  if (!recall1.empty()) {
    double m = std::accumulate(recall1.begin(), recall1.end(), 0.0) /
               static_cast<double>(recall1.size());
    report.mean_recall1_over_formats = m;
  }
  if (recall1.size() >= 2) report.variation = variation_stats(recall1);

  // Pairwise comparisons over the queries every format ranked.
  if (rank_table.size() >= 2) {
    std::set<std::string> shared;
    bool first = true;
    for (const auto& [format, per_query] : rank_table) {
      std::set<std::string> ids;
      for (const auto& [qid, r] : per_query) ids.insert(qid);
      if (first) {
        shared = std::move(ids);
        first = false;
      } else {
        std::set<std::string> inter;
        std::set_intersection(shared.begin(), shared.end(), ids.begin(), ids.end(),
                              std::inserter(inter, inter.begin()));
        shared = std::move(inter);
      }
    }
    if (!shared.empty()) {
      RankTable matched;
      for (const auto& [format, per_query] : rank_table)
        for (const auto& [qid, r] : per_query)
          if (shared.count(qid) != 0) matched[format][qid] = r;
      report.pairwise_delta = pairwise_rank_diff_matrix(matched);
      report.significance = significance_matrix(matched);
    }
  }

  if (baseline != nullptr) {
    for (const auto& [format, per_query] : rank_table) {
      auto bit = baseline->find(format);
      if (bit == baseline->end()) continue;
      double acc = 0.0;
      size_t n = 0;
      for (const auto& [qid, r] : per_query) {
        auto qit = bit->second.find(qid);
        if (qit == bit->second.end()) continue;
        acc += std::log1p(qit->second) - std::log1p(r);
        ++n;
      }
      if (n > 0) report.mean_log_rank_delta[format] = acc / static_cast<double>(n);
    }
    if (report.mean_log_rank_delta.empty())
      raise(ErrorCode::UnmatchedQueries, "baseline shares no (format, query) pairs with this run");
  }

  return report;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::MalformedFile, fmt::format("cannot open '{}'", path.string()));
  return out;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

void write_report_csvs(const MetricsReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  {
    auto out = open_csv(dir / "ranks.csv");
    out << "query_id,format,gold_rank,gold_score\n";
    for (const RankResult& rr : report.ranks)
      out << rr.query_id << ',' << rr.format << ',' << rr.gold_rank << ','
          << num(rr.gold_score) << '\n';
  }
  {
    auto out = open_csv(dir / "recall.csv");
    out << "format,k,recall\n";
    for (const auto& [format, by_k] : report.recall)
      for (const auto& [k, v] : by_k) out << format << ',' << k << ',' << num(v) << '\n';
    if (report.mean_recall1_over_formats)
      out << "mean_over_formats,1," << num(*report.mean_recall1_over_formats) << '\n';
  }
  {
    auto out = open_csv(dir / "variation.csv");
    out << "std,min,max,range\n";
    if (report.variation) {
      const VariationStats& v = *report.variation;
      out << num(v.stddev) << ',' << num(v.min) << ',' << num(v.max) << ',' << num(v.range)
          << '\n';
    }
  }
  if (!report.pairwise_delta.formats.empty()) {
    auto out = open_csv(dir / "pairwise_delta.csv");
    out << "row_format,col_format,value\n";
    const auto& pd = report.pairwise_delta;
    for (size_t i = 0; i < pd.formats.size(); ++i)
      for (size_t j = 0; j < pd.formats.size(); ++j)
        out << pd.formats[i] << ',' << pd.formats[j] << ','
            << num(pd.delta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';
  }
  if (!report.significance.formats.empty()) {
    auto out = open_csv(dir / "pairwise_p.csv");
    out << "row_format,col_format,value\n";
    const auto& sm = report.significance;
    for (size_t i = 0; i < sm.formats.size(); ++i)
      for (size_t j = 0; j < sm.formats.size(); ++j)
        out << sm.formats[i] << ',' << sm.formats[j] << ','
            << num(sm.p_adjusted(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
            << '\n';
  }
  if (!report.mean_log_rank_delta.empty()) {
    auto out = open_csv(dir / "logrank.csv");
    out << "format,mean_delta\n";
    for (const auto& [format, v] : report.mean_log_rank_delta)
      out << format << ',' << num(v) << '\n';
  }
}

RankTable load_ranks_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::MalformedFile, fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != "query_id,format,gold_rank,gold_score")
    raise(ErrorCode::MalformedFile, fmt::format("'{}' is not a ranks.csv file", path.string()));
  RankTable out;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) parts.push_back(field);
    if (parts.size() != 4)
      raise(ErrorCode::MalformedFile,
            fmt::format("'{}' line {}: expected 4 fields, got {}", path.string(), lineno,
                        parts.size()));
    double rank = 0.0;
    try {
      rank = std::stod(parts[2]);
    } catch (const std::exception&) {
      raise(ErrorCode::MalformedFile,
            fmt::format("'{}' line {}: bad rank '{}'", path.string(), lineno, parts[2]));
    }
    auto [it, inserted] = out[parts[1]].emplace(parts[0], rank);
    if (!inserted)
      raise(ErrorCode::MalformedFile,
            fmt::format("'{}' line {}: duplicate entry for query '{}' format '{}'", path.string(),
                        lineno, parts[0], parts[1]));
  }
  return out;
}

Projection2D project_2d(const std::vector<Eigen::VectorXd>& vectors) {
  if (vectors.empty()) raise(ErrorCode::EmptyViewSet, "nothing to project");
  Eigen::Index d = vectors[0].size();
  if (d == 0) raise(ErrorCode::DimensionMismatch, "zero-dimensional vectors");
  Eigen::Index n = static_cast<Eigen::Index>(vectors.size());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (vectors[static_cast<size_t>(i)].size() != d)
      raise(ErrorCode::DimensionMismatch, "projection inputs have mixed dimensions");
    if (!vectors[static_cast<size_t>(i)].allFinite())
      raise(ErrorCode::NonFiniteInput, "non-finite projection input");
    x.row(i) = vectors[static_cast<size_t>(i)].transpose();
  }
  Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::MatrixXd xc = x.rowwise() - mean;
  Eigen::MatrixXd cov = (xc.transpose() * xc) / static_cast<double>(n);

  Projection2D out;
  out.points.assign(static_cast<size_t>(n), {0.0, 0.0});
  if (cov.trace() <= 0.0) {
    out.degenerate = true;
    return out;
  }

  SplitMix64 rng(0);
  Eigen::VectorXd comp[2];
  double lambda[2] = {0.0, 0.0};
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = 2.0 * rng.next_unit() - 1.0;
    double vn = v.norm();
    if (vn == 0.0) {
      v.setZero();
      v(std::min<Eigen::Index>(c, d - 1)) = 1.0;
    } else {
      v /= vn;
    }
    for (int it = 0; it < 200; ++it) {
      Eigen::VectorXd w = cov * v;
      double wn = w.norm();
      if (wn < 1e-300) {
        v.setZero();
        break;
      }
      v = w / wn;
    }
    double lam = (v.norm() == 0.0) ? 0.0 : v.dot(cov * v);
    if (lam < 0.0) lam = 0.0;
    if (v.norm() > 0.0) {
      Eigen::Index imax = 0;
      v.cwiseAbs().maxCoeff(&imax);
      if (v(imax) < 0.0) v = -v;
    }
    comp[c] = v;
    lambda[c] = lam;
    if (c == 0) cov -= lam * v * v.transpose();
  }

  out.var1 = lambda[0];
  out.var2 = lambda[1];
  for (Eigen::Index i = 0; i < n; ++i) {
    out.points[static_cast<size_t>(i)][0] = xc.row(i).dot(comp[0]);
    out.points[static_cast<size_t>(i)][1] = xc.row(i).dot(comp[1]);
  }
  return out;
}

}  // namespace centra
