#include "centra/geometry.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <cmath>

#include "centra/error.hpp"
#include "centra/serialize.hpp"

namespace centra {

Eigen::VectorXd centroid(const std::vector<Eigen::VectorXd>& views) {
  if (views.empty()) raise(ErrorCode::EmptyViewSet, "centroid of zero views");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(views[0].size());
  for (const auto& v : views) {
    if (v.size() != sum.size())
      raise(ErrorCode::DimensionMismatch, "views must share one dimension");
    if (!v.allFinite()) raise(ErrorCode::NonFiniteInput, "view has NaN/Inf");
    sum += v;
  }
  return sum / static_cast<double>(views.size());
}

const Eigen::VectorXd* CentroidSet::find(const std::string& variant,
                                         const std::string& table) const {
  auto vit = centroids.find(variant);
  if (vit == centroids.end()) return nullptr;
  auto tit = vit->second.find(table);
  return tit == vit->second.end() ? nullptr : &tit->second;
}

CentroidSet build_centroid_set(const EmbeddingStore& store) {
  CentroidSet out;
  for (auto variant : centroid_variant_names()) {
    const std::vector<Format>& member_formats = centroid_members(variant);
    auto& by_table = out.centroids[std::string(variant)];
    auto& member_out = out.members[std::string(variant)];
    // Gather per-table member vectors in one pass over the relevant formats.
    std::map<std::string, std::vector<const Eigen::VectorXd*>> gathered;
    std::map<std::string, std::vector<std::string>> names;
    for (Format f : member_formats) {
      std::string fname(format_name(f));
      for (auto& [table, vec] : store.format_entries(fname)) {
        gathered[table].push_back(vec);
        names[table].push_back(fname);
      }
    }
    for (auto& [table, vecs] : gathered) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<long>(store.dimension()));
      for (const auto* v : vecs) sum += *v;
      by_table.emplace(table, sum / static_cast<double>(vecs.size()));
      std::sort(names[table].begin(), names[table].end());
      member_out.emplace(table, std::move(names[table]));
    }
  }
  return out;
}

OptimalityReport verify_centroid_optimality(const std::vector<Eigen::VectorXd>& views,
                                            const std::vector<Eigen::VectorXd>& candidates) {
  Eigen::VectorXd c = centroid(views);
  auto objective = [&](const Eigen::VectorXd& u) {
    double j = 0.0;
    for (const auto& z : views) j += (u - z).squaredNorm();
    return j;
  };
  OptimalityReport report;
  report.j_centroid = objective(c);
  report.j_candidates.reserve(candidates.size());
  report.centroid_is_best = true;
  for (const auto& u : candidates) {
    if (u.size() != c.size())
      raise(ErrorCode::DimensionMismatch, "candidate dimension mismatch");
    double j = objective(u);
    report.j_candidates.push_back(j);
    if (j < report.j_centroid) report.centroid_is_best = false;
  }
  return report;
}

double semantic_recovery_check(const Eigen::VectorXd& mu,
                               const std::vector<Eigen::VectorXd>& deltas) {
  std::vector<Eigen::VectorXd> views;
  views.reserve(deltas.size());
  for (const auto& d : deltas) {
    if (d.size() != mu.size())
      raise(ErrorCode::DimensionMismatch, "delta dimension mismatch");
    views.push_back(mu + d);
  }
  return (centroid(views) - mu).norm();
}

ScoreVarianceReport score_variance_report(const Eigen::VectorXd& q,
                                          const std::vector<Eigen::VectorXd>& views) {
  if (views.empty()) raise(ErrorCode::EmptyViewSet, "no views to score");
  ScoreVarianceReport report;
  report.view_scores.reserve(views.size());
  double sum = 0.0;
  for (const auto& z : views) {
    if (z.size() != q.size()) raise(ErrorCode::DimensionMismatch, "view dimension mismatch");
    double s = q.dot(z);
    report.view_scores.push_back(s);
    sum += s;
  }
  report.mean_score = sum / static_cast<double>(views.size());
  double var = 0.0;
  for (double s : report.view_scores) var += (s - report.mean_score) * (s - report.mean_score);
  report.variance = var / static_cast<double>(views.size());
  report.centroid_score = q.dot(centroid(views));
  report.linear_ok = std::abs(report.centroid_score - report.mean_score) <= 1e-10;
  return report;
}

ShiftDecomposition shift_decompose(const EmbeddingStore& store, const std::string& reference) {
  if (!is_centroid_variant(reference))
    raise(ErrorCode::ConfigError, fmt::format("'{}' is not a centroid variant", reference));
  CentroidSet cs = build_centroid_set(store);

  ShiftDecomposition out;
  out.reference = reference;
  for (const std::string& fname : store.formats()) {
    if (is_centroid_variant(fname)) continue;
    auto entries = store.format_entries(fname);
    if (entries.empty()) continue;

    std::vector<std::pair<std::string, Eigen::VectorXd>> deltas;
    deltas.reserve(entries.size());
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<long>(store.dimension()));
    for (auto& [table, vec] : entries) {
      const Eigen::VectorXd* c = cs.find(reference, table);
      if (!c)
        raise(ErrorCode::MissingCentroid,
              fmt::format("table '{}' has format '{}' but no {} centroid", table, fname, reference));
      deltas.emplace_back(table, *vec - *c);
      mu += deltas.back().second;
    }
    mu /= static_cast<double>(deltas.size());

    FormatShift shift;
    shift.mean_shift = mu;
    shift.mu_norm = mu.norm();
    double eps_sum = 0.0;
    for (auto& [table, delta] : deltas) {
      Eigen::VectorXd eps = delta - mu;
      eps_sum += eps.norm();
      shift.residuals.emplace(table, std::move(eps));
    }
    shift.eps_bar = eps_sum / static_cast<double>(deltas.size());
    if (shift.eps_bar == 0.0) {
      shift.ratio_infinite = shift.mu_norm > 0.0;
      shift.ratio = 0.0;
    } else {
      shift.ratio = shift.mu_norm / shift.eps_bar;
    }
    out.by_format.emplace(fname, std::move(shift));
  }
  if (out.by_format.empty())
    raise(ErrorCode::EmptyViewSet, "store has no decomposable entries");
  return out;
}

void write_shift_csv(const ShiftDecomposition& d, const std::filesystem::path& path) {
  auto out = fmt::output_file(path.string());
  out.print("format,mu_norm,eps_bar,ratio\n");
  for (const auto& [fname, shift] : d.by_format) {
    out.print("{},{:.17g},{:.17g},{}\n", fname, shift.mu_norm, shift.eps_bar,
              shift.ratio_infinite ? "inf" : fmt::format("{:.17g}", shift.ratio));
  }
}

}  // namespace centra
