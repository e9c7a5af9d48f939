#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <fstream>

#include "centra/geometry.hpp"
#include "centra/prng.hpp"
#include "centra/store.hpp"
#include "test_util.hpp"

using namespace centra;
using testutil::error_code_of;
using testutil::TempDir;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

Eigen::VectorXd random_vec(SplitMix64& rng, Eigen::Index d, double scale = 1.0) {
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = scale * (2.0 * rng.next_unit() - 1.0);
  return v;
}

double sum_sq_dist(const Eigen::VectorXd& u, const std::vector<Eigen::VectorXd>& views) {
  double j = 0.0;
  for (const auto& z : views) j += (u - z).squaredNorm();
  return j;
}

}  // namespace

TEST_CASE("centroid is the mean and is not re-normalized") {
  std::vector<Eigen::VectorXd> views{vec2(1, 0), vec2(0, 1)};
  Eigen::VectorXd c = centroid(views);
  CHECK(c[0] == 0.5);
  CHECK(c[1] == 0.5);
  CHECK(std::abs(c.norm() - 1.0) > 0.2);  // mean of unit vectors is inside the ball
  CHECK(error_code_of([] { centroid({}); }) == ErrorCode::EmptyViewSet);
  CHECK(error_code_of([] {
          std::vector<Eigen::VectorXd> bad{vec2(1, 0), Eigen::VectorXd::Ones(3)};
          centroid(bad);
        }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("hand-checked objective values: J(centroid) beats a worse point") {
  // views (0,0), (2,0), (1,3): J((1,1)) = 1+1 + 1+1 + 0+4 = 8; J((0,0)) = 0+4+10 = 14
  std::vector<Eigen::VectorXd> views{vec2(0, 0), vec2(2, 0), vec2(1, 3)};
  CHECK(sum_sq_dist(vec2(1, 1), views) == 8.0);
  CHECK(sum_sq_dist(vec2(0, 0), views) == 14.0);
  auto rep = verify_centroid_optimality(views, {vec2(1, 1), vec2(0, 0), vec2(1, 3)});
  CHECK(rep.centroid_is_best);
  CHECK(rep.j_candidates.size() == 3);
  CHECK(rep.j_candidates[0] == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(rep.j_candidates[1] == doctest::Approx(14.0).epsilon(1e-12));
  CHECK(rep.j_centroid <= rep.j_candidates[0] + 1e-9);
}

TEST_CASE("the centroid minimizes summed squared distance (random property)") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.next_below(16));
    size_t n = 2 + rng.next_below(10);
    std::vector<Eigen::VectorXd> views;
    for (size_t s = 0; s < n; ++s) views.push_back(random_vec(rng, d));
    std::vector<Eigen::VectorXd> candidates;
    for (int c = 0; c < 20; ++c) candidates.push_back(random_vec(rng, d, 2.0));
    auto rep = verify_centroid_optimality(views, candidates);
    CHECK(rep.centroid_is_best);
    for (double j : rep.j_candidates) CHECK(rep.j_centroid <= j + 1e-9);
  }
}

TEST_CASE("semantic recovery: centroid error equals the mean delta norm") {
  SplitMix64 rng(5);
  Eigen::VectorXd mu = random_vec(rng, 8);
  std::vector<Eigen::VectorXd> deltas;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(8);
  for (int s = 0; s < 6; ++s) {
    deltas.push_back(random_vec(rng, 8, 0.1));
    sum += deltas.back();
  }
  double err = semantic_recovery_check(mu, deltas);
  CHECK(std::abs(err - (sum / 6.0).norm()) < 1e-10);

  // perfectly centered offsets recover mu exactly; dyadic entries and a
  // power-of-two view count keep every intermediate value representable
  Eigen::VectorXd mu_d(4), d1(4), d2(4);
  for (long i = 0; i < 4; ++i) {
    mu_d[i] = static_cast<double>(rng.next_below(2048)) / 1024.0;
    d1[i] = static_cast<double>(rng.next_below(64)) / 1024.0;
    d2[i] = -static_cast<double>(rng.next_below(64)) / 1024.0;
  }
  std::vector<Eigen::VectorXd> centered{d1, -d1, d2, -d2};
  CHECK(semantic_recovery_check(mu_d, centered) == 0.0);
}

TEST_CASE("centroid scoring is the mean of view scores") {
  SplitMix64 rng(17);
  Eigen::VectorXd q = random_vec(rng, 6);
  std::vector<Eigen::VectorXd> views;
  for (int s = 0; s < 7; ++s) views.push_back(random_vec(rng, 6));
  auto rep = score_variance_report(q, views);
  REQUIRE(rep.view_scores.size() == 7);
  CHECK(rep.linear_ok);
  CHECK(std::abs(rep.centroid_score - rep.mean_score) <= 1e-10);
  double mean = 0.0;
  for (double s : rep.view_scores) mean += s;
  mean /= 7.0;
  CHECK(rep.mean_score == doctest::Approx(mean).epsilon(1e-12));
  double var = 0.0;
  for (double s : rep.view_scores) var += (s - mean) * (s - mean);
  var /= 7.0;
  CHECK(rep.variance == doctest::Approx(var).epsilon(1e-12));

  // identical views have zero score variance
  std::vector<Eigen::VectorXd> same(4, views[0]);
  CHECK(score_variance_report(q, same).variance == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("centroid set covers variants with present members only") {
  EmbeddingStore store(2, {"c", "toy", "p"});
  // two tables; only popular members pipe/token and data member csv
  store.insert({"pipe", "t0"}, vec2(1, 0));
  store.insert({"token", "t0"}, vec2(0, 1));
  store.insert({"csv", "t0"}, vec2(1, 1));
  store.insert({"pipe", "t1"}, vec2(2, 0));
  store.insert({"mixed", "t1"}, vec2(5, 5));  // never contributes
  store.seal();

  CentroidSet cs = build_centroid_set(store);
  const Eigen::VectorXd* pop0 = cs.find("centroid_popular", "t0");
  REQUIRE(pop0 != nullptr);
  CHECK((*pop0 - vec2(0.5, 0.5)).norm() == 0.0);
  CHECK(cs.members.at("centroid_popular").at("t0") ==
        std::vector<std::string>{"pipe", "token"});

  const Eigen::VectorXd* all0 = cs.find("centroid_all", "t0");
  REQUIRE(all0 != nullptr);
  CHECK((*all0 - vec2(2.0 / 3, 2.0 / 3)).norm() < 1e-15);

  const Eigen::VectorXd* all1 = cs.find("centroid_all", "t1");
  REQUIRE(all1 != nullptr);
  CHECK((*all1 - vec2(2, 0)).norm() == 0.0);  // mixed excluded

  CHECK(cs.find("centroid_schema", "t0") == nullptr);
  CHECK(cs.find("centroid_data", "t1") == nullptr);
  const Eigen::VectorXd* data0 = cs.find("centroid_data", "t0");
  REQUIRE(data0 != nullptr);
  CHECK((*data0 - vec2(1, 1)).norm() == 0.0);
}

TEST_CASE("shift decomposition: hand-checked two-table example") {
  // deltas for format pipe: (1,0) and (3,0) -> mu=(2,0), residuals (-1,0),(1,0),
  // eps_bar = 1, ratio = 2
  EmbeddingStore store(2, {"c", "toy", "p"});
  Eigen::VectorXd c0 = vec2(0, 1), c1 = vec2(1, 1);
  // centroid_all for each table is the mean over present formats, so use two
  // formats per table constructed to give known centroids and deltas.
  // table t0: pipe = c0 + (1,0), csv = c0 - (1,0)  => centroid_all = c0
  // table t1: pipe = c1 + (3,0), csv = c1 - (3,0)  => centroid_all = c1
  store.insert({"pipe", "t0"}, c0 + vec2(1, 0));
  store.insert({"csv", "t0"}, c0 - vec2(1, 0));
  store.insert({"pipe", "t1"}, c1 + vec2(3, 0));
  store.insert({"csv", "t1"}, c1 - vec2(3, 0));
  store.seal();

  ShiftDecomposition d = shift_decompose(store, "centroid_all");
  CHECK(d.reference == "centroid_all");
  REQUIRE(d.by_format.count("pipe") == 1);
  const FormatShift& fs = d.by_format.at("pipe");
  CHECK((fs.mean_shift - vec2(2, 0)).norm() < 1e-15);
  CHECK(fs.mu_norm == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fs.eps_bar == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fs.ratio == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(!fs.ratio_infinite);
  CHECK((fs.residuals.at("t0") - vec2(-1, 0)).norm() < 1e-15);
  CHECK((fs.residuals.at("t1") - vec2(1, 0)).norm() < 1e-15);

  // csv is the mirror image
  const FormatShift& cs = d.by_format.at("csv");
  CHECK((cs.mean_shift - vec2(-2, 0)).norm() < 1e-15);

  // residuals of each format average to zero by construction
  Eigen::VectorXd rsum = Eigen::VectorXd::Zero(2);
  for (const auto& [t, r] : fs.residuals) rsum += r;
  CHECK(rsum.norm() < 1e-12);
}

TEST_CASE("shift decomposition flags zero-residual formats as infinite ratio") {
  EmbeddingStore store(2, {"c", "toy", "p"});
  // one table, two formats symmetric about the centroid: residual of each
  // format over a single table is exactly zero while the shift is not.
  store.insert({"pipe", "t0"}, vec2(2, 0));
  store.insert({"csv", "t0"}, vec2(0, 2));
  store.seal();
  ShiftDecomposition d = shift_decompose(store);
  const FormatShift& fs = d.by_format.at("pipe");
  CHECK(fs.eps_bar == 0.0);
  CHECK(fs.mu_norm > 0.0);
  CHECK(fs.ratio_infinite);

  // identical vectors everywhere: both zero -> ratio 0, not infinite
  EmbeddingStore same(2, {"c", "toy", "p"});
  same.insert({"pipe", "t0"}, vec2(1, 1));
  same.insert({"csv", "t0"}, vec2(1, 1));
  same.seal();
  const FormatShift& zs = shift_decompose(same).by_format.at("pipe");
  CHECK(zs.mu_norm == 0.0);
  CHECK(zs.eps_bar == 0.0);
  CHECK(zs.ratio == 0.0);
  CHECK(!zs.ratio_infinite);
}

TEST_CASE("shift decomposition error paths and CSV output") {
  EmbeddingStore empty(2, {"c", "toy", "p"});
  empty.seal();
  CHECK(error_code_of([&] { shift_decompose(empty); }) == ErrorCode::EmptyViewSet);

  EmbeddingStore store(2, {"c", "toy", "p"});
  store.insert({"pipe", "t0"}, vec2(1, 0));
  store.insert({"csv", "t1"}, vec2(0, 1));
  store.seal();
  // reference centroid_schema has no members present for either table
  CHECK(error_code_of([&] { shift_decompose(store, "centroid_schema"); }) ==
        ErrorCode::MissingCentroid);
  CHECK(error_code_of([&] { shift_decompose(store, "nope"); }) ==
        ErrorCode::ConfigError);

  TempDir dir;
  EmbeddingStore ok(2, {"c", "toy", "p"});
  ok.insert({"pipe", "t0"}, vec2(2, 0));
  ok.insert({"csv", "t0"}, vec2(0, 2));
  ok.seal();
  auto path = dir / "shift.csv";
  write_shift_csv(shift_decompose(ok), path);
  std::ifstream in(path);
  std::string header, line1;
  std::getline(in, header);
  CHECK(header == "format,mu_norm,eps_bar,ratio");
  std::getline(in, line1);
  CHECK(line1.substr(0, 4) == "csv,");
  CHECK(line1.find("inf") != std::string::npos);
}
