#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "centra/adapter.hpp"
#include "centra/cli.hpp"
#include "centra/store.hpp"
#include "centra/table.hpp"
#include "test_util.hpp"

using namespace centra;
using testutil::slurp;
using testutil::TempDir;

namespace {

int run(std::vector<std::string> tail) {
  std::vector<std::string> args{"centra"};
  for (auto& a : tail) args.push_back(std::move(a));
  return run_cli(args);
}

// gen + encode with a tiny footprint so CLI tests stay fast
void seed_run_dir(const std::string& dir) {
  REQUIRE(run({"gen", "--run-dir", dir, "--n-tables", "5", "--min-rows", "2", "--max-rows", "3",
               "--min-cols", "2", "--max-cols", "3", "--vocab-size", "50",
               "--queries-per-table", "2", "--seed", "3"}) == 0);
  REQUIRE(run({"encode", "--run-dir", dir, "--formats", "pipe,csv,json,mixed",
               "--bucket-count", "64", "--dimension", "16", "--seed", "3"}) == 0);
}

}  // namespace

TEST_CASE("help exits 0; bad invocations exit 2") {
  CHECK(run({"--help"}) == 0);
  CHECK(run({"gen", "--help"}) == 0);
  CHECK(run({}) == 2);                       // no subcommand
  CHECK(run({"--no-such-flag"}) == 2);
  CHECK(run({"gen", "--bogus"}) == 2);
  CHECK(run({"frobnicate"}) == 2);
}

TEST_CASE("missing inputs surface as data errors (exit 3)") {
  TempDir dir;
  CHECK(run({"encode", "--run-dir", dir.path.string()}) == 3);  // no corpus.txt
  CHECK(run({"eval", "--run-dir", dir.path.string()}) == 3);    // no store
  CHECK(run({"import", "--run-dir", dir.path.string(), "--input", "absent.emb"}) == 3);
}

TEST_CASE("the full pipeline runs end to end in a fresh directory") {
  TempDir dir;
  std::string d = dir.path.string();
  seed_run_dir(d);
  CHECK(std::filesystem::exists(dir / "corpus.txt"));
  CHECK(std::filesystem::exists(dir / "queries.txt"));
  CHECK(std::filesystem::exists(dir.path / "stores" / "base.emb"));

  CHECK(run({"train", "--run-dir", d, "--steps", "10", "--batch-size", "4", "--bottleneck",
             "8", "--log-every", "5", "--ckpt-every", "5", "--lr", "0.005", "--seed",
             "1"}) == 0);
  CHECK(std::filesystem::exists(dir.path / "ckpt" / "adapter.ckpt"));
  CHECK(std::filesystem::exists(dir / "train_log.csv"));

  CHECK(run({"eval", "--run-dir", d, "--formats", "pipe,csv,mixed,centroid_all", "--k",
             "1,3"}) == 0);
  for (const char* f : {"ranks.csv", "recall.csv", "variation.csv", "pairwise_delta.csv",
                        "pairwise_p.csv", "pca.csv"})
    CHECK(std::filesystem::exists(dir.path / "reports" / f));

  CHECK(run({"shift", "--run-dir", d}) == 0);
  CHECK(std::filesystem::exists(dir.path / "reports" / "shift.csv"));

  CHECK(run({"adapt", "--run-dir", d}) == 0);
  CHECK(std::filesystem::exists(dir.path / "stores" / "base-adapted.emb"));
  EmbeddingStore adapted = import_store(dir.path / "stores" / "base-adapted.emb");
  CHECK(adapted.metadata().params.find("adapter=") != std::string::npos);

  CHECK(run({"import", "--run-dir", d, "--input", "stores/base.emb", "--store",
             "reimported"}) == 0);
  EmbeddingStore reimported = import_store(dir.path / "stores" / "reimported.emb");
  CHECK(reimported.size() == import_store(dir.path / "stores" / "base.emb").size());
  // toy embeddings are unit vectors, and the importer records that
  CHECK(reimported.metadata().params.find("normalized=1") != std::string::npos);
}

TEST_CASE("generation and encoding are byte-deterministic across directories") {
  TempDir a, b;
  seed_run_dir(a.path.string());
  seed_run_dir(b.path.string());
  CHECK(slurp(a / "corpus.txt") == slurp(b / "corpus.txt"));
  CHECK(slurp(a / "queries.txt") == slurp(b / "queries.txt"));
  CHECK(slurp(a.path / "stores" / "base.emb") == slurp(b.path / "stores" / "base.emb"));

  TempDir c;
  REQUIRE(run({"gen", "--run-dir", c.path.string(), "--n-tables", "5", "--min-rows", "2",
               "--max-rows", "3", "--min-cols", "2", "--max-cols", "3", "--vocab-size", "50",
               "--queries-per-table", "2", "--seed", "4"}) == 0);
  CHECK(slurp(a / "corpus.txt") != slurp(c / "corpus.txt"));
}

TEST_CASE("an identity checkpoint leaves every rank unchanged") {
  TempDir dir;
  std::string d = dir.path.string();
  seed_run_dir(d);
  REQUIRE(run({"eval", "--run-dir", d, "--formats", "pipe,csv", "--report-dir",
               "reports_base"}) == 0);

  AdapterConfig cfg;
  cfg.dimension = 16;
  cfg.bottleneck = 4;
  save_checkpoint(init_adapter(cfg), 0.01, 0.0, nullptr, dir / "ident.ckpt");

  REQUIRE(run({"eval", "--run-dir", d, "--formats", "pipe,csv", "--checkpoint", "ident.ckpt",
               "--baseline", "reports_base/ranks.csv", "--report-dir", "reports_adapted"}) ==
          0);
  CHECK(slurp(dir.path / "reports_adapted" / "ranks.csv") ==
        slurp(dir.path / "reports_base" / "ranks.csv"));

  std::ifstream lr(dir.path / "reports_adapted" / "logrank.csv");
  std::string header;
  std::getline(lr, header);
  CHECK(header == "format,mean_delta");
  size_t rows = 0;
  for (std::string line; std::getline(lr, line);) {
    if (line.empty()) continue;
    ++rows;
    CHECK(line.substr(line.find(',') + 1) == "0");
  }
  CHECK(rows == 2);
}

TEST_CASE("config files fill in flags; explicit flags win") {
  TempDir dir;
  std::string d = dir.path.string();
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "# generation defaults\n";
    cfg << "n-tables = 4\n";
    cfg << "vocab-size = 50\n";
    cfg << "seed = 9\n";
  }

  REQUIRE(run({"gen", "--run-dir", d, "--config", "run.cfg"}) == 0);
  CHECK(load_corpus(dir / "corpus.txt").size() == 4);
  CHECK(load_corpus(dir / "corpus.txt").name() == "synthetic-9");

  REQUIRE(run({"gen", "--run-dir", d, "--config", "run.cfg", "--n-tables", "2"}) == 0);
  CHECK(load_corpus(dir / "corpus.txt").size() == 2);
  CHECK(load_corpus(dir / "corpus.txt").name() == "synthetic-9");

  {
    std::ofstream cfg(dir / "bad_key.cfg");
    cfg << "no-such-option = 1\n";
  }
  CHECK(run({"gen", "--run-dir", d, "--config", "bad_key.cfg"}) == 2);

  {
    std::ofstream cfg(dir / "bad_value.cfg");
    cfg << "n-tables = banana\n";
  }
  CHECK(run({"gen", "--run-dir", d, "--config", "bad_value.cfg"}) == 2);

  {
    std::ofstream cfg(dir / "dup.cfg");
    cfg << "n-tables = 1\nn-tables = 2\n";
  }
  CHECK(run({"gen", "--run-dir", d, "--config", "dup.cfg"}) == 2);

  CHECK(run({"gen", "--run-dir", d, "--config", "absent.cfg"}) == 2);
}

TEST_CASE("invalid parameter combinations exit with config errors") {
  TempDir dir;
  std::string d = dir.path.string();
  // min > max is a range error at generation time
  CHECK(run({"gen", "--run-dir", d, "--n-tables", "2", "--min-rows", "5", "--max-rows",
             "3"}) == 2);
  seed_run_dir(d);
  CHECK(run({"train", "--run-dir", d, "--steps", "0"}) == 2);
  CHECK(run({"train", "--run-dir", d, "--dropout", "1.5"}) == 2);
  CHECK(run({"eval", "--run-dir", d, "--k", "0"}) == 2);
  // unknown names pass through to the ranking stage, which finds no documents
  CHECK(run({"eval", "--run-dir", d, "--formats", "no_such_format"}) == 3);
  CHECK(run({"encode", "--run-dir", d, "--formats", "no_such_format"}) == 2);
  CHECK(run({"shift", "--run-dir", d, "--reference", "pipe"}) == 2);
}
