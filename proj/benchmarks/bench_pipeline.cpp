#include <benchmark/benchmark.h>

#include <Eigen/Core>
#include <vector>

#include "centra/adapter.hpp"
#include "centra/encoder.hpp"
#include "centra/eval.hpp"
#include "centra/prng.hpp"
#include "centra/serialize.hpp"
#include "centra/table.hpp"

namespace {

const centra::Corpus& bench_corpus() {
  static centra::Corpus c = centra::gen_synthetic_corpus(32, {4, 8}, {3, 5}, 400, 42);
  return c;
}

Eigen::MatrixXd random_rows(Eigen::Index n, Eigen::Index d, uint64_t seed) {
  centra::SplitMix64 rng(seed);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = 2.0 * rng.next_unit() - 1.0;
    x.row(i).normalize();
  }
  return x;
}

void BM_SerializeAllFormats(benchmark::State& state) {
  const centra::Corpus& corpus = bench_corpus();
  size_t views = 0;
  for (auto _ : state) {
    for (const centra::Table& t : corpus.tables()) {
      auto rendered = centra::serialize_all(t, 7);
      benchmark::DoNotOptimize(rendered);
      views += rendered.size();
    }
  }
  state.SetItemsProcessed(static_cast<int64_t>(views));
}
BENCHMARK(BM_SerializeAllFormats)->Unit(benchmark::kMillisecond);

void BM_ToyEncode(benchmark::State& state) {
  const centra::Corpus& corpus = bench_corpus();
  centra::ToyEncoderConfig cfg;
  std::vector<std::string> texts;
  for (const centra::Table& t : corpus.tables())
    for (const auto& view : centra::serialize_all(t, 7)) texts.push_back(view.text);
  size_t encoded = 0;
  for (auto _ : state) {
    for (const std::string& text : texts) {
      Eigen::VectorXd v = centra::toy_encode(text, cfg);
      benchmark::DoNotOptimize(v);
      ++encoded;
    }
  }
  state.SetItemsProcessed(static_cast<int64_t>(encoded));
}
BENCHMARK(BM_ToyEncode)->Unit(benchmark::kMillisecond);

// One full optimization step (forward, loss, backward, AdamW) at the given
// number of view rows; 8 views per table.
void BM_AdapterStep(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  centra::AdapterConfig cfg;
  cfg.dimension = 256;
  cfg.bottleneck = 512;
  cfg.seed = 3;
  centra::AdapterParams params = centra::init_adapter(cfg);
  centra::OptimizerState opt = centra::init_optimizer(params);

  Eigen::MatrixXd x = random_rows(n, 256, 11);
  std::vector<std::string> table_ids;
  std::vector<uint64_t> dropout_seeds;
  for (Eigen::Index i = 0; i < n; ++i) {
    table_ids.push_back("t" + std::to_string(i / 8));
    dropout_seeds.push_back(static_cast<uint64_t>(i) * 977 + 5);
  }

  for (auto _ : state) {
    centra::BatchCache cache = centra::adapter_forward_batch(params, cfg, x, true, dropout_seeds);
    Eigen::MatrixXd dl_dz;
    centra::LossBreakdown loss = centra::vicreg_loss(cache.z, x, table_ids, cfg, &dl_dz);
    benchmark::DoNotOptimize(loss);
    centra::AdapterGradients grads = centra::adapter_backward(params, cfg, cache, dl_dz);
    centra::adamw_step(params, grads, opt, cfg);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_AdapterStep)->Arg(64)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_RankDocuments(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  Eigen::MatrixXd docs = random_rows(n, 256, 19);
  std::vector<Eigen::VectorXd> vecs(static_cast<size_t>(n));
  std::vector<std::pair<std::string, const Eigen::VectorXd*>> entries;
  for (Eigen::Index i = 0; i < n; ++i) {
    vecs[static_cast<size_t>(i)] = docs.row(i).transpose();
    entries.emplace_back("t" + std::to_string(i), &vecs[static_cast<size_t>(i)]);
  }
  Eigen::VectorXd q = random_rows(1, 256, 23).row(0).transpose();
  for (auto _ : state) {
    centra::RankedList ranked = centra::rank_documents(q, entries);
    benchmark::DoNotOptimize(ranked);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_RankDocuments)->Arg(512)->Arg(4096)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
