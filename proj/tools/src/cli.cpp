#include "centra/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "centra/adapter.hpp"
#include "centra/encoder.hpp"
#include "centra/error.hpp"
#include "centra/eval.hpp"
#include "centra/geometry.hpp"
#include "centra/serialize.hpp"
#include "centra/stats.hpp"
#include "centra/store.hpp"
#include "centra/table.hpp"

namespace fs = std::filesystem;

namespace centra {
namespace {

struct GlobalOpts {
  std::string run_dir = ".";
  std::string config_path;
  uint64_t seed = 0;
};

// Relative paths resolve against the run directory.
fs::path resolve(const GlobalOpts& g, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : fs::path(g.run_dir) / path;
}

fs::path store_path(const GlobalOpts& g, const std::string& name) {
  return fs::path(g.run_dir) / "stores" / (name + ".emb");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    size_t a = item.find_first_not_of(" \t");
    size_t b = item.find_last_not_of(" \t");
    if (a == std::string::npos)
      raise(ErrorCode::ConfigError, fmt::format("empty entry in list '{}'", text));
    out.push_back(item.substr(a, b - a + 1));
  }
  if (out.empty()) raise(ErrorCode::ConfigError, "empty list");
  return out;
}

// "all" expands to the 17 renderable formats; other entries pass through
// (validity is the consumer's concern: encode rejects non-renderables, eval
// additionally accepts centroid variants).
std::vector<std::string> expand_formats(const std::string& text) {
  std::vector<std::string> out;
  for (const std::string& entry : split_list(text)) {
    if (entry == "all") {
      for (Format f : all_formats()) out.emplace_back(format_name(f));
    } else {
      out.push_back(entry);
    }
  }
  return out;
}

std::vector<size_t> parse_k_list(const std::string& text) {
  std::vector<size_t> out;
  for (const std::string& entry : split_list(text)) {
    size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(entry, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != entry.size() || v == 0)
      raise(ErrorCode::ConfigError, fmt::format("bad recall cutoff '{}'", entry));
    out.push_back(static_cast<size_t>(v));
  }
  return out;
}

// Rebuilds the toy-encoder configuration recorded in a store's metadata so
// queries can be embedded in the same space.
ToyEncoderConfig encoder_from_metadata(const StoreMetadata& meta) {
  if (meta.encoder != "toy")
    raise(ErrorCode::ConfigError,
          fmt::format("store was encoded by '{}', not the toy encoder; queries cannot be "
                      "embedded in its space",
                      meta.encoder));
  std::string head = meta.params.substr(0, meta.params.find(';'));
  ToyEncoderConfig cfg;
  bool got_b = false, got_d = false, got_seed = false, got_lower = false;
  for (const std::string& kv : split_list(head)) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos) continue;
    std::string key = kv.substr(0, eq);
    std::string value = kv.substr(eq + 1);
    try {
      if (key == "B") {
        cfg.bucket_count = std::stoull(value);
        got_b = true;
      } else if (key == "d") {
        cfg.dimension = std::stoull(value);
        got_d = true;
      } else if (key == "proj_seed") {
        cfg.projection_seed = std::stoull(value);
        got_seed = true;
      } else if (key == "lowercase") {
        cfg.lowercase = (value != "0");
        got_lower = true;
      }
    } catch (const std::exception&) {
      raise(ErrorCode::MalformedFile, fmt::format("bad encoder parameter '{}'", kv));
    }
  }
  if (!(got_b && got_d && got_seed && got_lower))
    raise(ErrorCode::ConfigError,
          fmt::format("store params '{}' do not describe a toy encoder", meta.params));
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------- commands

struct GenOpts {
  size_t n_tables = 100;
  size_t min_rows = 3, max_rows = 8;
  size_t min_cols = 2, max_cols = 5;
  size_t vocab_size = 500;
  size_t queries_per_table = 2;
  uint64_t query_seed = 1;
};

void cmd_gen(const GlobalOpts& g, const GenOpts& o) {
  fs::create_directories(g.run_dir);
  Corpus corpus = gen_synthetic_corpus(o.n_tables, {o.min_rows, o.max_rows},
                                       {o.min_cols, o.max_cols}, o.vocab_size, g.seed);
  std::vector<Query> queries;
  if (!corpus.tables().empty() && o.queries_per_table > 0)
    queries = derive_queries(corpus, o.queries_per_table, o.query_seed);
  save_corpus(corpus, fs::path(g.run_dir) / "corpus.txt");
  save_queries(queries, fs::path(g.run_dir) / "queries.txt");
  fmt::print("wrote corpus.txt ({} tables) and queries.txt ({} queries)\n", corpus.size(),
             queries.size());
}

struct EncodeOpts {
  std::string formats = "all";
  std::string store = "base";
  size_t bucket_count = 4096;
  size_t dimension = 256;
  uint64_t projection_seed = 0;
  bool lowercase = true;
};

void cmd_encode(const GlobalOpts& g, const EncodeOpts& o) {
  Corpus corpus = load_corpus(fs::path(g.run_dir) / "corpus.txt");
  ToyEncoderConfig cfg;
  cfg.bucket_count = o.bucket_count;
  cfg.dimension = o.dimension;
  cfg.projection_seed = o.projection_seed;
  cfg.lowercase = o.lowercase;
  EmbeddingStore store = encode_corpus(corpus, expand_formats(o.formats), g.seed, cfg);
  fs::path out = store_path(g, o.store);
  fs::create_directories(out.parent_path());
  export_store(store, out);
  fmt::print("encoded {} vectors (dim {}) into {}\n", store.size(), store.dimension(), out.string());
}

struct TrainOpts {
  std::string store = "base";
  AdapterConfig cfg = [] {
    AdapterConfig c;
    c.dimension = 0;  // take it from the store being trained on
    return c;
  }();
};

void cmd_train(const GlobalOpts& g, TrainOpts o) {
  EmbeddingStore store = import_store(store_path(g, o.store));
  o.cfg.seed = g.seed;
  o.cfg.checkpoint_dir = (fs::path(g.run_dir) / "ckpt").string();
  TrainResult result = train_adapter(store, o.cfg);
  write_train_log_csv(result.log, fs::path(g.run_dir) / "train_log.csv");
  const TrainLogRow& last = result.log.back();
  fmt::print("trained {} steps on {} (final total {:.6g}, mean_cos {:.6g}); wrote "
             "ckpt/adapter.ckpt and train_log.csv\n",
             o.cfg.steps, o.store, last.loss.total, last.loss.mean_cos);
}

struct EvalOpts {
  std::string store = "base";
  std::string queries = "queries.txt";
  std::string checkpoint;  // empty = evaluate the base store
  std::string baseline;    // empty = no log-rank deltas
  std::string formats = "all";
  std::string k = "1,5,10";
  std::string report_dir = "reports";
};

void cmd_eval(const GlobalOpts& g, const EvalOpts& o) {
  EmbeddingStore store = import_store(store_path(g, o.store));
  std::vector<Query> queries = load_queries(resolve(g, o.queries));
  ToyEncoderConfig enc = encoder_from_metadata(store.metadata());

  std::vector<Eigen::VectorXd> qvecs;
  qvecs.reserve(queries.size());
  for (const Query& q : queries) qvecs.push_back(toy_encode(q.text, enc));

  if (!o.checkpoint.empty()) {
    fs::path ckpt = resolve(g, o.checkpoint);
    LoadedCheckpoint lc = load_checkpoint(ckpt, store.dimension());
    store = adapt_store(lc.params, lc.alpha, store, ckpt.filename().string());
  }

  std::optional<RankTable> baseline;
  if (!o.baseline.empty()) baseline = load_ranks_csv(resolve(g, o.baseline));

  std::vector<std::string> formats = expand_formats(o.formats);
  MetricsReport report = evaluate_run(queries, qvecs, store, formats, parse_k_list(o.k),
                                      baseline ? &*baseline : nullptr);
  fs::path report_dir = resolve(g, o.report_dir);
  write_report_csvs(report, report_dir);

  // 2D projection of every evaluated store entry, labeled format/table.
  std::vector<Eigen::VectorXd> points;
  std::vector<std::string> labels;
  std::set<std::string> wanted(formats.begin(), formats.end());
  for (const auto& [key, vec] : store.entries()) {
    if (wanted.count(key.format) == 0) continue;
    points.push_back(vec);
    labels.push_back(key.str());
  }
  if (!points.empty()) {
    Projection2D proj = project_2d(points);
    std::ofstream out(report_dir / "pca.csv", std::ios::binary);
    if (!out) raise(ErrorCode::MalformedFile, "cannot open pca.csv");
    out << "label,x,y\n";
    for (size_t i = 0; i < labels.size(); ++i)
      out << labels[i] << ',' << fmt::format("{:.17g}", proj.points[i][0]) << ','
          << fmt::format("{:.17g}", proj.points[i][1]) << '\n';
    if (proj.degenerate) fmt::print("note: projection degenerate (no spread)\n");
  }

  for (const auto& [format, by_k] : report.recall) {
    std::string cells;
    for (const auto& [k, v] : by_k) cells += fmt::format("  recall@{} {:.4f}", k, v);
    fmt::print("{:<18}{}  mean_rank {:.3f}\n", format, cells, report.mean_rank.at(format));
  }
  if (report.mean_recall1_over_formats)
    fmt::print("mean_over_formats  recall@1 {:.4f}\n", *report.mean_recall1_over_formats);
  if (report.variation)
    fmt::print("recall@1 spread: std {:.4f} min {:.4f} max {:.4f} range {:.4f}\n",
               report.variation->stddev, report.variation->min, report.variation->max,
               report.variation->range);
  fmt::print("wrote reports to {}\n", report_dir.string());
}

struct ShiftOpts {
  std::string store = "base";
  std::string reference = "centroid_all";
  std::string output = "reports/shift.csv";
};

void cmd_shift(const GlobalOpts& g, const ShiftOpts& o) {
  EmbeddingStore store = import_store(store_path(g, o.store));
  ShiftDecomposition d = shift_decompose(store, o.reference);
  fs::path out = resolve(g, o.output);
  fs::create_directories(out.parent_path());
  write_shift_csv(d, out);
  size_t flagged = 0;
  for (const auto& [format, row] : d.by_format) flagged += row.ratio_infinite ? 1 : 0;
  fmt::print("decomposed {} formats against {} ({} ratio-infinite); wrote {}\n",
             d.by_format.size(), o.reference, flagged, out.string());
}

struct ImportOpts {
  std::string input;
  std::string store;  // default: input stem
};

void cmd_import(const GlobalOpts& g, const ImportOpts& o) {
  fs::path in = resolve(g, o.input);
  EmbeddingStore store = import_store(in);

  if (store.metadata().params.find("normalized=") == std::string::npos) {
    bool normalized = true;
    for (const auto& [key, vec] : store.entries())
      normalized = normalized && std::abs(vec.norm() - 1.0) <= 1e-6;
    StoreMetadata meta = store.metadata();
    meta.params += fmt::format(";normalized={}", normalized ? 1 : 0);
    store.set_metadata(std::move(meta));
  }

  std::string name = o.store.empty() ? in.stem().string() : o.store;
  fs::path out = store_path(g, name);
  fs::create_directories(out.parent_path());
  export_store(store, out);
  fmt::print("imported {} vectors (dim {}) into {}\n", store.size(), store.dimension(), out.string());
}

struct AdaptOpts {
  std::string store = "base";
  std::string checkpoint = "ckpt/adapter.ckpt";
  std::string output;  // default "<store>-adapted"
  std::string label;   // default: checkpoint filename
};

void cmd_adapt(const GlobalOpts& g, const AdaptOpts& o) {
  EmbeddingStore store = import_store(store_path(g, o.store));
  fs::path ckpt = resolve(g, o.checkpoint);
  LoadedCheckpoint lc = load_checkpoint(ckpt, store.dimension());
  std::string label = o.label.empty() ? ckpt.filename().string() : o.label;
  EmbeddingStore adapted = adapt_store(lc.params, lc.alpha, store, label);
  std::string name = o.output.empty() ? o.store + "-adapted" : o.output;
  fs::path out = store_path(g, name);
  fs::create_directories(out.parent_path());
  export_store(adapted, out);
  fmt::print("adapted {} vectors with '{}' into {}\n", adapted.size(), label, out.string());
}

// ------------------------------------------------------------- config file

// Line-oriented `key = value`; blank lines and '#' comments are skipped.
std::vector<std::pair<std::string, std::string>> parse_config_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::ConfigError, fmt::format("cannot open config '{}'", path.string()));
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string> seen;
  std::string line;
  size_t lineno = 0;
  auto trim = [](std::string s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      raise(ErrorCode::ConfigError,
            fmt::format("config line {}: expected 'key = value', got '{}'", lineno, t));
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      raise(ErrorCode::ConfigError, fmt::format("config line {}: empty key", lineno));
    if (!seen.insert(key).second)
      raise(ErrorCode::ConfigError, fmt::format("duplicate config key '{}'", key));
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

// Every config key must name an option of the active subcommand (or a global
// one); explicit flags win over config values.
void apply_config(CLI::App& app, CLI::App* sub, const fs::path& path) {
  for (const auto& [key, value] : parse_config_file(path)) {
    CLI::Option* opt = sub != nullptr ? sub->get_option_no_throw("--" + key) : nullptr;
    if (opt == nullptr) opt = app.get_option_no_throw("--" + key);
    if (opt == nullptr) raise(ErrorCode::ConfigError, fmt::format("unknown config key '{}'", key));
    if (opt->count() > 0) continue;  // command line wins
    opt->add_result(value);
    opt->run_callback();
  }
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Data: return 3;
    case ErrorKind::Numeric: return 4;
  }
  return 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  GlobalOpts g;
  GenOpts gen;
  EncodeOpts enc;
  TrainOpts train;
  EvalOpts eval;
  ShiftOpts shift;
  ImportOpts imp;
  AdaptOpts adapt;

  CLI::App app{"serialization-robust table retrieval pipeline"};
  app.set_version_flag("--version", "centra 0.1.0");
  app.require_subcommand(0, 1);
  app.add_option("--run-dir", g.run_dir, "run directory (artifacts live here)")
      ->capture_default_str();
  app.add_option("--config", g.config_path, "key = value config file; flags win");
  app.add_option("--seed", g.seed, "master seed for the invoked command")->capture_default_str();

  CLI::App* c_gen = app.add_subcommand("gen", "generate a synthetic corpus and its queries");
  c_gen->add_option("--n-tables", gen.n_tables, "tables to generate")->capture_default_str();
  c_gen->add_option("--min-rows", gen.min_rows, "minimum rows per table")->capture_default_str();
  c_gen->add_option("--max-rows", gen.max_rows, "maximum rows per table")->capture_default_str();
  c_gen->add_option("--min-cols", gen.min_cols, "minimum columns per table")
      ->capture_default_str();
  c_gen->add_option("--max-cols", gen.max_cols, "maximum columns per table")
      ->capture_default_str();
  c_gen->add_option("--vocab-size", gen.vocab_size, "synthetic vocabulary size")
      ->capture_default_str();
  c_gen->add_option("--queries-per-table", gen.queries_per_table, "queries derived per table")
      ->capture_default_str();
  c_gen->add_option("--query-seed", gen.query_seed, "seed for query derivation")
      ->capture_default_str();

  CLI::App* c_enc = app.add_subcommand("encode", "serialize and embed the corpus into a store");
  c_enc->add_option("--formats", enc.formats,
                    "comma list of formats; 'all' = every renderable format")
      ->capture_default_str();
  c_enc->add_option("--store", enc.store, "store name under stores/")->capture_default_str();
  c_enc->add_option("--bucket-count", enc.bucket_count, "hashing buckets B")
      ->capture_default_str();
  c_enc->add_option("--dimension", enc.dimension, "embedding dimension d")->capture_default_str();
  c_enc->add_option("--projection-seed", enc.projection_seed, "projection matrix seed")
      ->capture_default_str();
  c_enc->add_option("--lowercase", enc.lowercase, "lowercase tokens before hashing")
      ->capture_default_str();

  CLI::App* c_train = app.add_subcommand("train", "train the residual adapter on a store");
  c_train->add_option("--store", train.store, "store name under stores/")->capture_default_str();
  c_train->add_option("--dimension", train.cfg.dimension, "embedding dimension; 0 = from store")
      ->capture_default_str();
  c_train->add_option("--bottleneck", train.cfg.bottleneck, "bottleneck width r")
      ->capture_default_str();
  c_train->add_option("--alpha", train.cfg.alpha, "residual scale")->capture_default_str();
  c_train->add_option("--dropout", train.cfg.dropout, "bottleneck dropout rate")
      ->capture_default_str();
  c_train->add_option("--use-bias", train.cfg.use_bias, "projection biases")
      ->capture_default_str();
  c_train->add_option("--hidden-mult", train.cfg.hidden_mult,
                      "published hidden multiplier (carried, unused)")
      ->capture_default_str();
  c_train->add_option("--gamma-std", train.cfg.gamma_std, "variance hinge threshold")
      ->capture_default_str();
  c_train->add_option("--lambda-inv", train.cfg.lambda_inv, "invariance weight")
      ->capture_default_str();
  c_train->add_option("--lambda-var", train.cfg.lambda_var, "variance weight")
      ->capture_default_str();
  c_train->add_option("--lambda-cov", train.cfg.lambda_cov, "covariance weight")
      ->capture_default_str();
  c_train->add_option("--lambda-id", train.cfg.lambda_id, "identity weight")
      ->capture_default_str();
  c_train->add_option("--lr", train.cfg.lr, "AdamW learning rate")->capture_default_str();
  c_train->add_option("--weight-decay", train.cfg.weight_decay, "decoupled weight decay")
      ->capture_default_str();
  c_train->add_option("--grad-clip-norm", train.cfg.grad_clip_norm,
                      "global-norm gradient clip; 0 disables")
      ->capture_default_str();
  c_train->add_option("--steps", train.cfg.steps, "optimization steps")->capture_default_str();
  c_train->add_option("--batch-size", train.cfg.batch_size, "tables per step")
      ->capture_default_str();
  c_train->add_option("--max-views", train.cfg.max_views, "per-table view cap; 0 = all")
      ->capture_default_str();
  c_train->add_option("--log-every", train.cfg.log_every, "steps between log rows")
      ->capture_default_str();
  c_train->add_option("--ckpt-every", train.cfg.ckpt_every, "steps between checkpoints")
      ->capture_default_str();

  CLI::App* c_eval = app.add_subcommand("eval", "rank queries and write report CSVs");
  c_eval->add_option("--store", eval.store, "store name under stores/")->capture_default_str();
  c_eval->add_option("--queries", eval.queries, "queries file")->capture_default_str();
  c_eval->add_option("--checkpoint", eval.checkpoint,
                     "adapter checkpoint to apply before ranking");
  c_eval->add_option("--baseline", eval.baseline, "ranks.csv of a previous run for deltas");
  c_eval->add_option("--formats", eval.formats,
                     "comma list; renderable names, 'mixed', or centroid variants")
      ->capture_default_str();
  c_eval->add_option("--k", eval.k, "comma list of recall cutoffs")->capture_default_str();
  c_eval->add_option("--report-dir", eval.report_dir, "where to write the CSVs")
      ->capture_default_str();

  CLI::App* c_shift = app.add_subcommand("shift", "decompose per-format shifts against a centroid");
  c_shift->add_option("--store", shift.store, "store name under stores/")->capture_default_str();
  c_shift->add_option("--reference", shift.reference, "reference centroid variant")
      ->capture_default_str();
  c_shift->add_option("--output", shift.output, "output CSV path")->capture_default_str();

  CLI::App* c_imp = app.add_subcommand("import", "validate and ingest an embedding store file");
  c_imp->add_option("--input", imp.input, "store file to ingest")->required();
  c_imp->add_option("--store", imp.store, "store name; default: input file stem");

  CLI::App* c_adapt = app.add_subcommand("adapt", "apply a trained adapter to a store");
  c_adapt->add_option("--store", adapt.store, "store name under stores/")->capture_default_str();
  c_adapt->add_option("--checkpoint", adapt.checkpoint, "adapter checkpoint")
      ->capture_default_str();
  c_adapt->add_option("--output", adapt.output, "output store name; default '<store>-adapted'");
  c_adapt->add_option("--label", adapt.label, "label recorded in store metadata");

  for (CLI::App* sub : {c_gen, c_enc, c_train, c_eval, c_shift, c_imp, c_adapt})
    sub->fallthrough(true);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
    if (!g.config_path.empty()) apply_config(app, sub, resolve(g, g.config_path));
    if (sub == nullptr) {
      std::fputs(app.help().c_str(), stderr);
      return 2;
    }
    if (sub == c_gen) cmd_gen(g, gen);
    else if (sub == c_enc) cmd_encode(g, enc);
    else if (sub == c_train) cmd_train(g, train);
    else if (sub == c_eval) cmd_eval(g, eval);
    else if (sub == c_shift) cmd_shift(g, shift);
    else if (sub == c_imp) cmd_import(g, imp);
    else if (sub == c_adapt) cmd_adapt(g, adapt);
    return 0;
  } catch (const CLI::ParseError& e) {  // config value conversion failures
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code_for(kind_of(e.code()));
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
}

int run_cli(int argc, const char* const* argv) {
  return run_cli(std::vector<std::string>(argv, argv + argc));
}

}  // namespace centra
