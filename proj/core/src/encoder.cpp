#include "centra/encoder.hpp"

#include <fmt/format.h>

#include <cmath>
#include <map>
#include <optional>

#include "centra/error.hpp"
#include "centra/prng.hpp"
#include "centra/serialize.hpp"

namespace centra {

void ToyEncoderConfig::validate() const {
  if (dimension < 2)
    raise(ErrorCode::ConfigError, "encoder dimension must be >= 2");
  if (bucket_count < dimension)
    raise(ErrorCode::ConfigError,
          fmt::format("bucket_count {} must be >= dimension {}", bucket_count, dimension));
}

std::string ToyEncoderConfig::params_text() const {
  return fmt::format("B={},d={},proj_seed={},lowercase={}", bucket_count, dimension,
                     projection_seed, lowercase ? 1 : 0);
}

ToyEncoder::ToyEncoder(ToyEncoderConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg_.dimension));
  projection_.resize(static_cast<long>(cfg_.bucket_count), static_cast<long>(cfg_.dimension));
  SplitMix64 rng(cfg_.projection_seed);
  for (long b = 0; b < projection_.rows(); ++b)
    for (long j = 0; j < projection_.cols(); ++j)
      projection_(b, j) = (rng.next_u64() & 1) ? scale : -scale;
}

std::vector<std::string> ToyEncoder::tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> tokens;
  std::string run;
  auto flush = [&] {
    if (!run.empty()) {
      tokens.push_back(run);
      run.clear();
    }
  };
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    bool alnum = (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
    if (alnum) {
      run += lowercase && c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                               : static_cast<char>(c);
    } else {
      flush();
      if (ch == '<' || ch == '>' || ch == ',') tokens.emplace_back(1, ch);
    }
  }
  flush();
  return tokens;
}

uint64_t ToyEncoder::fnv1a64(std::string_view token) {
  uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : token) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

Eigen::VectorXd ToyEncoder::encode(std::string_view text) const {
  if (text.empty()) raise(ErrorCode::EmptyText, "cannot encode empty text");
  auto tokens = tokenize(text, cfg_.lowercase);
  if (tokens.empty()) raise(ErrorCode::EmptyText, "text has no tokens");

  std::map<uint64_t, double> counts;  // sparse bucket counts
  for (const auto& tok : tokens) counts[fnv1a64(tok) % cfg_.bucket_count] += 1.0;

  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<long>(cfg_.dimension));
  for (const auto& [bucket, count] : counts)
    out += count * projection_.row(static_cast<long>(bucket)).transpose();

  double norm = out.norm();
  if (norm == 0.0)
    raise(ErrorCode::ZeroVector, "projection cancelled to the zero vector");
  return out / norm;
}

Eigen::VectorXd toy_encode(std::string_view text, const ToyEncoderConfig& cfg) {
  return ToyEncoder(cfg).encode(text);
}

EmbeddingStore encode_corpus(const Corpus& corpus, const std::vector<std::string>& formats,
                             uint64_t seed, const ToyEncoderConfig& cfg) {
  if (formats.empty()) raise(ErrorCode::TooFewFormats, "need at least one format to encode");
  std::vector<std::optional<Format>> parsed;
  parsed.reserve(formats.size());
  for (const auto& name : formats) {
    if (name == kMixedFormat) {
      parsed.push_back(std::nullopt);
    } else if (auto f = parse_format(name)) {
      parsed.push_back(f);
    } else {
      raise(ErrorCode::NotRenderable, fmt::format("'{}' is not a renderable format", name));
    }
  }

  ToyEncoder encoder(cfg);
  StoreMetadata meta{corpus.name(), "toy", fmt::format("{},seed={}", cfg.params_text(), seed)};
  EmbeddingStore store(cfg.dimension, std::move(meta));

  SplitMix64 rng(seed);
  for (const Table& t : corpus.tables()) {
    uint64_t table_seed = rng.next_u64();
    for (size_t i = 0; i < formats.size(); ++i) {
      SerializedView view = parsed[i] ? serialize(t, *parsed[i], table_seed)
                                      : mixed_serialize(t, table_seed);
      store.insert({formats[i], t.id}, encoder.encode(view.text));
    }
  }
  store.seal();
  return store;
}

}  // namespace centra
