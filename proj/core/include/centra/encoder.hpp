#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "centra/store.hpp"
#include "centra/table.hpp"

namespace centra {

struct ToyEncoderConfig {
  size_t bucket_count = 4096;   // B
  size_t dimension = 256;       // d
  uint64_t projection_seed = 0;
  bool lowercase = true;

  void validate() const;  // requires bucket_count >= dimension >= 2
  std::string params_text() const;
};

// Deterministic hashing text encoder. Pipeline:
//   1. tokenize: maximal runs of ASCII [A-Za-z0-9]; each '<', '>' or ','
//      is additionally emitted as its own single-character token (markup
//      carries signal); every other byte only separates.
//   2. optional ASCII lowercasing of tokens.
//   3. each token is FNV-1a-64 hashed into B buckets (hash % B) and counted.
//   4. the count vector is multiplied by a fixed B x d projection whose
//      entries are {-1,+1}/sqrt(d): one SplitMix64(projection_seed) stream,
//      row-major over (bucket, dim), low bit 1 -> +1, 0 -> -1.
//   5. the result is L2-normalized.
// 64-bit float math throughout.
class ToyEncoder {
 public:
  explicit ToyEncoder(ToyEncoderConfig cfg);

  // Throws EmptyText when the text is empty or yields no tokens.
  Eigen::VectorXd encode(std::string_view text) const;
  const ToyEncoderConfig& config() const { return cfg_; }

  static std::vector<std::string> tokenize(std::string_view text, bool lowercase);
  static uint64_t fnv1a64(std::string_view token);

 private:
  ToyEncoderConfig cfg_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> projection_;  // B x d
};

// One-off convenience wrapper around ToyEncoder.
Eigen::VectorXd toy_encode(std::string_view text, const ToyEncoderConfig& cfg);

// Embeds every (format, table) pair. `formats` lists renderable format names
// and/or "mixed"; each table's serialization seed is one draw from a
// SplitMix64(seed) stream consumed in corpus order (all formats of a table
// share its seed). Metadata: corpus=<name>;encoder=toy;params=<cfg + seed>.
// Returns a sealed store.
EmbeddingStore encode_corpus(const Corpus& corpus, const std::vector<std::string>& formats,
                             uint64_t seed, const ToyEncoderConfig& cfg);

}  // namespace centra
