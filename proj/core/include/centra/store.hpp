#pragma once

#include <Eigen/Core>
#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace centra {

// Store entries are keyed "<format-id>/<table-id>" and kept sorted by
// (format, table), which is also the on-disk record order.
struct StoreKey {
  std::string format;
  std::string table;

  auto operator<=>(const StoreKey&) const = default;
  std::string str() const { return format + "/" + table; }
};

struct StoreMetadata {
  std::string corpus;
  std::string encoder;
  std::string params;

  std::string line() const;                    // "corpus=...;encoder=...;params=..."
  static StoreMetadata parse(const std::string& line);
};

// Embeddings are held and manipulated as doubles; the file format persists
// them as little-endian f32, so import(export(s)) preserves each component
// at 32-bit precision.
class EmbeddingStore {
 public:
  EmbeddingStore(size_t dimension, StoreMetadata meta);

  // Rejects duplicate keys, wrong dimension, non-finite values, and inserts
  // after seal().
  void insert(StoreKey key, Eigen::VectorXd vec);

  // Locks the store and rejects zero vectors (ZeroVector). All read paths
  // below require a sealed store.
  void seal();
  bool sealed() const { return sealed_; }

  size_t dimension() const { return dim_; }
  size_t size() const { return entries_.size(); }
  const StoreMetadata& metadata() const { return meta_; }
  void set_metadata(StoreMetadata meta) { meta_ = std::move(meta); }

  bool contains(const StoreKey& key) const { return entries_.contains(key); }
  const Eigen::VectorXd& at(const StoreKey& key) const;  // throws MissingKey
  const Eigen::VectorXd* find(const StoreKey& key) const;

  // Sorted (format, table) iteration.
  const std::map<StoreKey, Eigen::VectorXd>& entries() const { return entries_; }
  // Distinct format ids / table ids, each sorted ascending.
  std::vector<std::string> formats() const;
  std::vector<std::string> tables() const;
  // All (table, vector) pairs of one format, sorted by table id.
  std::vector<std::pair<std::string, const Eigen::VectorXd*>> format_entries(
      const std::string& format) const;

 private:
  size_t dim_;
  StoreMetadata meta_;
  std::map<StoreKey, Eigen::VectorXd> entries_;
  bool sealed_ = false;
};

// Binary store file:
//   "EMB1" | u32 dim | u64 count | u16 metadata-length | metadata bytes |
//   count records of: u16 key-length | key | dim * f32
// All integers and floats little-endian; records sorted by (format, table).
void export_store(const EmbeddingStore& store, const std::filesystem::path& path);

// Validates magic, record order, duplicate keys, finiteness, truncation;
// returns a sealed store. Throws BadMagic, DimensionMismatch, DuplicateKey,
// NonFiniteValue, TruncatedFile, MalformedFile, ZeroVector.
EmbeddingStore import_store(const std::filesystem::path& path);

}  // namespace centra
