#include "centra/store.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include "centra/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "store files are little-endian; big-endian hosts are not supported");

namespace centra {

std::string StoreMetadata::line() const {
  return "corpus=" + corpus + ";encoder=" + encoder + ";params=" + params;
}

StoreMetadata StoreMetadata::parse(const std::string& line) {
  auto take = [&](size_t start, std::string_view key, size_t end) -> std::string {
    if (line.compare(start, key.size(), key) != 0)
      raise(ErrorCode::MalformedFile, fmt::format("store metadata missing '{}'", key));
    return line.substr(start + key.size(), end - start - key.size());
  };
  size_t s1 = line.find(';');
  if (s1 == std::string::npos) raise(ErrorCode::MalformedFile, "store metadata missing ';'");
  size_t s2 = line.find(';', s1 + 1);
  if (s2 == std::string::npos) raise(ErrorCode::MalformedFile, "store metadata missing second ';'");
  StoreMetadata meta;
  meta.corpus = take(0, "corpus=", s1);
  meta.encoder = take(s1 + 1, "encoder=", s2);
  meta.params = take(s2 + 1, "params=", line.size());
  return meta;
}

EmbeddingStore::EmbeddingStore(size_t dimension, StoreMetadata meta)
    : dim_(dimension), meta_(std::move(meta)) {
  if (dim_ == 0) raise(ErrorCode::DimensionMismatch, "store dimension must be >= 1");
}

void EmbeddingStore::insert(StoreKey key, Eigen::VectorXd vec) {
  if (sealed_) raise(ErrorCode::StaleCache, "cannot insert into a sealed store");
  if (static_cast<size_t>(vec.size()) != dim_)
    raise(ErrorCode::DimensionMismatch,
          fmt::format("vector for '{}' has dim {}, store has {}", key.str(), vec.size(), dim_));
  if (!vec.allFinite())
    raise(ErrorCode::NonFiniteValue, fmt::format("vector for '{}' has NaN/Inf", key.str()));
  auto [it, inserted] = entries_.emplace(std::move(key), std::move(vec));
  if (!inserted) raise(ErrorCode::DuplicateKey, fmt::format("duplicate key '{}'", it->first.str()));
}

void EmbeddingStore::seal() {
  for (const auto& [key, vec] : entries_)
    if (vec.norm() == 0.0)
      raise(ErrorCode::ZeroVector, fmt::format("zero vector for '{}'", key.str()));
  sealed_ = true;
}

const Eigen::VectorXd& EmbeddingStore::at(const StoreKey& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end())
    raise(ErrorCode::MissingKey, fmt::format("no entry for '{}'", key.str()));
  return it->second;
}

const Eigen::VectorXd* EmbeddingStore::find(const StoreKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> EmbeddingStore::formats() const {
  std::vector<std::string> out;
  for (const auto& [key, _] : entries_)
    if (out.empty() || out.back() != key.format) out.push_back(key.format);
  return out;
}

std::vector<std::string> EmbeddingStore::tables() const {
  std::set<std::string> ids;
  for (const auto& [key, _] : entries_) ids.insert(key.table);
  return {ids.begin(), ids.end()};
}

std::vector<std::pair<std::string, const Eigen::VectorXd*>> EmbeddingStore::format_entries(
    const std::string& format) const {
  std::vector<std::pair<std::string, const Eigen::VectorXd*>> out;
  for (auto it = entries_.lower_bound(StoreKey{format, ""});
       it != entries_.end() && it->first.format == format; ++it)
    out.emplace_back(it->first.table, &it->second);
  return out;
}

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

template <typename T>
void write_raw(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const char* what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) raise(ErrorCode::TruncatedFile, fmt::format("unexpected end of file reading {}", what));
  return value;
}

}  // namespace

void export_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  if (!store.sealed()) raise(ErrorCode::StaleCache, "export requires a sealed store");
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::MalformedFile, "cannot open for writing: " + path.string());

  out.write(kMagic, 4);
  write_raw<uint32_t>(out, static_cast<uint32_t>(store.dimension()));
  write_raw<uint64_t>(out, static_cast<uint64_t>(store.size()));
  std::string meta = store.metadata().line();
  if (meta.size() > 0xFFFF) raise(ErrorCode::MalformedFile, "store metadata exceeds 64 KiB");
  write_raw<uint16_t>(out, static_cast<uint16_t>(meta.size()));
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));

  std::vector<float> buf(store.dimension());
  for (const auto& [key, vec] : store.entries()) {
    std::string k = key.str();
    if (k.size() > 0xFFFF) raise(ErrorCode::MalformedFile, "store key exceeds 64 KiB");
    write_raw<uint16_t>(out, static_cast<uint16_t>(k.size()));
    out.write(k.data(), static_cast<std::streamsize>(k.size()));
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(vec[static_cast<long>(i)]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) raise(ErrorCode::MalformedFile, "write failed: " + path.string());
}

EmbeddingStore import_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::MalformedFile, "cannot open: " + path.string());

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    raise(ErrorCode::BadMagic, "not an EMB1 store file: " + path.string());

  auto dim = read_raw<uint32_t>(in, "dimension");
  if (dim == 0) raise(ErrorCode::DimensionMismatch, "store dimension must be >= 1");
  auto count = read_raw<uint64_t>(in, "entry count");
  auto meta_len = read_raw<uint16_t>(in, "metadata length");
  std::string meta_line(meta_len, '\0');
  in.read(meta_line.data(), meta_len);
  if (!in) raise(ErrorCode::TruncatedFile, "unexpected end of file reading metadata");

  EmbeddingStore store(dim, StoreMetadata::parse(meta_line));
  std::vector<float> buf(dim);
  StoreKey prev;
  for (uint64_t rec = 0; rec < count; ++rec) {
    auto key_len = read_raw<uint16_t>(in, "key length");
    std::string key_str(key_len, '\0');
    in.read(key_str.data(), key_len);
    if (!in) raise(ErrorCode::TruncatedFile, "unexpected end of file reading key");
    size_t slash = key_str.find('/');
    if (slash == std::string::npos)
      raise(ErrorCode::MalformedFile, fmt::format("key '{}' has no '/' separator", key_str));
    StoreKey key{key_str.substr(0, slash), key_str.substr(slash + 1)};

    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) raise(ErrorCode::TruncatedFile, fmt::format("record '{}' is truncated", key_str));

    if (rec > 0) {
      if (key == prev) raise(ErrorCode::DuplicateKey, fmt::format("duplicate key '{}'", key_str));
      if (key < prev)
        raise(ErrorCode::MalformedFile,
              fmt::format("records out of order: '{}' after '{}'", key_str, prev.str()));
    }
    prev = key;

    Eigen::VectorXd vec(dim);
    for (uint32_t i = 0; i < dim; ++i) vec[i] = static_cast<double>(buf[i]);
    store.insert(std::move(key), std::move(vec));  // finiteness checked here
  }
  if (in.peek() != std::char_traits<char>::eof())
    raise(ErrorCode::MalformedFile, "trailing bytes after last record");
  store.seal();
  return store;
}

}  // namespace centra
