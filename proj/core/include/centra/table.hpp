#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace centra {

// A small relational table: a header row plus a rectangular grid of string
// cells. Cells may be empty strings but must not contain tabs or newlines
// (those are the corpus file delimiters).
struct Table {
  std::string id;
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;

  size_t n_rows() const { return rows.size(); }
  size_t n_cols() const { return headers.size(); }
  size_t n_cells() const { return rows.size() * headers.size(); }
};

// Throws RaggedRows / EmptyTable / EmptyId / CellContainsDelimiter.
void validate_table(const Table& t);

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::string name) : name_(std::move(name)) {}

  // Validates the table and rejects duplicate ids (DuplicateKey).
  void add(Table t);

  const std::string& name() const { return name_; }
  const std::vector<Table>& tables() const { return tables_; }
  const Table* find(std::string_view id) const;
  size_t size() const { return tables_.size(); }

 private:
  std::string name_;
  std::vector<Table> tables_;
  std::map<std::string, size_t, std::less<>> index_;
};

struct Query {
  std::string id;
  std::string text;
  std::string gold_table_id;
};

struct CountRange {
  size_t min = 0;
  size_t max = 0;
};

// Deterministic synthetic corpus. One SplitMix64 stream seeded with `seed`
// drives everything, consumed in this exact order per table t = 0..n-1:
//   rows    = rows.min + next_below(rows.max - rows.min + 1)
//   cols    = cols.min + next_below(cols.max - cols.min + 1)
//   headers = draw next_below(vocab_size) until `cols` distinct indices
//             (repeats skipped, a skip still consumes a draw); word "w<idx>"
//   cells   = row-major, each "w<next_below(vocab_size)>"
// Table ids are "t<index>" zero-padded to the width of n_tables - 1.
// Throws BadRange (min > max or zero-sized tables), VocabTooSmall
// (vocab_size < cols.max).
Corpus gen_synthetic_corpus(size_t n_tables, CountRange rows, CountRange cols,
                            size_t vocab_size, uint64_t seed);

// Deterministic lookup-style queries, `per_table` for each table. One
// SplitMix64 stream seeded with `seed`, consumed in corpus order; per query:
//   k         = min(3, n_cells)
//   positions = draw next_below(n_cells) until k distinct row-major cell
//               positions (repeats skipped), kept in draw order
//   header    = headers[next_below(n_cols)]
//   text      = sampled cells + header word, space-joined
// Query ids are "<table_id>_q<j>", j = 0..per_table-1. Every token of a
// query text appears verbatim in its gold table. Throws EmptyCorpus,
// BadRange (per_table == 0).
std::vector<Query> derive_queries(const Corpus& corpus, size_t per_table, uint64_t seed);

// Corpus file: UTF-8 text, "#corpus <name>" first line, then one block per
// table:
//   #table <id>
//   headers<TAB>h1<TAB>h2...
//   row<TAB>v1<TAB>v2...      (one line per row)
//   <blank line>
// Loading validates every table; cells containing tab or newline are
// impossible to express and are rejected on save (CellContainsDelimiter).
void save_corpus(const Corpus& c, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

// Queries file: one query per line, "<id>\t<gold_table_id>\t<text>".
void save_queries(const std::vector<Query>& qs, const std::filesystem::path& path);
std::vector<Query> load_queries(const std::filesystem::path& path);

}  // namespace centra
