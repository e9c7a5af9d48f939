#include "centra/table.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>
#include <sstream>

#include "centra/error.hpp"
#include "centra/prng.hpp"

namespace centra {

namespace {

bool has_delimiter(const std::string& s) {
  return s.find('\t') != std::string::npos || s.find('\n') != std::string::npos ||
         s.find('\r') != std::string::npos;
}

void check_cell(const std::string& s, const std::string& where) {
  if (has_delimiter(s))
    raise(ErrorCode::CellContainsDelimiter, fmt::format("{} contains tab or newline", where));
}

}  // namespace

void validate_table(const Table& t) {
  if (t.id.empty()) raise(ErrorCode::EmptyId, "table id must be non-empty");
  if (t.headers.empty() || t.rows.empty())
    raise(ErrorCode::EmptyTable, fmt::format("table '{}' needs at least one column and one row", t.id));
  for (size_t i = 0; i < t.rows.size(); ++i) {
    if (t.rows[i].size() != t.headers.size())
      raise(ErrorCode::RaggedRows,
            fmt::format("table '{}' row {} has {} cells, expected {}", t.id, i, t.rows[i].size(),
                        t.headers.size()));
  }
}

void Corpus::add(Table t) {
  validate_table(t);
  if (index_.contains(t.id))
    raise(ErrorCode::DuplicateKey, fmt::format("duplicate table id '{}'", t.id));
  index_.emplace(t.id, tables_.size());
  tables_.push_back(std::move(t));
}

const Table* Corpus::find(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &tables_[it->second];
}

Corpus gen_synthetic_corpus(size_t n_tables, CountRange rows, CountRange cols,
                            size_t vocab_size, uint64_t seed) {
  if (rows.min > rows.max || cols.min > cols.max)
    raise(ErrorCode::BadRange, "rows/cols range has min > max");
  if (n_tables > 0 && (rows.min == 0 || cols.min == 0))
    raise(ErrorCode::BadRange, "tables need at least one row and one column");
  if (vocab_size < cols.max)
    raise(ErrorCode::VocabTooSmall,
          fmt::format("vocab_size {} < max column count {}", vocab_size, cols.max));

  size_t width = 1;
  for (size_t v = n_tables > 0 ? n_tables - 1 : 0; v >= 10; v /= 10) ++width;

  Corpus corpus(fmt::format("synthetic-{}", seed));
  SplitMix64 rng(seed);
  for (size_t t = 0; t < n_tables; ++t) {
    Table table;
    table.id = fmt::format("t{:0{}}", t, width);
    size_t n_rows = rows.min + rng.next_below(rows.max - rows.min + 1);
    size_t n_cols = cols.min + rng.next_below(cols.max - cols.min + 1);

    std::set<uint64_t> used;
    while (table.headers.size() < n_cols) {
      uint64_t idx = rng.next_below(vocab_size);
      if (used.insert(idx).second) table.headers.push_back(fmt::format("w{}", idx));
    }
    table.rows.resize(n_rows);
    for (size_t r = 0; r < n_rows; ++r) {
      table.rows[r].reserve(n_cols);
      for (size_t c = 0; c < n_cols; ++c)
        table.rows[r].push_back(fmt::format("w{}", rng.next_below(vocab_size)));
    }
    corpus.add(std::move(table));
  }
  return corpus;
}

std::vector<Query> derive_queries(const Corpus& corpus, size_t per_table, uint64_t seed) {
  if (corpus.size() == 0) raise(ErrorCode::EmptyCorpus, "cannot derive queries from an empty corpus");
  if (per_table == 0) raise(ErrorCode::BadRange, "per_table must be >= 1");

  std::vector<Query> queries;
  queries.reserve(corpus.size() * per_table);
  SplitMix64 rng(seed);
  for (const Table& t : corpus.tables()) {
    size_t total = t.n_cells();
    size_t k = std::min<size_t>(3, total);
    for (size_t j = 0; j < per_table; ++j) {
      std::vector<size_t> picked;
      std::set<size_t> seen;
      while (picked.size() < k) {
        size_t pos = static_cast<size_t>(rng.next_below(total));
        if (seen.insert(pos).second) picked.push_back(pos);
      }
      std::string text;
      for (size_t pos : picked) {
        text += t.rows[pos / t.n_cols()][pos % t.n_cols()];
        text += ' ';
      }
      text += t.headers[rng.next_below(t.n_cols())];
      queries.push_back({fmt::format("{}_q{}", t.id, j), std::move(text), t.id});
    }
  }
  return queries;
}

void save_corpus(const Corpus& c, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "#corpus " << c.name() << "\n";
  for (const Table& t : c.tables()) {
    validate_table(t);
    check_cell(t.id, fmt::format("table id '{}'", t.id));
    out << "#table " << t.id << "\n";
    out << "headers";
    for (const auto& h : t.headers) {
      check_cell(h, fmt::format("header of table '{}'", t.id));
      out << '\t' << h;
    }
    out << "\n";
    for (const auto& row : t.rows) {
      out << "row";
      for (const auto& cell : row) {
        check_cell(cell, fmt::format("cell of table '{}'", t.id));
        out << '\t' << cell;
      }
      out << "\n";
    }
    out << "\n";
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) raise(ErrorCode::MalformedFile, "cannot open for writing: " + path.string());
  f << out.str();
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(ErrorCode::MalformedFile, "cannot open: " + path.string());

  std::string line;
  if (!std::getline(f, line) || !line.starts_with("#corpus "))
    raise(ErrorCode::MalformedFile, "corpus file must start with '#corpus <name>'");
  Corpus corpus(line.substr(8));

  Table current;
  bool in_table = false;
  auto flush = [&] {
    if (in_table) {
      corpus.add(std::move(current));
      current = Table{};
      in_table = false;
    }
  };
  size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) {
      flush();
    } else if (line.starts_with("#table ")) {
      flush();
      current.id = line.substr(7);
      in_table = true;
    } else if (line.starts_with("headers\t")) {
      if (!in_table || !current.headers.empty())
        raise(ErrorCode::MalformedFile, fmt::format("unexpected headers line at {}", line_no));
      auto parts = split_tabs(line);
      current.headers.assign(parts.begin() + 1, parts.end());
    } else if (line.starts_with("row\t") || line == "row") {
      if (!in_table)
        raise(ErrorCode::MalformedFile, fmt::format("row outside a table block at line {}", line_no));
      auto parts = split_tabs(line);
      current.rows.emplace_back(parts.begin() + 1, parts.end());
    } else {
      raise(ErrorCode::MalformedFile, fmt::format("unrecognized line {} in corpus file", line_no));
    }
  }
  flush();
  return corpus;
}

void save_queries(const std::vector<Query>& qs, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) raise(ErrorCode::MalformedFile, "cannot open for writing: " + path.string());
  for (const Query& q : qs) {
    if (has_delimiter(q.id) || has_delimiter(q.gold_table_id) || has_delimiter(q.text))
      raise(ErrorCode::CellContainsDelimiter, fmt::format("query '{}' contains tab or newline", q.id));
    f << q.id << '\t' << q.gold_table_id << '\t' << q.text << '\n';
  }
}

std::vector<Query> load_queries(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(ErrorCode::MalformedFile, "cannot open: " + path.string());
  std::vector<Query> qs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto parts = split_tabs(line);
    if (parts.size() != 3)
      raise(ErrorCode::MalformedFile, fmt::format("query line {} needs 3 tab-separated fields", line_no));
    qs.push_back({parts[0], parts[2], parts[1]});
  }
  return qs;
}

}  // namespace centra
