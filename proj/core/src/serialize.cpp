#include "centra/serialize.hpp"

#include <fmt/format.h>

#include <numeric>
#include <sstream>

#include "centra/error.hpp"
#include "centra/prng.hpp"

namespace centra {

namespace {

// --- escaping helpers -------------------------------------------------

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string markup_escape(const std::string& s) {  // html and xml text nodes
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string latex_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '&' || c == '%' || c == '$' || c == '#' || c == '_' || c == '{' || c == '}')
      out += '\\';
    out += c;
  }
  return out;
}

// Python-repr style single-quoted string (dict, mschema, macschema).
std::string py_str(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\\' || c == '\'') out += '\\';
    out += c;
  }
  out += '\'';
  return out;
}

std::string json_str(const std::string& s) {
  std::string out = "\"";
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20)
          out += fmt::format("\\u{:04x}", c);
        else
          out += static_cast<char>(c);
    }
  }
  out += '"';
  return out;
}

std::string sql_str(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  out += '\'';
  return out;
}

// XML element names: keep [A-Za-z0-9_.-], replace anything else with '_';
// the first character must be a letter or '_'.
std::string xml_tag(const std::string& s) {
  if (s.empty()) return "_";
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '_' || c == '.' || c == '-';
    out += ok ? c : '_';
  }
  char f = out[0];
  if (!((f >= 'a' && f <= 'z') || (f >= 'A' && f <= 'Z') || f == '_')) out[0] = '_';
  return out;
}

template <typename It, typename Fn>
std::string join(It begin, It end, std::string_view sep, Fn&& piece) {
  std::string out;
  for (It it = begin; it != end; ++it) {
    if (it != begin) out += sep;
    out += piece(*it);
  }
  return out;
}

std::string join_plain(const std::vector<std::string>& v, std::string_view sep) {
  return join(v.begin(), v.end(), sep, [](const std::string& s) { return s; });
}

// --- per-format renderers ---------------------------------------------

std::string render_pipe(const Table& t) {
  std::string out = join_plain(t.headers, " | ");
  for (const auto& row : t.rows) out += " | " + join_plain(row, " | ");
  return out;
}

std::string render_space(const std::vector<std::string>& headers,
                         const std::vector<std::vector<std::string>>& rows) {
  std::string out = join_plain(headers, " ");
  for (const auto& row : rows) out += " " + join_plain(row, " ");
  return out;
}

std::string render_token(const Table& t) {
  std::string out;
  for (size_t j = 0; j < t.headers.size(); ++j) {
    if (j) out += ' ';
    out += fmt::format("<Header, 0, {}> {}", j, t.headers[j]);
  }
  for (size_t i = 0; i < t.rows.size(); ++i)
    for (size_t j = 0; j < t.rows[i].size(); ++j)
      out += fmt::format(" <CellValue, {}, {}> {}", i + 1, j, t.rows[i][j]);
  return out;
}

std::string render_csv(const Table& t) {
  std::string out;
  for (const auto& h : t.headers) out += "," + csv_field(h);
  for (size_t i = 0; i < t.rows.size(); ++i) {
    out += fmt::format("\n{}", i);
    for (const auto& cell : t.rows[i]) out += "," + csv_field(cell);
  }
  return out;
}

std::string render_tsv(const Table& t) {
  std::string out = join_plain(t.headers, "\t");
  for (const auto& row : t.rows) out += "\n" + join_plain(row, "\t");
  return out;
}

std::string render_html(const Table& t) {
  std::string out = "<table>\n<tr>";
  for (const auto& h : t.headers) out += "<th>" + markup_escape(h) + "</th>";
  out += "</tr>";
  for (const auto& row : t.rows) {
    out += "\n<tr>";
    for (const auto& cell : row) out += "<td>" + markup_escape(cell) + "</td>";
    out += "</tr>";
  }
  out += "\n</table>";
  return out;
}

std::string render_markdown(const Table& t) {
  std::string out = "|";
  for (const auto& h : t.headers) out += " " + h + " |";
  out += "\n|";
  for (size_t j = 0; j < t.headers.size(); ++j) out += "---|";
  for (const auto& row : t.rows) {
    out += "\n|";
    for (const auto& cell : row) out += " " + cell + " |";
  }
  return out;
}

std::string render_latex(const Table& t) {
  std::string out = "\\begin{tabular}{" + std::string(t.headers.size(), 'l') + "}\n";
  out += join(t.headers.begin(), t.headers.end(), " & ", latex_escape) + " \\\\\n";
  for (const auto& row : t.rows)
    out += join(row.begin(), row.end(), " & ", latex_escape) + " \\\\\n";
  out += "\\end{tabular}";
  return out;
}

std::string render_dict(const Table& t) {
  std::string out = "{";
  for (size_t j = 0; j < t.headers.size(); ++j) {
    if (j) out += ", ";
    out += py_str(t.headers[j]) + ": {";
    for (size_t i = 0; i < t.rows.size(); ++i) {
      if (i) out += ", ";
      out += fmt::format("{}: {}", i, py_str(t.rows[i][j]));
    }
    out += "}";
  }
  out += "}";
  return out;
}

std::string render_json(const Table& t) {
  std::string out = "{";
  for (size_t j = 0; j < t.headers.size(); ++j) {
    if (j) out += ", ";
    out += json_str(t.headers[j]) + ": {";
    for (size_t i = 0; i < t.rows.size(); ++i) {
      if (i) out += ", ";
      out += json_str(std::to_string(i)) + ": " + json_str(t.rows[i][j]);
    }
    out += "}";
  }
  out += "}";
  return out;
}

std::string render_xml(const Table& t) {
  std::string out = "<data>";
  for (const auto& row : t.rows) {
    out += "\n<row>";
    for (size_t j = 0; j < row.size(); ++j)
      out += fmt::format("\n<{0}>{1}</{0}>", xml_tag(t.headers[j]), markup_escape(row[j]));
    out += "\n</row>";
  }
  out += "\n</data>";
  return out;
}

// Transposed grid with the positional index row: new headers are the row
// indices 0..n_rows-1, and each original column becomes "header cell0
// cell1 ...". Space-linearized.
std::string render_transpose(const Table& t) {
  std::string out;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(i);
  }
  for (size_t j = 0; j < t.headers.size(); ++j) {
    out += ' ' + t.headers[j];
    for (size_t i = 0; i < t.rows.size(); ++i) out += ' ' + t.rows[i][j];
  }
  return out;
}

std::string render_shuffled_rows(const Table& t, uint64_t seed) {
  std::vector<size_t> perm(t.rows.size());
  std::iota(perm.begin(), perm.end(), 0);
  SplitMix64(seed).shuffle(perm);
  std::vector<std::vector<std::string>> rows;
  rows.reserve(perm.size());
  for (size_t i : perm) rows.push_back(t.rows[i]);
  return render_space(t.headers, rows);
}

std::string render_shuffled_cols(const Table& t, uint64_t seed) {
  std::vector<size_t> perm(t.headers.size());
  std::iota(perm.begin(), perm.end(), 0);
  SplitMix64(seed).shuffle(perm);
  std::vector<std::string> headers;
  headers.reserve(perm.size());
  for (size_t j : perm) headers.push_back(t.headers[j]);
  std::vector<std::vector<std::string>> rows(t.rows.size());
  for (size_t i = 0; i < t.rows.size(); ++i) {
    rows[i].reserve(perm.size());
    for (size_t j : perm) rows[i].push_back(t.rows[i][j]);
  }
  return render_space(headers, rows);
}

std::string render_mschema(const Table& t) {
  std::string out = "{'schema': {";
  out += join(t.headers.begin(), t.headers.end(), ", ",
              [](const std::string& h) { return h + ": TEXT"; });
  out += "}, 'data': [";
  for (size_t i = 0; i < t.rows.size(); ++i) {
    if (i) out += ", ";
    out += "{";
    for (size_t j = 0; j < t.headers.size(); ++j) {
      if (j) out += ", ";
      out += py_str(t.headers[j]) + ": " + py_str(t.rows[i][j]);
    }
    out += "}";
  }
  out += "]}";
  return out;
}

std::string render_macschema(const Table& t) {
  std::string out = "{'fields': [{'name': 'index', 'type': 'integer'}";
  for (const auto& h : t.headers)
    out += ", {'name': " + py_str(h) + ", 'type': 'string'}";
  out += "], 'primaryKey': ['index'], 'data': [";
  for (size_t i = 0; i < t.rows.size(); ++i) {
    if (i) out += ", ";
    out += fmt::format("{{'index': {}", i);
    for (size_t j = 0; j < t.headers.size(); ++j)
      out += ", " + py_str(t.headers[j]) + ": " + py_str(t.rows[i][j]);
    out += "}";
  }
  out += "]}";
  return out;
}

std::string render_ddl(const Table& t) {
  std::string out = "CREATE TABLE Table (";
  out += join(t.headers.begin(), t.headers.end(), ", ",
              [](const std::string& h) { return h + " TEXT"; });
  out += ");";
  for (const auto& row : t.rows) {
    out += " INSERT INTO Table VALUES (";
    out += join(row.begin(), row.end(), ",", sql_str);
    out += ");";
  }
  return out;
}

constexpr std::array<Format, kFormatCount> kAllFormats = {
    Format::Pipe,     Format::Token,        Format::Space,       Format::Csv,
    Format::Tsv,      Format::Html,         Format::Markdown,    Format::Latex,
    Format::Dict,     Format::Json,         Format::Xml,         Format::ShuffledRows,
    Format::ShuffledCols, Format::Transpose, Format::MSchema,    Format::MacSchema,
    Format::Ddl,
};

constexpr std::array<std::string_view, kFormatCount> kFormatNames = {
    "pipe", "token", "space", "csv", "tsv", "html", "markdown", "latex",
    "dict", "json", "xml", "shuffled_rows", "shuffled_cols", "transpose",
    "mschema", "macschema", "ddl",
};

// Uniform draw set for mixed_serialize, in this exact order.
constexpr std::array<Format, 9> kMixedPool = {
    Format::Csv, Format::Tsv, Format::Html, Format::Markdown, Format::Latex,
    Format::Json, Format::Pipe, Format::Token, Format::Space,
};

}  // namespace

const std::array<Format, kFormatCount>& all_formats() { return kAllFormats; }

std::string_view format_name(Format f) { return kFormatNames[static_cast<size_t>(f)]; }

std::optional<Format> parse_format(std::string_view name) {
  for (size_t i = 0; i < kFormatCount; ++i)
    if (kFormatNames[i] == name) return kAllFormats[i];
  return std::nullopt;
}

FormatCategory category_of(Format f) {
  switch (f) {
    case Format::Pipe:
    case Format::Token:
    case Format::Space:
      return FormatCategory::Popular;
    case Format::ShuffledRows:
    case Format::ShuffledCols:
    case Format::Transpose:
      return FormatCategory::Structural;
    case Format::MSchema:
    case Format::MacSchema:
    case Format::Ddl:
      return FormatCategory::Schema;
    default:
      return FormatCategory::Data;
  }
}

std::string_view category_name(FormatCategory c) {
  switch (c) {
    case FormatCategory::Popular: return "popular";
    case FormatCategory::Data: return "data";
    case FormatCategory::Structural: return "structural";
    case FormatCategory::Schema: return "schema";
  }
  return "";
}

const std::vector<Format>& formats_in_category(FormatCategory c) {
  static const auto by_category = [] {
    std::array<std::vector<Format>, 4> out;
    for (Format f : kAllFormats) out[static_cast<size_t>(category_of(f))].push_back(f);
    return out;
  }();
  return by_category[static_cast<size_t>(c)];
}

const std::array<std::string_view, 5>& centroid_variant_names() {
  static const std::array<std::string_view, 5> names = {
      "centroid_popular", "centroid_data", "centroid_structural", "centroid_schema",
      "centroid_all"};
  return names;
}

bool is_centroid_variant(std::string_view name) {
  for (auto v : centroid_variant_names())
    if (v == name) return true;
  return false;
}

const std::vector<Format>& centroid_members(std::string_view variant) {
  static const std::vector<Format> all(kAllFormats.begin(), kAllFormats.end());
  if (variant == "centroid_all") return all;
  if (variant == "centroid_popular") return formats_in_category(FormatCategory::Popular);
  if (variant == "centroid_data") return formats_in_category(FormatCategory::Data);
  if (variant == "centroid_structural") return formats_in_category(FormatCategory::Structural);
  if (variant == "centroid_schema") return formats_in_category(FormatCategory::Schema);
  raise(ErrorCode::NotRenderable, fmt::format("'{}' is not a centroid variant", variant));
}

SerializedView serialize(const Table& t, Format f, uint64_t seed) {
  validate_table(t);
  std::string text;
  switch (f) {
    case Format::Pipe: text = render_pipe(t); break;
    case Format::Token: text = render_token(t); break;
    case Format::Space: text = render_space(t.headers, t.rows); break;
    case Format::Csv: text = render_csv(t); break;
    case Format::Tsv: text = render_tsv(t); break;
    case Format::Html: text = render_html(t); break;
    case Format::Markdown: text = render_markdown(t); break;
    case Format::Latex: text = render_latex(t); break;
    case Format::Dict: text = render_dict(t); break;
    case Format::Json: text = render_json(t); break;
    case Format::Xml: text = render_xml(t); break;
    case Format::ShuffledRows: text = render_shuffled_rows(t, seed); break;
    case Format::ShuffledCols: text = render_shuffled_cols(t, seed); break;
    case Format::Transpose: text = render_transpose(t); break;
    case Format::MSchema: text = render_mschema(t); break;
    case Format::MacSchema: text = render_macschema(t); break;
    case Format::Ddl: text = render_ddl(t); break;
  }
  return {t.id, std::string(format_name(f)), seed, std::move(text)};
}

std::vector<SerializedView> serialize_all(const Table& t, uint64_t seed) {
  std::vector<SerializedView> views;
  views.reserve(kFormatCount);
  for (Format f : kAllFormats) views.push_back(serialize(t, f, seed));
  return views;
}

SerializedView mixed_serialize(const Table& t, uint64_t seed) {
  validate_table(t);
  SplitMix64 rng(seed);
  std::string text;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    Format f = kMixedPool[rng.next_below(kMixedPool.size())];
    Table one{t.id, t.headers, {t.rows[i]}};
    if (i) text += '\n';
    text += serialize(one, f, 0).text;
  }
  return {t.id, std::string(kMixedFormat), seed, std::move(text)};
}

std::vector<std::vector<std::string>> transpose_cells(
    const std::vector<std::vector<std::string>>& cells) {
  if (cells.empty()) return {};
  std::vector<std::vector<std::string>> out(cells[0].size());
  for (size_t j = 0; j < cells[0].size(); ++j) {
    out[j].reserve(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) out[j].push_back(cells[i][j]);
  }
  return out;
}

}  // namespace centra
