#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "centra/table.hpp"

namespace centra {

// The 17 renderable serialization formats, in canonical listing order.
enum class Format {
  Pipe, Token, Space,                       // popular
  Csv, Tsv, Html, Markdown, Latex, Dict, Json, Xml,  // data
  ShuffledRows, ShuffledCols, Transpose,    // structural
  MSchema, MacSchema, Ddl,                  // schema
};

enum class FormatCategory { Popular, Data, Structural, Schema };

inline constexpr size_t kFormatCount = 17;

const std::array<Format, kFormatCount>& all_formats();
std::string_view format_name(Format f);
std::optional<Format> parse_format(std::string_view name);
FormatCategory category_of(Format f);
std::string_view category_name(FormatCategory c);
const std::vector<Format>& formats_in_category(FormatCategory c);

// Pseudo-format ids that can appear as store keys next to the renderable
// ones: per-category centroids, the all-format centroid, and the per-row
// mixed perturbation.
inline constexpr std::string_view kMixedFormat = "mixed";
const std::array<std::string_view, 5>& centroid_variant_names();
bool is_centroid_variant(std::string_view name);
// Renderable members of a centroid variant ("centroid_popular" -> the
// popular formats, "centroid_all" -> all 17).
const std::vector<Format>& centroid_members(std::string_view variant);

struct SerializedView {
  std::string table_id;
  std::string format;  // format name or "mixed"
  uint64_t seed = 0;
  std::string text;
};

// Renders `t` in format `f`. Deterministic; `seed` only influences the
// shuffled_* formats (one SplitMix64(seed) Fisher-Yates permutation of rows
// or columns). Throws on invalid tables (validate_table rules).
SerializedView serialize(const Table& t, Format f, uint64_t seed);

// All 17 formats in listing order, all with the same seed.
std::vector<SerializedView> serialize_all(const Table& t, uint64_t seed);

// Per-row format perturbation: each row is rendered as its own single-row
// table (headers included) in a format drawn uniformly from
//   csv, tsv, html, markdown, latex, json, pipe, token, space
// (one SplitMix64(seed) draw of next_below(9) per row, in row order, indexing
// that list), and the pieces are joined with "\n". Format id is "mixed".
SerializedView mixed_serialize(const Table& t, uint64_t seed);

// Plain cell-matrix transpose, exposed for the involution property test.
std::vector<std::vector<std::string>> transpose_cells(
    const std::vector<std::vector<std::string>>& cells);

}  // namespace centra
