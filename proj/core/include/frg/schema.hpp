#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frg/data.hpp"

namespace frg {

struct CategoricalColumn {
  std::string column;
  std::vector<std::string> levels;
};

/// Min-max scaled to [0, 1] (pinned min/max when given, data range otherwise),
/// then either kept as one continuous column or one-hot binned at `thresholds`
/// (k thresholds give k + 1 interval columns; a value falls in bin
/// #{t : scaled > t}).
struct NumericColumn {
  std::string column;
  std::optional<double> min;
  std::optional<double> max;
  std::vector<double> thresholds;
  bool continuous = false;

  std::size_t width() const { return continuous ? 1 : thresholds.size() + 1; }
};

struct SensitiveColumn {
  std::string column;
  /// Level i maps to group i.
  std::vector<std::string> levels;
};

struct LabelColumn {
  std::string name;
  std::string column;
  std::vector<std::string> positive;
  /// When nonempty, values outside positive and negative are rejected.
  std::vector<std::string> negative;
};

/// Column roles and encoding recipe for a headered CSV.
struct TabularSchema {
  int version = 1;
  std::string name;
  char delimiter = ',';
  std::vector<std::string> missing_tokens{"?", ""};
  SensitiveColumn sensitive;
  std::vector<LabelColumn> labels;
  std::vector<CategoricalColumn> categorical;
  std::vector<NumericColumn> numeric;

  static TabularSchema from_json(const nlohmann::json& j);
  static TabularSchema load(const std::string& path);
  nlohmann::json to_json() const;

  /// Encoded feature dimension: categorical one-hots first, then numeric columns.
  std::size_t feature_dim() const;
  std::vector<std::string> feature_names() const;
  /// Hash of the canonical JSON form.
  std::uint64_t hash() const;
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_kept = 0;
  std::size_t rows_dropped_missing = 0;
};

struct LoadedTable {
  Dataset dataset;
  IngestReport report;
};

/// Reads a headered CSV and encodes it per `schema`. Rows containing a missing
/// token in any used column are dropped and counted. Throws frg::DataError (with
/// 1-based file line numbers) on missing columns, unseen categories, unparsable
/// numbers or ragged rows.
LoadedTable load_tabular(const std::string& csv_path, const TabularSchema& schema);

/// Adult census ingestion; the recipe lives entirely in the schema file.
inline LoadedTable load_adult(const std::string& csv_path, const TabularSchema& schema) {
  return load_tabular(csv_path, schema);
}

/// Recovers the categorical level of every categorical column for one encoded row.
std::vector<std::string> decode_categorical(const RowVector& row, const TabularSchema& schema);

/// Splits one CSV record honouring double quotes; fields are whitespace-trimmed.
std::vector<std::string> split_csv_line(const std::string& line, char delimiter);

}  // namespace frg
