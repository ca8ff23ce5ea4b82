#include "frg/schema.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "frg/error.hpp"
#include "frg/util.hpp"

namespace frg {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

TabularSchema TabularSchema::from_json(const json& j) {
  try {
    TabularSchema s;
    s.version = get_or<int>(j, "version", 1);
    s.name = get_or<std::string>(j, "name", "");
    const auto delim = get_or<std::string>(j, "delimiter", ",");
    if (delim.size() != 1) throw ConfigError("schema delimiter must be one character");
    s.delimiter = delim[0];
    s.missing_tokens = get_or<std::vector<std::string>>(j, "missing_tokens", s.missing_tokens);
    s.sensitive.column = j.at("sensitive").at("column").get<std::string>();
    s.sensitive.levels = j.at("sensitive").at("levels").get<std::vector<std::string>>();
    for (const auto& l : get_or<json>(j, "labels", json::array())) {
      s.labels.push_back({l.at("name").get<std::string>(), l.at("column").get<std::string>(),
                          l.at("positive").get<std::vector<std::string>>(),
                          get_or<std::vector<std::string>>(l, "negative", {})});
    }
    for (const auto& c : get_or<json>(j, "categorical", json::array())) {
      s.categorical.push_back(
          {c.at("column").get<std::string>(), c.at("levels").get<std::vector<std::string>>()});
    }
    for (const auto& c : get_or<json>(j, "numeric", json::array())) {
      NumericColumn n;
      n.column = c.at("column").get<std::string>();
      if (c.contains("min")) n.min = c.at("min").get<double>();
      if (c.contains("max")) n.max = c.at("max").get<double>();
      n.thresholds = get_or<std::vector<double>>(c, "thresholds", {});
      n.continuous = get_or<bool>(c, "continuous", false);
      if (!n.continuous && n.thresholds.empty()) {
        throw ConfigError("numeric column '" + n.column + "' needs thresholds or continuous");
      }
      if (!std::is_sorted(n.thresholds.begin(), n.thresholds.end())) {
        throw ConfigError("thresholds of '" + n.column + "' must be ascending");
      }
      s.numeric.push_back(std::move(n));
    }
    if (s.sensitive.levels.size() < 2) throw ConfigError("sensitive column needs >= 2 levels");
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed schema: ") + e.what());
  }
}

TabularSchema TabularSchema::load(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("schema " + path + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

json TabularSchema::to_json() const {
  json j;
  j["version"] = version;
  j["name"] = name;
  j["delimiter"] = std::string(1, delimiter);
  j["missing_tokens"] = missing_tokens;
  j["sensitive"] = {{"column", sensitive.column}, {"levels", sensitive.levels}};
  j["labels"] = json::array();
  for (const auto& l : labels) {
    j["labels"].push_back(
        {{"name", l.name}, {"column", l.column}, {"positive", l.positive}, {"negative", l.negative}});
  }
  j["categorical"] = json::array();
  for (const auto& c : categorical) {
    j["categorical"].push_back({{"column", c.column}, {"levels", c.levels}});
  }
  j["numeric"] = json::array();
  for (const auto& n : numeric) {
    json c{{"column", n.column}, {"thresholds", n.thresholds}, {"continuous", n.continuous}};
    if (n.min) c["min"] = *n.min;
    if (n.max) c["max"] = *n.max;
    j["numeric"].push_back(c);
  }
  return j;
}

std::size_t TabularSchema::feature_dim() const {
  std::size_t d = 0;
  for (const auto& c : categorical) d += c.levels.size();
  for (const auto& n : numeric) d += n.width();
  return d;
}

std::vector<std::string> TabularSchema::feature_names() const {
  std::vector<std::string> names;
  for (const auto& c : categorical) {
    for (const auto& l : c.levels) names.push_back(c.column + "=" + l);
  }
  for (const auto& n : numeric) {
    if (n.continuous) {
      names.push_back(n.column);
      continue;
    }
    for (std::size_t b = 0; b < n.width(); ++b) names.push_back(n.column + "#bin" + std::to_string(b));
  }
  return names;
}

std::uint64_t TabularSchema::hash() const { return fnv1a64(to_json().dump()); }

LoadedTable load_tabular(const std::string& csv_path, const TabularSchema& schema) {
  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open CSV file: " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV file is empty: " + csv_path);
  const auto header = split_csv_line(line, schema.delimiter);
  std::unordered_map<std::string, std::size_t> col_index;
  for (std::size_t i = 0; i < header.size(); ++i) col_index[header[i]] = i;
  auto find_col = [&](const std::string& name) {
    auto it = col_index.find(name);
    if (it == col_index.end()) throw DataError("CSV is missing column '" + name + "'", 1);
    return it->second;
  };

  const std::size_t sens_col = find_col(schema.sensitive.column);
  std::vector<std::size_t> label_cols, cat_cols, num_cols;
  for (const auto& l : schema.labels) label_cols.push_back(find_col(l.column));
  for (const auto& c : schema.categorical) cat_cols.push_back(find_col(c.column));
  for (const auto& n : schema.numeric) num_cols.push_back(find_col(n.column));

  std::vector<std::size_t> used{sens_col};
  used.insert(used.end(), label_cols.begin(), label_cols.end());
  used.insert(used.end(), cat_cols.begin(), cat_cols.end());
  used.insert(used.end(), num_cols.begin(), num_cols.end());

  auto index_of = [](const std::vector<std::string>& levels, const std::string& v) -> int {
    auto it = std::find(levels.begin(), levels.end(), v);
    return it == levels.end() ? -1 : static_cast<int>(it - levels.begin());
  };
  auto is_missing = [&](const std::string& v) {
    return std::find(schema.missing_tokens.begin(), schema.missing_tokens.end(), v) !=
           schema.missing_tokens.end();
  };

  // First pass: validate, parse and keep the raw values of complete rows.
  struct Row {
    int s;
    std::vector<int> labels;
    std::vector<int> levels;
    std::vector<double> numbers;
  };
  std::vector<Row> rows;
  IngestReport report;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++report.rows_read;
    const auto fields = split_csv_line(line, schema.delimiter);
    if (fields.size() != header.size()) {
      throw DataError("expected " + std::to_string(header.size()) + " fields, found " +
                          std::to_string(fields.size()),
                      line_no);
    }
    if (std::any_of(used.begin(), used.end(), [&](std::size_t c) { return is_missing(fields[c]); })) {
      ++report.rows_dropped_missing;
      continue;
    }
    Row row;
    row.s = index_of(schema.sensitive.levels, fields[sens_col]);
    if (row.s < 0) {
      throw DataError("unseen sensitive level '" + fields[sens_col] + "'", line_no);
    }
    for (std::size_t t = 0; t < schema.labels.size(); ++t) {
      const auto& spec = schema.labels[t];
      const auto& v = fields[label_cols[t]];
      if (index_of(spec.positive, v) >= 0) {
        row.labels.push_back(1);
      } else if (spec.negative.empty() || index_of(spec.negative, v) >= 0) {
        row.labels.push_back(0);
      } else {
        throw DataError("unexpected value '" + v + "' for label '" + spec.name + "'", line_no);
      }
    }
    for (std::size_t c = 0; c < schema.categorical.size(); ++c) {
      const int level = index_of(schema.categorical[c].levels, fields[cat_cols[c]]);
      if (level < 0) {
        throw DataError("unseen category '" + fields[cat_cols[c]] + "' in column '" +
                            schema.categorical[c].column + "'",
                        line_no);
      }
      row.levels.push_back(level);
    }
    for (std::size_t c = 0; c < schema.numeric.size(); ++c) {
      const auto v = parse_double(fields[num_cols[c]]);
      if (!v) {
        throw DataError("cannot parse number '" + fields[num_cols[c]] + "' in column '" +
                            schema.numeric[c].column + "'",
                        line_no);
      }
      row.numbers.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no complete rows in " + csv_path);
  report.rows_kept = rows.size();

  // Scaling ranges: pinned when given, otherwise observed over kept rows.
  std::vector<std::pair<double, double>> ranges;
  for (std::size_t c = 0; c < schema.numeric.size(); ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : rows) {
      lo = std::min(lo, r.numbers[c]);
      hi = std::max(hi, r.numbers[c]);
    }
    ranges.emplace_back(schema.numeric[c].min.value_or(lo), schema.numeric[c].max.value_or(hi));
  }

  const auto d = static_cast<Eigen::Index>(schema.feature_dim());
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), d);
  std::vector<int> s(rows.size());
  std::map<std::string, std::vector<int>> labels;
  for (const auto& l : schema.labels) labels[l.name].resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    Eigen::Index offset = 0;
    for (std::size_t c = 0; c < schema.categorical.size(); ++c) {
      x(r, offset + rows[i].levels[c]) = 1.0;
      offset += static_cast<Eigen::Index>(schema.categorical[c].levels.size());
    }
    for (std::size_t c = 0; c < schema.numeric.size(); ++c) {
      const auto& spec = schema.numeric[c];
      const auto [lo, hi] = ranges[c];
      double scaled = hi > lo ? (rows[i].numbers[c] - lo) / (hi - lo) : 0.0;
      scaled = std::clamp(scaled, 0.0, 1.0);
      if (spec.continuous) {
        x(r, offset) = scaled;
      } else {
        const auto bin = std::count_if(spec.thresholds.begin(), spec.thresholds.end(),
                                       [&](double t) { return scaled > t; });
        x(r, offset + bin) = 1.0;
      }
      offset += static_cast<Eigen::Index>(spec.width());
    }
    s[i] = rows[i].s;
    for (std::size_t t = 0; t < schema.labels.size(); ++t) {
      labels[schema.labels[t].name][i] = rows[i].labels[t];
    }
  }
  return {Dataset(std::move(x), std::move(s), static_cast<int>(schema.sensitive.levels.size()),
                  std::move(labels), schema.feature_names()),
          report};
}

std::vector<std::string> decode_categorical(const RowVector& row, const TabularSchema& schema) {
  if (row.size() != static_cast<Eigen::Index>(schema.feature_dim())) {
    throw DomainError("encoded row does not match the schema dimension");
  }
  std::vector<std::string> out;
  Eigen::Index offset = 0;
  for (const auto& c : schema.categorical) {
    const auto width = static_cast<Eigen::Index>(c.levels.size());
    Eigen::Index hot = -1;
    for (Eigen::Index k = 0; k < width; ++k) {
      if (row(offset + k) == 1.0) {
        if (hot >= 0) throw DomainError("column '" + c.column + "' has more than one hot level");
        hot = k;
      }
    }
    if (hot < 0) throw DomainError("column '" + c.column + "' has no hot level");
    out.push_back(c.levels[static_cast<std::size_t>(hot)]);
    offset += width;
  }
  return out;
}

}  // namespace frg
