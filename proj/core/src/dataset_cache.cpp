#include "frg/dataset_cache.hpp"

#include <nlohmann/json.hpp>

#include "frg/error.hpp"
#include "frg/util.hpp"

namespace frg {

namespace {
constexpr std::string_view kMagic = "FRGD";
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::vector<std::uint8_t> encode_dataset(const Dataset& d, const DatasetMeta& meta) {
  nlohmann::json header{{"n", d.size()},
                        {"d", d.dim()},
                        {"K", d.num_groups()},
                        {"feature_names", d.feature_names()},
                        {"tasks", d.task_names()},
                        {"source_hash", to_hex(meta.source_hash)},
                        {"schema_hash", to_hex(meta.schema_hash)}};
  ByteWriter w;
  w.str(header.dump());
  for (int s : d.sensitive()) w.u32(static_cast<std::uint32_t>(s));
  const Matrix& x = d.features();
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) w.f64(x(r, c));
  }
  for (const auto& task : d.task_names()) {
    for (int y : d.label(task)) w.u8(static_cast<std::uint8_t>(y));
  }
  return seal(kMagic, kVersion, w.bytes());
}

CachedDataset decode_dataset(std::span<const std::uint8_t> file) {
  const auto payload = unseal(file, kMagic, kVersion);
  ByteReader r(payload);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad dataset header: ") + e.what());
  }
  const auto n = header.at("n").get<std::size_t>();
  const auto d = header.at("d").get<Eigen::Index>();
  const auto K = header.at("K").get<int>();
  std::vector<int> s(n);
  for (auto& v : s) v = static_cast<int>(r.u32());
  Matrix x(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index c = 0; c < d; ++c) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, c) = r.f64();
  }
  std::map<std::string, std::vector<int>> labels;
  for (const auto& task : header.at("tasks").get<std::vector<std::string>>()) {
    auto& y = labels[task];
    y.resize(n);
    for (auto& v : y) v = r.u8();
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes in dataset file");
  DatasetMeta meta;
  meta.source_hash = std::stoull(header.at("source_hash").get<std::string>(), nullptr, 16);
  meta.schema_hash = std::stoull(header.at("schema_hash").get<std::string>(), nullptr, 16);
  return {Dataset(std::move(x), std::move(s), K, std::move(labels),
                  header.at("feature_names").get<std::vector<std::string>>()),
          meta};
}

void save_dataset(const std::string& path, const Dataset& d, const DatasetMeta& meta) {
  write_binary_file(path, encode_dataset(d, meta));
}

CachedDataset load_dataset(const std::string& path) { return decode_dataset(read_binary_file(path)); }

std::string cache_file_name(std::uint64_t source_hash, std::uint64_t schema_hash) {
  return to_hex(source_hash) + "-" + to_hex(schema_hash) + ".frgd";
}

}  // namespace frg
