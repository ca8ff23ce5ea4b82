#pragma once

#include <cstdint>
#include <string>

#include "frg/data.hpp"

namespace frg {

// Binary dataset cache ("FRGD", version 1), inside the common sealed envelope:
//   header     string   JSON {n, d, K, feature_names, tasks, source_hash, schema_hash}
//   sensitive  u32 x n
//   features   f64 x (n*d), column-major
//   labels     u8 x n per task, tasks in the header's order

struct DatasetMeta {
  std::uint64_t source_hash = 0;
  std::uint64_t schema_hash = 0;
};

struct CachedDataset {
  Dataset dataset;
  DatasetMeta meta;
};

std::vector<std::uint8_t> encode_dataset(const Dataset& d, const DatasetMeta& meta);
CachedDataset decode_dataset(std::span<const std::uint8_t> file);

void save_dataset(const std::string& path, const Dataset& d, const DatasetMeta& meta = {});
CachedDataset load_dataset(const std::string& path);

/// File name of the cache entry for a (source file, schema) pair.
std::string cache_file_name(std::uint64_t source_hash, std::uint64_t schema_hash);

}  // namespace frg
