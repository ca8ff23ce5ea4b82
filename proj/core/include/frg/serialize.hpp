#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "frg/neural.hpp"
#include "frg/util.hpp"

namespace frg::nn {

// Tensor list layout (little-endian):
//   count u32, then per tensor: name string | rows u64 | cols u64 | f64 values row-major.
// Standalone tensor files wrap this in the sealed envelope with magic "FRGT", version 1.

void write_tensors(ByteWriter& w, std::span<const ParamTensor> tensors);
std::vector<ParamTensor> read_tensors(ByteReader& r);

std::vector<std::uint8_t> save_tensors(std::span<const ParamTensor> tensors);
std::vector<ParamTensor> load_tensors(std::span<const std::uint8_t> file);

/// Inspection dump: [{name, shape: [rows, cols], values: [[...], ...]}, ...].
nlohmann::json tensors_to_json(std::span<const ParamTensor> tensors);

nlohmann::json mlp_config_to_json(const MlpConfig& cfg);
MlpConfig mlp_config_from_json(const nlohmann::json& j);

}  // namespace frg::nn
