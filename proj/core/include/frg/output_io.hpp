#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frg/frg.hpp"
#include "frg/representation.hpp"

namespace frg {

// Sealed binary files (see frg::seal):
//   "FRGM" v1  representation model: header JSON string, then encoder and decoder
//              tensor lists.
//   "FRGO" v1  FRG outcome: header JSON string (status, certificate, threshold,
//              priors, config and its fingerprint, trace, metadata), u8 has_model,
//              then the model payload when present.
// Any flipped byte fails the checksum and raises frg::FormatError.

struct LoadedModel {
  RepresentationModel model;
  nlohmann::json metadata;
};

std::vector<std::uint8_t> save_model(const RepresentationModel& model,
                                     const nlohmann::json& metadata = nlohmann::json::object());
LoadedModel load_model(std::span<const std::uint8_t> file);

struct LoadedOutput {
  FrgOutput output;
  nlohmann::json metadata;
  std::string config_fingerprint;
};

std::vector<std::uint8_t> save_output(const FrgOutput& output,
                                      const nlohmann::json& metadata = nlohmann::json::object());
LoadedOutput load_output(std::span<const std::uint8_t> file);

/// Human-readable summary (no tensors) of an outcome.
nlohmann::json output_summary(const FrgOutput& output);

nlohmann::json bound_to_json(const BoundResult& b);
BoundResult bound_from_json(const nlohmann::json& j);
nlohmann::json trace_to_json(const std::vector<EpochRecord>& trace);
std::vector<EpochRecord> trace_from_json(const nlohmann::json& j);

}  // namespace frg
