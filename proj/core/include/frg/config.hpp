#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "frg/data.hpp"
#include "frg/downstream.hpp"
#include "frg/experiment.hpp"
#include "frg/frg.hpp"
#include "frg/gradcheck.hpp"
#include "frg/representation.hpp"

// JSON (de)serialisation of every configuration struct. Missing keys keep their
// defaults; unknown keys and ill-typed values raise frg::ConfigError naming the key.

namespace frg {

/// Config of the `train` command: one FRG (or plain VAE) run on a dataset.
struct RunConfig {
  Method method = Method::frg_guarantee;
  FrgConfig frg;
  SplitSpec split;
};

void to_json(nlohmann::json& j, const RepresentationArch& v);
void from_json(const nlohmann::json& j, RepresentationArch& v);
void to_json(nlohmann::json& j, const TrainConfig& v);
void from_json(const nlohmann::json& j, TrainConfig& v);
void to_json(nlohmann::json& j, const DownstreamConfig& v);
void from_json(const nlohmann::json& j, DownstreamConfig& v);
void to_json(nlohmann::json& j, const FrgConfig& v);
void from_json(const nlohmann::json& j, FrgConfig& v);
void to_json(nlohmann::json& j, const SplitSpec& v);
void from_json(const nlohmann::json& j, SplitSpec& v);
void to_json(nlohmann::json& j, const CalibrationConfig& v);
void from_json(const nlohmann::json& j, CalibrationConfig& v);
void to_json(nlohmann::json& j, const SyntheticSpec& v);
void from_json(const nlohmann::json& j, SyntheticSpec& v);
void to_json(nlohmann::json& j, const ProtocolConfig& v);
void from_json(const nlohmann::json& j, ProtocolConfig& v);
void to_json(nlohmann::json& j, const GradcheckConfig& v);
void from_json(const nlohmann::json& j, GradcheckConfig& v);
void to_json(nlohmann::json& j, const RunConfig& v);
void from_json(const nlohmann::json& j, RunConfig& v);

std::string to_string(Likelihood l);
Likelihood likelihood_from_string(const std::string& name);
std::string to_string(BoundMethod m);
BoundMethod bound_method_from_string(const std::string& name);

/// Parses a JSON document; syntax errors become frg::ConfigError.
nlohmann::json parse_json(const std::string& text, const std::string& origin = "config");
nlohmann::json read_json_file(const std::filesystem::path& path);

template <class T>
T config_from_json(const nlohmann::json& j) {
  T value{};
  from_json(j, value);
  return value;
}

template <class T>
T load_config(const std::filesystem::path& path) {
  return config_from_json<T>(read_json_file(path));
}

/// Hex FNV-1a of the canonical (sorted-key) dump.
std::string fingerprint(const nlohmann::json& j);

}  // namespace frg
