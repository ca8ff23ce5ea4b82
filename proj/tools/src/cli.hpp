#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace frg::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kNoSolution = 3,
  kCalibrationFailure = 4,
  kGradcheckFailure = 5,
};

/// A fully resolved command: everything needed to reproduce its outputs. This is
/// what manifest.json stores and what `frg rerun` replays.
struct Invocation {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  /// role -> file path
  std::map<std::string, std::string> inputs;
  nlohmann::json options = nlohmann::json::object();
  std::optional<std::uint64_t> root_seed;
  unsigned workers = 1;
  std::filesystem::path out;
};

nlohmann::json invocation_to_json(const Invocation& inv);
Invocation invocation_from_json(const nlohmann::json& j);

/// Runs the command, writes its outputs and manifest.json under inv.out, and
/// returns the exit code. Library errors propagate.
int execute(const Invocation& inv, std::ostream& log);

/// Maps an in-flight exception to an exit code and prints it to `err`.
int report_error(std::ostream& err);

// Resolution helpers used by the argument parser: each loads the optional config
// file, applies the root seed and returns the invocation with every default
// materialized.
Invocation resolve_ingest(const std::string& csv, const std::string& schema);
Invocation resolve_synth(const std::optional<std::string>& config, std::optional<std::uint64_t> seed);
Invocation resolve_train(const std::string& data, const std::optional<std::string>& config,
                         std::optional<std::uint64_t> seed);
Invocation resolve_certify(const std::string& model, const std::string& data,
                           const std::optional<std::string>& config, std::optional<double> epsilon,
                           std::optional<double> delta);
Invocation resolve_experiment(const std::string& data, const std::optional<std::string>& config,
                              std::optional<std::uint64_t> seed);
Invocation resolve_calibrate(const std::string& data, double epsilon,
                             const std::optional<std::string>& config, std::optional<std::uint64_t> seed);
Invocation resolve_gradcheck(const std::optional<std::string>& config, std::optional<std::uint64_t> seed,
                             bool corrupt_gradient);
/// Loads a manifest and checks that its inputs still hash to the recorded values.
Invocation resolve_rerun(const std::string& manifest);

}  // namespace frg::cli
