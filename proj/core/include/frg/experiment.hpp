#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frg/data.hpp"
#include "frg/downstream.hpp"
#include "frg/frg.hpp"

namespace frg {

enum class Method { frg_guarantee, frg_practical, frg_ablation, vae };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

/// The FRG settings a method implies: guarantee sets mode guarantee (a nonzero
/// adjustment then fails validation), practical sets mode practical, ablation sets
/// practical plus the ablation flag. vae leaves `f` unchanged.
FrgConfig method_config(Method method, FrgConfig f);

/// Multi-trial protocol: stratified hold-out of `test_fraction`, then
/// n_resamples bootstrap resamples cut at each fraction; every trial trains the
/// method, fits one downstream classifier per task on the trial's training
/// representations and evaluates parity gap and AUC on the hold-out.
struct ProtocolConfig {
  Method method = Method::frg_guarantee;
  std::size_t n_resamples = 10;
  std::vector<double> fractions{0.10, 0.15, 0.25, 0.40, 0.65, 1.00};
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  /// Share of each trial's data used for candidate selection (FRG methods).
  double candidate_fraction = 0.6;
  /// epsilon also defines the violation event parity gap > epsilon.
  FrgConfig frg;
  DownstreamConfig downstream;
  EmbedMode embed_mode = EmbedMode::mean;
  /// Empty means every label in the dataset.
  std::vector<std::string> tasks;

  void validate() const;
};

struct TaskMetrics {
  double delta_dp = 0.0;
  double auc = 0.0;
};

enum class TrialKind { solution, nsf, failed };
std::string to_string(TrialKind k);

struct TrialReport {
  std::size_t trial = 0;
  std::size_t resample = 0;
  double fraction = 1.0;
  std::size_t n_train = 0;
  TrialKind kind = TrialKind::failed;
  /// Present for solutions only.
  std::map<std::string, TaskMetrics> tasks;
  std::optional<BoundResult> certificate;
  double threshold = 0.0;
  std::string error;
};

struct AggregateRow {
  std::string method;
  std::string task;
  double fraction = 0.0;
  std::size_t n_trials = 0;  // excludes failed trials
  double solution_rate = 0.0;
  /// Share of trials with a solution whose parity gap exceeds epsilon; NSF trials
  /// count as non-violating.
  double violation_rate = 0.0;
  double mean_auc = 0.0;
  double std_auc = 0.0;
  double mean_delta_dp = 0.0;
  double std_delta_dp = 0.0;
};

struct ExperimentResult {
  std::vector<TrialReport> trials;
  std::vector<AggregateRow> aggregates;
};

/// Runs one trial; exceptions inside become a failed report.
TrialReport run_trial(const Dataset& train, const Dataset& test, const ProtocolConfig& config,
                      std::size_t trial, std::size_t resample, double fraction);

/// `workers` concurrent trials; results are ordered by trial index and independent
/// of the worker count.
ExperimentResult run_experiment(const Dataset& data, const ProtocolConfig& config,
                                unsigned workers = 1);

/// Deterministic fold over trial reports, grouped by (task, fraction).
std::vector<AggregateRow> aggregate_trials(const std::vector<TrialReport>& trials,
                                           const std::string& method, double epsilon,
                                           const std::vector<std::string>& tasks,
                                           const std::vector<double>& fractions);

/// CSV with header method,fraction,n_trials,solution_rate,violation_rate,mean_auc,
/// std_auc,mean_delta_dp,std_delta_dp for the rows of one task.
std::string aggregates_csv(const std::vector<AggregateRow>& rows, const std::string& task);

nlohmann::json trial_to_json(const TrialReport& report);
TrialReport trial_from_json(const nlohmann::json& j);

}  // namespace frg
