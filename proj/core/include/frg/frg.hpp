#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "frg/data.hpp"
#include "frg/downstream.hpp"
#include "frg/representation.hpp"
#include "frg/stats_bounds.hpp"

namespace frg {

enum class FrgMode {
  /// Threshold psi(epsilon): a passing certificate bounds the parity gap of every
  /// downstream classifier with probability 1 - delta.
  guarantee,
  /// Threshold psi(epsilon) + adjustment: only the surrogate bound is certified.
  practical,
};

std::string to_string(FrgMode mode);
FrgMode frg_mode_from_string(const std::string& name);

struct FrgConfig {
  double epsilon = 0.2;
  double delta = 0.1;
  FrgMode mode = FrgMode::guarantee;
  /// Slack added to psi(epsilon) in practical mode; must be 0 in guarantee mode.
  double adjustment = 0.0;
  BoundMethod bound_method = BoundMethod::student_t;
  /// Range of the per-example estimates (KL - threshold), Hoeffding only.
  std::optional<std::pair<double, double>> hoeffding_range;
  double lambda_init = 0.0;
  double lambda_step = 1.0;
  RepresentationArch arch;
  TrainConfig train;
  /// Constrain the plain mean of the estimates instead of the inflated bound and
  /// return the candidate without gating on the fairness test.
  bool ablation = false;

  void validate() const;
  /// Bound used by the fairness test (inflated = false) or candidate selection (true).
  ConfidenceBoundSpec bound_spec(bool inflated) const;
};

/// psi(epsilon) + adjustment (adjustment ignored in guarantee mode). An estimate
/// g^(j) of the constraint is KL_j minus this threshold.
double g_tilde_threshold(const FrgConfig& config, std::span<const double> priors);

struct CandidateResult {
  RepresentationModel model;
  /// Per epoch: objective, full-data inflated bound on D_c (or mean under ablation), lambda.
  std::vector<EpochRecord> trace;
  /// Epoch whose end-of-epoch weights were returned.
  int selected_epoch = 0;
};

/// Saddle-point search on  -recon + KL + lambda * U^_eps(phi, D_c): Adam on the
/// network parameters, projected dual ascent on lambda once per epoch. Returns the
/// last epoch whose bound on D_c was <= 0, or the final epoch when none was.
CandidateResult candidate_selection(const Dataset& candidate_data, const FrgConfig& config,
                                    std::span<const double> priors);

struct FairnessTestResult {
  bool passed = false;
  BoundResult certificate;
  double threshold = 0.0;
  std::vector<double> estimates;  // g^(j) = KL_j - threshold
};

/// One-shot test: Student-t (or Hoeffding) 1 - delta upper bound on the mean of
/// g^(j) over D_f; passes iff the bound is <= 0.
FairnessTestResult fairness_test(const RepresentationModel& candidate, const Dataset& test_data,
                                 const FrgConfig& config, std::span<const double> priors);

/// Number of fairness_test calls made on the current thread.
std::uint64_t fairness_test_invocations() noexcept;

struct FrgSolution {
  RepresentationModel model;
  BoundResult certificate;
  double threshold = 0.0;
  /// True only in guarantee mode: the parity bound holds for every downstream model.
  bool guaranteed = false;
  /// False for the ablation, which returns candidates without gating on the test.
  bool tested = true;
  /// Parity gap implied by the certified surrogate bound (guarantee mode only).
  std::optional<double> implied_delta_dp;
};

struct FrgNoSolution {
  std::string reason;
  BoundResult certificate;
  double threshold = 0.0;
};

struct FrgOutput {
  std::variant<FrgSolution, FrgNoSolution> result;
  FrgConfig config;
  std::vector<double> priors;
  std::vector<EpochRecord> trace;

  bool is_solution() const noexcept { return std::holds_alternative<FrgSolution>(result); }
  const FrgSolution& solution() const { return std::get<FrgSolution>(result); }
  const FrgNoSolution& no_solution() const { return std::get<FrgNoSolution>(result); }
  const BoundResult& certificate() const;
};

/// split -> candidate_selection(D_c) -> fairness_test(D_f) -> Solution or NSF.
/// Group priors come from the whole input dataset.
FrgOutput run_frg(const Dataset& data, const SplitSpec& split, const FrgConfig& config);

// Calibration of the practical-mode adjustment.

struct CalibrationConfig {
  /// Qualifying models satisfy epsilon - c <= parity gap <= epsilon on D_c.
  double c = 0.04;
  /// Percentile (0..100) of the sorted qualifying I~1 values.
  double k = 50.0;
  /// Fixed penalty weights on mean KL, one trained model each.
  std::vector<double> sweep{0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
  RepresentationArch arch;
  TrainConfig train;
  std::string task;
  DownstreamConfig downstream;

  void validate(double epsilon) const;
};

struct SweepPoint {
  double penalty = 0.0;
  double delta_dp = 0.0;
  double i1 = 0.0;
  double auc = 0.0;
  bool qualified = false;
};

struct CalibrationResult {
  std::vector<SweepPoint> sweep;
  double psi_epsilon = 0.0;
  /// Index into `sweep` of the chosen model; empty when no point qualified.
  std::optional<std::size_t> chosen;
  /// chosen I~1 - psi(epsilon); empty on calibration failure.
  std::optional<double> adjustment;

  bool ok() const noexcept { return adjustment.has_value(); }
  /// The adjustment, or frg::CalibrationFailure when none qualified.
  double value() const;
};

/// Marks qualifying points, sorts their I~1 ascending, picks the nearest-rank k-th
/// percentile (ties in I~1 broken by highest AUC) and derives the adjustment.
CalibrationResult select_adjustment(std::vector<SweepPoint> sweep, double epsilon, double c,
                                    double k, double psi_epsilon);

/// Trains one penalised model per sweep weight on D_c, records (parity gap, I~1,
/// AUC) on D_c via a downstream classifier, then applies select_adjustment.
CalibrationResult calibrate_adjustment(const Dataset& candidate_data, double epsilon,
                                       const CalibrationConfig& config);

}  // namespace frg
