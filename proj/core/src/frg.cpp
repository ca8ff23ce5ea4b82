#include "frg/frg.hpp"

#include <cmath>
#include <optional>

#include "frg/error.hpp"
#include "frg/rng.hpp"

namespace frg {

namespace {
thread_local std::uint64_t g_fairness_tests = 0;
}

std::string to_string(FrgMode mode) { return mode == FrgMode::guarantee ? "guarantee" : "practical"; }

FrgMode frg_mode_from_string(const std::string& name) {
  if (name == "guarantee") return FrgMode::guarantee;
  if (name == "practical") return FrgMode::practical;
  throw ConfigError("unknown FRG mode '" + name + "' (expected guarantee or practical)");
}

void FrgConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie strictly inside (0, 1)");
  if (!(adjustment >= 0.0)) throw ConfigError("adjustment must be nonnegative");
  if (mode == FrgMode::guarantee && adjustment != 0.0) {
    throw ConfigError("guarantee mode requires adjustment = 0; use practical mode for a slack term");
  }
  if (!(lambda_init >= 0.0)) throw ConfigError("lambda_init must be nonnegative");
  if (!(lambda_step >= 0.0)) throw ConfigError("lambda_step must be nonnegative");
  bound_spec(false).validate();
  train.validate();
}

ConfidenceBoundSpec FrgConfig::bound_spec(bool inflated) const {
  return {bound_method, delta, inflated,
          bound_method == BoundMethod::hoeffding ? hoeffding_range : std::nullopt};
}

double g_tilde_threshold(const FrgConfig& config, std::span<const double> priors) {
  const double base = psi(config.epsilon, priors);
  return config.mode == FrgMode::guarantee ? base : base + config.adjustment;
}

CandidateResult candidate_selection(const Dataset& candidate_data, const FrgConfig& config,
                                    std::span<const double> priors) {
  config.validate();
  if (candidate_data.size() < 2) throw DataError("candidate selection needs at least 2 rows");
  const double threshold = g_tilde_threshold(config, priors);
  const std::size_t m = candidate_data.size();
  const ConfidenceBoundSpec spec = config.bound_spec(true);

  ConstraintTerm term;
  term.active = true;
  term.threshold = threshold;
  if (!config.ablation) {
    if (config.bound_method == BoundMethod::student_t) {
      term.std_factor = student_t_width_factor(spec, m);
    } else {
      term.offset = hoeffding_width(spec, m);
    }
  }

  LagrangeSchedule schedule;
  schedule.lambda_init = config.lambda_init;
  schedule.lambda_step = config.lambda_step;
  std::optional<RepresentationModel> feasible;
  int feasible_epoch = -1;
  int epoch = 0;
  auto constraint_value = [&](const RepresentationModel& model) {
    auto est = estimate_I1(model, candidate_data);
    for (double& g : est.per_example) g -= threshold;
    if (config.ablation) {
      double total = 0.0;
      for (double g : est.per_example) total += g;
      return total / static_cast<double>(est.per_example.size());
    }
    return upper_bound(est.per_example, spec).upper;
  };
  schedule.full_constraint = [&](const RepresentationModel& model) {
    const double value = constraint_value(model);
    if (value <= 0.0) {
      feasible = model;
      feasible_epoch = epoch;
    }
    ++epoch;
    return value;
  };

  CandidateResult out{
      RepresentationModel(candidate_data.dim(), candidate_data.num_groups(), config.arch,
                          derive_seed(config.train.seed, 0x1417)),
      {}};
  out.trace = train_representation(out.model, candidate_data, config.train, term, schedule);
  out.selected_epoch = config.train.epochs - 1;
  // Dual ascent can leave the last iterate infeasible after an earlier one was not.
  if (feasible && feasible_epoch != out.selected_epoch) {
    out.model = std::move(*feasible);
    out.selected_epoch = feasible_epoch;
  }
  return out;
}

FairnessTestResult fairness_test(const RepresentationModel& candidate, const Dataset& test_data,
                                 const FrgConfig& config, std::span<const double> priors) {
  ++g_fairness_tests;
  if (test_data.size() < 2) throw DataError("fairness test needs at least 2 rows");
  FairnessTestResult out;
  out.threshold = g_tilde_threshold(config, priors);
  out.estimates = estimate_I1(candidate, test_data).per_example;
  for (double& g : out.estimates) g -= out.threshold;
  out.certificate = upper_bound(out.estimates, config.bound_spec(false));
  out.passed = out.certificate.upper <= 0.0;
  return out;
}

std::uint64_t fairness_test_invocations() noexcept { return g_fairness_tests; }

const BoundResult& FrgOutput::certificate() const {
  return is_solution() ? solution().certificate : no_solution().certificate;
}

FrgOutput run_frg(const Dataset& data, const SplitSpec& split, const FrgConfig& config) {
  config.validate();
  const auto priors = data.group_priors();
  auto [candidate_data, test_data] = split_candidate_fairness(data, split);
  auto candidate = candidate_selection(candidate_data, config, priors);
  const auto test = fairness_test(candidate.model, test_data, config, priors);

  FrgOutput out{FrgNoSolution{}, config, priors, std::move(candidate.trace)};
  if (test.passed || config.ablation) {
    FrgSolution sol;
    sol.model = std::move(candidate.model);
    sol.certificate = test.certificate;
    sol.threshold = test.threshold;
    sol.tested = !config.ablation;
    sol.guaranteed = config.mode == FrgMode::guarantee && sol.tested;
    if (sol.guaranteed) {
      sol.implied_delta_dp = psi_inverse(std::max(0.0, test.certificate.upper + test.threshold), priors);
    }
    out.result = std::move(sol);
  } else {
    out.result = FrgNoSolution{"fairness test failed: upper bound " +
                                   std::to_string(test.certificate.upper) + " > 0",
                               test.certificate, test.threshold};
  }
  return out;
}

}  // namespace frg
