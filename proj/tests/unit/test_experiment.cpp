#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "frg/error.hpp"
#include "frg/experiment.hpp"

namespace {

using namespace frg;

Dataset data(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n = 500;
  spec.d = 6;
  spec.leakage = 1.0;
  spec.seed = seed;
  return generate_synthetic(spec);
}

ProtocolConfig small_protocol(Method m) {
  ProtocolConfig p;
  p.method = m;
  p.n_resamples = 2;
  p.fractions = {1.0};
  p.seed = 5;
  p.frg.arch.latent_dim = 3;
  p.frg.arch.encoder_hidden = {8};
  p.frg.arch.decoder_hidden = {8};
  p.frg.train.epochs = 3;
  p.frg.train.batch_size = 64;
  p.downstream.epochs = 3;
  p.downstream.hidden = 8;
  return p;
}

TEST(Experiment, VaeTrialsAreAllSolutions) {
  const auto r = run_experiment(data(1), small_protocol(Method::vae));
  ASSERT_EQ(r.trials.size(), 2u);
  for (const auto& t : r.trials) {
    EXPECT_EQ(t.kind, TrialKind::solution) << t.error;
    ASSERT_TRUE(t.tasks.contains("y"));
    EXPECT_GE(t.tasks.at("y").auc, 0.0);
    EXPECT_LE(t.tasks.at("y").delta_dp, 1.0);
  }
  ASSERT_EQ(r.aggregates.size(), 1u);
  EXPECT_EQ(r.aggregates[0].solution_rate, 1.0);
}

TEST(Experiment, AggregatesRecomputable) {
  ProtocolConfig p = small_protocol(Method::frg_guarantee);
  p.n_resamples = 3;
  p.fractions = {0.5, 1.0};
  p.frg.epsilon = 0.05;
  const auto r = run_experiment(data(2), p);
  ASSERT_EQ(r.trials.size(), 6u);
  for (const auto& row : r.aggregates) {
    std::size_t n = 0, sol = 0, viol = 0;
    double sum = 0.0;
    for (const auto& t : r.trials) {
      if (t.fraction != row.fraction || t.kind == TrialKind::failed) continue;
      ++n;
      if (t.kind != TrialKind::solution) continue;
      ++sol;
      sum += t.tasks.at("y").auc;
      viol += t.tasks.at("y").delta_dp > p.frg.epsilon;
    }
    EXPECT_EQ(row.n_trials, n);
    EXPECT_DOUBLE_EQ(row.solution_rate, double(sol) / double(n));
    EXPECT_DOUBLE_EQ(row.violation_rate, double(viol) / double(n));
    if (sol > 0) EXPECT_NEAR(row.mean_auc, sum / double(sol), 1e-12);
    else EXPECT_TRUE(std::isnan(row.mean_auc));
  }
}

TEST(Experiment, NsfTrialsCarryNoMetrics) {
  ProtocolConfig p = small_protocol(Method::frg_guarantee);
  p.frg.epsilon = 0.0;
  const auto r = run_experiment(data(3), p);
  for (const auto& t : r.trials) {
    EXPECT_EQ(t.kind, TrialKind::nsf);
    EXPECT_TRUE(t.tasks.empty());
    EXPECT_TRUE(t.certificate.has_value());
  }
  EXPECT_EQ(r.aggregates[0].violation_rate, 0.0);
  EXPECT_EQ(r.aggregates[0].solution_rate, 0.0);
}

TEST(Experiment, WorkerCountDoesNotChangeResults) {
  ProtocolConfig p = small_protocol(Method::frg_practical);
  p.n_resamples = 3;
  const auto a = run_experiment(data(4), p, 1);
  const auto b = run_experiment(data(4), p, 3);
  ASSERT_EQ(a.trials.size(), b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    EXPECT_EQ(trial_to_json(a.trials[i]), trial_to_json(b.trials[i]));
  }
  EXPECT_EQ(aggregates_csv(a.aggregates, "y"), aggregates_csv(b.aggregates, "y"));
}

TEST(Experiment, UnknownTaskRejectedUpFront) {
  ProtocolConfig p = small_protocol(Method::vae);
  p.tasks = {"no_such_task"};
  EXPECT_THROW(run_experiment(data(5), p), DataError);
}

TEST(Experiment, FailedTrialIsRecordedNotFatal) {
  SyntheticSpec other;
  other.n = 100;
  other.d = 4;
  const auto report = run_trial(data(5), generate_synthetic(other), small_protocol(Method::vae), 0, 0, 1.0);
  EXPECT_EQ(report.kind, TrialKind::failed);
  EXPECT_FALSE(report.error.empty());
  const auto rows = aggregate_trials({report}, "vae", 0.2, {"y"}, {1.0});
  EXPECT_EQ(rows[0].n_trials, 0u);
  EXPECT_TRUE(std::isnan(rows[0].violation_rate));
}

TEST(Experiment, CsvAndJsonlFormats) {
  const auto r = run_experiment(data(6), small_protocol(Method::vae));
  const std::string csv = aggregates_csv(r.aggregates, "y");
  std::istringstream lines(csv);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header,
            "method,fraction,n_trials,solution_rate,violation_rate,mean_auc,std_auc,mean_delta_dp,"
            "std_delta_dp");
  EXPECT_EQ(row.rfind("vae,1.000000,2,1.000000,", 0), 0u) << row;
  for (const auto& t : r.trials) {
    const auto j = trial_to_json(t);
    EXPECT_EQ(j.dump().find('\n'), std::string::npos);
    EXPECT_EQ(trial_to_json(trial_from_json(j)), j);
  }
}

TEST(Experiment, ProtocolValidation) {
  ProtocolConfig p;
  p.fractions = {0.0};
  EXPECT_ANY_THROW(p.validate());
  p.fractions = {0.5};
  p.test_fraction = 1.0;
  EXPECT_ANY_THROW(p.validate());
  p.test_fraction = 0.2;
  p.n_resamples = 0;
  EXPECT_ANY_THROW(p.validate());
}

TEST(MethodConfig, NamesRoundTrip) {
  for (Method m : {Method::frg_guarantee, Method::frg_practical, Method::frg_ablation, Method::vae}) {
    EXPECT_EQ(method_from_string(to_string(m)), m);
  }
}

}  // namespace
