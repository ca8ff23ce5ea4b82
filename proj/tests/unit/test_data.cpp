#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "frg/data.hpp"
#include "frg/downstream.hpp"
#include "frg/error.hpp"
#include "frg/rng.hpp"

namespace {

using namespace frg;

Dataset balanced(std::size_t n, int k = 2) {
  Matrix x(static_cast<Eigen::Index>(n), 2);
  std::vector<int> s(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
    x(static_cast<Eigen::Index>(i), 1) = static_cast<double>(i % 2);
    s[i] = static_cast<int>(i % static_cast<std::size_t>(k));
    y[i] = static_cast<int>((i / 3) % 2);
  }
  return Dataset(x, s, k, {{"y", y}});
}

TEST(Dataset, PriorsRecomputable) {
  const Dataset d = balanced(10, 3);
  const auto priors = compute_group_priors(d.sensitive(), 3);
  EXPECT_EQ(d.group_priors(), priors);
  EXPECT_DOUBLE_EQ(priors[0], 0.4);
  EXPECT_NEAR(std::accumulate(priors.begin(), priors.end(), 0.0), 1.0, 1e-15);
}

TEST(Dataset, RejectsInvalidInput) {
  Matrix x = Matrix::Zero(3, 2);
  EXPECT_THROW(Dataset(x, {0, 1}, 2), DataError);
  EXPECT_THROW(Dataset(x, {0, 1, 2}, 2), DataError);
  EXPECT_THROW(Dataset(x, {0, 0, 0}, 2), DataError);
  EXPECT_THROW(Dataset(x, {0, 1, 1}, 2, {{"y", {0, 2, 1}}}), DataError);
  EXPECT_THROW(Dataset(x, {0, 1, 1}, 2, {{"y", {0, 1}}}), DataError);
  x(0, 0) = std::nan("");
  EXPECT_THROW(Dataset(x, {0, 1, 1}, 2), DataError);
}

TEST(Dataset, SubsetKeepsRowsAndLabels) {
  const Dataset d = balanced(6);
  const std::vector<std::size_t> rows{5, 0, 5};
  const Dataset sub = d.subset(rows);
  EXPECT_EQ(sub.size(), 3u);
  EXPECT_EQ(sub.features()(0, 0), 5.0);
  EXPECT_EQ(sub.features()(2, 0), 5.0);
  EXPECT_EQ(sub.label("y")[1], d.label("y")[0]);
  EXPECT_THROW(d.label("nope"), DataError);
}

TEST(Split, SizesAndDisjointness) {
  const Dataset d = balanced(100);
  const auto idx = split_indices(d, {0.6, 7, true});
  EXPECT_EQ(idx.first.size(), 60u);
  EXPECT_EQ(idx.second.size(), 40u);
  std::set<std::size_t> all(idx.first.begin(), idx.first.end());
  for (auto i : idx.second) EXPECT_FALSE(all.contains(i));
  all.insert(idx.second.begin(), idx.second.end());
  EXPECT_EQ(all.size(), 100u);
}

TEST(Split, Deterministic) {
  const Dataset d = balanced(100);
  const auto a = split_indices(d, {0.6, 7, true});
  const auto b = split_indices(d, {0.6, 7, true});
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  const auto c = split_indices(d, {0.6, 8, true});
  EXPECT_NE(a.first, c.first);
}

TEST(Split, StratifiedBalanceWithinOneRow) {
  const Dataset d = balanced(100);
  auto [dc, df] = split_candidate_fairness(d, {0.6, 7, true});
  for (const Dataset* part : {&dc, &df}) {
    const auto counts = part->group_counts();
    const double expected = 0.5 * static_cast<double>(part->size());
    EXPECT_LE(std::abs(static_cast<double>(counts[0]) - expected), 1.0);
  }
}

TEST(Split, DisjointForManySpecs) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Dataset d = balanced(60 + rng.below(200), 2 + static_cast<int>(rng.below(2)));
    const SplitSpec spec{0.3 + 0.4 * rng.uniform(), rng.below(1000), rng.uniform() < 0.5};
    const auto idx = split_indices(d, spec);
    std::vector<std::size_t> both;
    std::set_intersection(idx.first.begin(), idx.first.end(), idx.second.begin(), idx.second.end(),
                          std::back_inserter(both));
    EXPECT_TRUE(both.empty());
    EXPECT_EQ(idx.first.size() + idx.second.size(), d.size());
  }
}

TEST(Split, TooFewRowsPerGroupIsError) {
  const Dataset d = balanced(6);
  EXPECT_THROW(split_candidate_fairness(d, {0.9, 1, true}), DataError);
  EXPECT_THROW(split_candidate_fairness(balanced(100), {1.0, 1, true}), DomainError);
}

TEST(Resample, CountsAndIdentityFraction) {
  const Dataset d = balanced(200);
  const std::vector<double> fractions{0.10, 0.15, 0.25, 0.40, 0.65, 1.00};
  const auto trials = resample_trials(d, 10, fractions, 3);
  ASSERT_EQ(trials.size(), 60u);
  for (std::size_t r = 0; r < 10; ++r) {
    const auto& full = trials[r * 6 + 5];
    EXPECT_EQ(full.fraction, 1.0);
    EXPECT_EQ(full.data.size(), 200u);
    const auto& part = trials[r * 6 + 2];
    EXPECT_EQ(part.data.size(), 50u);
    EXPECT_EQ(part.data.features(), full.data.features().topRows(50));
  }
  EXPECT_THROW(resample_trials(d, 1, std::vector<double>{}, 3), DomainError);
  EXPECT_THROW(resample_trials(d, 1, std::vector<double>{1.5}, 3), DomainError);
}

TEST(Resample, BootstrapUniqueShare) {
  Matrix x(1000, 1);
  std::vector<int> s(1000);
  for (int i = 0; i < 1000; ++i) {
    x(i, 0) = i;
    s[static_cast<std::size_t>(i)] = i % 2;
  }
  const Dataset d(x, s, 2);
  double share = 0.0;
  constexpr int seeds = 200;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto t = resample_trials(d, 1, std::vector<double>{1.0}, static_cast<std::uint64_t>(seed));
    std::set<double> uniq(t[0].data.features().data(), t[0].data.features().data() + 1000);
    share += static_cast<double>(uniq.size()) / 1000.0;
  }
  EXPECT_NEAR(share / seeds, 1.0 - std::exp(-1.0), 0.02);
}

TEST(Resample, Deterministic) {
  const Dataset d = balanced(50);
  const auto a = resample_trials(d, 2, std::vector<double>{0.5, 1.0}, 9);
  const auto b = resample_trials(d, 2, std::vector<double>{0.5, 1.0}, 9);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].data.features(), b[i].data.features());
}

TEST(Synthetic, PriorsFollowSpec) {
  SyntheticSpec spec;
  spec.n = 10000;
  spec.priors = {0.5, 0.5};
  spec.seed = 4;
  const Dataset d = generate_synthetic(spec);
  EXPECT_NEAR(d.group_priors()[1], 0.5, 0.02);
  EXPECT_TRUE(d.binary_features());
  EXPECT_TRUE(d.has_label("y"));
}

TEST(Synthetic, DeterministicPerSeed) {
  SyntheticSpec spec;
  spec.n = 100;
  spec.seed = 5;
  EXPECT_EQ(generate_synthetic(spec).features(), generate_synthetic(spec).features());
  SyntheticSpec other = spec;
  other.seed = 6;
  EXPECT_NE(generate_synthetic(spec).features(), generate_synthetic(other).features());
}

TEST(Synthetic, RejectsBadSpec) {
  SyntheticSpec spec;
  spec.num_groups = 1;
  EXPECT_THROW(generate_synthetic(spec), DomainError);
  spec = {};
  spec.d = 0;
  EXPECT_THROW(generate_synthetic(spec), DomainError);
  spec = {};
  spec.leakage = 1.5;
  EXPECT_THROW(generate_synthetic(spec), DomainError);
}

double probe_auc(double leakage, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n = 5000;
  spec.d = 10;
  spec.leakage = leakage;
  spec.structure_seed = seed;
  spec.seed = derive_seed(seed, 1);
  const Dataset train = generate_synthetic(spec);
  spec.seed = derive_seed(seed, 2);
  const Dataset test = generate_synthetic(spec);
  DownstreamConfig cfg;
  cfg.epochs = 10;
  cfg.step_size = 1e-2;
  cfg.seed = seed;
  const auto probe = train_downstream(train.features(), train.sensitive(), cfg);
  const Vector scores = probe.scores(test.features());
  return auc(std::span(scores.data(), static_cast<std::size_t>(scores.size())), test.sensitive());
}

TEST(Synthetic, NoLeakageMeansUnpredictableGroup) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_LE(probe_auc(0.0, seed), 0.55) << seed;
}

TEST(Synthetic, FullLeakageMeansPredictableGroup) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_GE(probe_auc(1.0, seed), 0.95) << seed;
}

TEST(Synthetic, NoLeakagePermutationTest) {
  // Difference of group means on feature 0 against its permutation distribution.
  SyntheticSpec spec;
  spec.n = 2000;
  spec.d = 3;
  spec.seed = 12;
  const Dataset d = generate_synthetic(spec);
  auto gap = [&](const std::vector<int>& s) {
    double a = 0, na = 0, b = 0, nb = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double v = d.features()(static_cast<Eigen::Index>(i), 0);
      if (s[i] == 0) { a += v; na += 1; } else { b += v; nb += 1; }
    }
    return std::abs(a / na - b / nb);
  };
  const double observed = gap(d.sensitive());
  std::vector<int> perm = d.sensitive();
  Rng rng(1);
  int above = 0;
  constexpr int reps = 500;
  for (int r = 0; r < reps; ++r) {
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    if (gap(perm) >= observed) ++above;
  }
  EXPECT_GT(static_cast<double>(above) / reps, 0.01);
}

}  // namespace
