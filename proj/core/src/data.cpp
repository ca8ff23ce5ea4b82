#include "frg/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "frg/error.hpp"
#include "frg/rng.hpp"

namespace frg {

std::vector<double> compute_group_priors(std::span<const int> sensitive, int num_groups) {
  std::vector<double> priors(static_cast<std::size_t>(num_groups), 0.0);
  for (int s : sensitive) priors[static_cast<std::size_t>(s)] += 1.0;
  for (double& p : priors) p /= static_cast<double>(sensitive.size());
  return priors;
}

Dataset::Dataset(Matrix features, std::vector<int> sensitive, int num_groups,
                 std::map<std::string, std::vector<int>> labels,
                 std::vector<std::string> feature_names)
    : features_(std::move(features)),
      sensitive_(std::move(sensitive)),
      num_groups_(num_groups),
      labels_(std::move(labels)),
      feature_names_(std::move(feature_names)) {
  if (num_groups_ < 2) throw DataError("need at least two sensitive groups");
  if (sensitive_.empty()) throw DataError("dataset has no rows");
  if (static_cast<std::size_t>(features_.rows()) != sensitive_.size()) {
    throw DataError("feature rows and sensitive column disagree in length");
  }
  if (!feature_names_.empty() && feature_names_.size() != static_cast<std::size_t>(dim())) {
    throw DataError("feature name count does not match feature dimension");
  }
  for (std::size_t i = 0; i < sensitive_.size(); ++i) {
    if (sensitive_[i] < 0 || sensitive_[i] >= num_groups_) {
      throw DataError("sensitive value out of range", i + 1);
    }
  }
  for (const auto& [task, y] : labels_) {
    if (y.size() != sensitive_.size()) throw DataError("label '" + task + "' has wrong length");
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] != 0 && y[i] != 1) throw DataError("label '" + task + "' is not binary", i + 1);
    }
  }
  if (!features_.allFinite()) throw DataError("features contain non-finite values");
  priors_ = compute_group_priors(sensitive_, num_groups_);
  for (int k = 0; k < num_groups_; ++k) {
    if (priors_[static_cast<std::size_t>(k)] == 0.0) {
      throw DataError("sensitive group " + std::to_string(k) + " has no rows");
    }
  }
  binary_ = ((features_.array() == 0.0) || (features_.array() == 1.0)).all();
}

const std::vector<int>& Dataset::label(const std::string& task) const {
  auto it = labels_.find(task);
  if (it == labels_.end()) throw DataError("dataset has no label '" + task + "'");
  return it->second;
}

std::vector<std::string> Dataset::task_names() const {
  std::vector<std::string> out;
  for (const auto& [task, _] : labels_) out.push_back(task);
  return out;
}

std::vector<std::size_t> Dataset::group_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_groups_), 0);
  for (int s : sensitive_) ++counts[static_cast<std::size_t>(s)];
  return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Matrix x(static_cast<Eigen::Index>(rows.size()), features_.cols());
  std::vector<int> s(rows.size());
  std::map<std::string, std::vector<int>> labels;
  for (const auto& [task, _] : labels_) labels[task].resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    if (r >= size()) throw DataError("subset row index out of range");
    x.row(static_cast<Eigen::Index>(i)) = features_.row(static_cast<Eigen::Index>(r));
    s[i] = sensitive_[r];
    for (const auto& [task, y] : labels_) labels[task][i] = y[r];
  }
  return Dataset(std::move(x), std::move(s), num_groups_, std::move(labels), feature_names_);
}

namespace {

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

SplitIndices split_indices(const Dataset& d, const SplitSpec& spec) {
  if (!(spec.candidate_fraction > 0.0 && spec.candidate_fraction < 1.0)) {
    throw DomainError("candidate_fraction must lie in (0, 1)");
  }
  if (d.size() < 4) throw DataError("need at least 4 rows to split");
  Rng rng(spec.seed);
  SplitIndices out;
  auto take = [&](std::vector<std::size_t> pool) {
    shuffle(pool, rng);
    const auto k = static_cast<std::size_t>(
        std::llround(spec.candidate_fraction * static_cast<double>(pool.size())));
    out.first.insert(out.first.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    out.second.insert(out.second.end(), pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end());
  };
  if (spec.stratify_on_sensitive) {
    std::vector<std::vector<std::size_t>> by_group(static_cast<std::size_t>(d.num_groups()));
    for (std::size_t i = 0; i < d.size(); ++i) {
      by_group[static_cast<std::size_t>(d.sensitive()[i])].push_back(i);
    }
    for (auto& g : by_group) take(std::move(g));
  } else {
    std::vector<std::size_t> all(d.size());
    std::iota(all.begin(), all.end(), 0);
    take(std::move(all));
  }
  std::sort(out.first.begin(), out.first.end());
  std::sort(out.second.begin(), out.second.end());

  auto check = [&](const std::vector<std::size_t>& part, const char* which) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(d.num_groups()), 0);
    for (std::size_t i : part) ++counts[static_cast<std::size_t>(d.sensitive()[i])];
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] < 2) {
        throw DataError(std::string(which) + " split has fewer than 2 rows of group " +
                        std::to_string(k));
      }
    }
  };
  check(out.first, "first");
  check(out.second, "second");
  return out;
}

std::pair<Dataset, Dataset> split_candidate_fairness(const Dataset& d, const SplitSpec& spec) {
  const auto idx = split_indices(d, spec);
  return {d.subset(idx.first), d.subset(idx.second)};
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& d, double test_fraction,
                                          std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DomainError("test_fraction must lie in (0, 1)");
  }
  return split_candidate_fairness(d, SplitSpec{1.0 - test_fraction, seed, true});
}

std::vector<ResampledDataset> resample_trials(const Dataset& d, std::size_t n_resamples,
                                              std::span<const double> fractions,
                                              std::uint64_t seed) {
  if (fractions.empty()) throw DomainError("resample_trials: empty fraction list");
  if (n_resamples < 1) throw DomainError("resample_trials: need at least one resample");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw DomainError("fractions must lie in (0, 1]");
  }
  const std::size_t n = d.size();
  std::vector<ResampledDataset> out;
  out.reserve(n_resamples * fractions.size());
  for (std::size_t r = 0; r < n_resamples; ++r) {
    Rng rng(derive_seed(seed, r));
    std::vector<std::size_t> rows(n);
    for (auto& row : rows) row = rng.below(n);
    for (double f : fractions) {
      const auto k = static_cast<std::size_t>(std::floor(f * static_cast<double>(n)));
      out.push_back({r, f, d.subset(std::span(rows).first(k))});
    }
  }
  return out;
}

void SyntheticSpec::validate() const {
  if (num_groups < 2) throw DomainError("synthetic data needs K >= 2");
  if (d < 1) throw DomainError("synthetic data needs d >= 1");
  if (n < 1) throw DomainError("synthetic data needs n >= 1");
  if (!(leakage >= 0.0 && leakage <= 1.0)) throw DomainError("leakage must lie in [0, 1]");
  if (!priors.empty()) {
    if (priors.size() != static_cast<std::size_t>(num_groups)) {
      throw DomainError("need one prior per group");
    }
    double total = 0.0;
    for (double p : priors) {
      if (!(p > 0.0)) throw DomainError("synthetic priors must be positive");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DomainError("synthetic priors must sum to 1");
  }
  if (!label_weights.empty() && label_weights.size() != static_cast<std::size_t>(d)) {
    throw DomainError("need one label weight per feature");
  }
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto K = static_cast<std::size_t>(spec.num_groups);
  const auto d = static_cast<Eigen::Index>(spec.d);

  Rng structure(derive_seed(spec.structure_seed, 0x5eed));
  Matrix offsets(static_cast<Eigen::Index>(K), d);
  for (Eigen::Index k = 0; k < offsets.rows(); ++k) {
    for (Eigen::Index j = 0; j < d; ++j) offsets(k, j) = spec.offset_scale * structure.normal();
  }
  Vector w(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    w(j) = spec.label_weights.empty() ? structure.normal()
                                      : spec.label_weights[static_cast<std::size_t>(j)];
  }

  std::vector<double> cumulative(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double p = spec.priors.empty() ? 1.0 / static_cast<double>(K) : spec.priors[k];
    cumulative[k] = (k == 0 ? 0.0 : cumulative[k - 1]) + p;
  }

  Rng rng(spec.seed);
  Matrix x(static_cast<Eigen::Index>(spec.n), d);
  std::vector<int> s(spec.n);
  std::vector<int> y(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double u = rng.uniform() * cumulative.back();
    std::size_t k = 0;
    while (k + 1 < K && u >= cumulative[k]) ++k;
    s[i] = static_cast<int>(k);
    double score = spec.label_bias;
    for (Eigen::Index j = 0; j < d; ++j) {
      double v = rng.normal() + spec.leakage * offsets(static_cast<Eigen::Index>(k), j);
      if (spec.binary_features) v = v > 0.0 ? 1.0 : 0.0;
      x(static_cast<Eigen::Index>(i), j) = v;
      score += w(j) * v;
    }
    y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-score))) ? 1 : 0;
  }

  std::vector<std::string> names;
  for (int j = 0; j < spec.d; ++j) names.push_back("x" + std::to_string(j));
  return Dataset(std::move(x), std::move(s), spec.num_groups, {{"y", std::move(y)}},
                 std::move(names));
}

}  // namespace frg
