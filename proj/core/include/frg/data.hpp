#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "frg/neural.hpp"

namespace frg {

/// Immutable table of features X, sensitive attribute S in {0..K-1} and
/// optional binary labels keyed by task name.
class Dataset {
 public:
  Dataset() = default;
  /// Throws frg::DataError when shapes disagree, a sensitive value is out of
  /// range, a label is not binary, or some group has no rows.
  Dataset(Matrix features, std::vector<int> sensitive, int num_groups,
          std::map<std::string, std::vector<int>> labels = {},
          std::vector<std::string> feature_names = {});

  std::size_t size() const noexcept { return sensitive_.size(); }
  int dim() const noexcept { return static_cast<int>(features_.cols()); }
  int num_groups() const noexcept { return num_groups_; }

  const Matrix& features() const noexcept { return features_; }
  const std::vector<int>& sensitive() const noexcept { return sensitive_; }
  const std::map<std::string, std::vector<int>>& labels() const noexcept { return labels_; }
  bool has_label(const std::string& task) const { return labels_.contains(task); }
  /// Throws frg::DataError for an unknown task.
  const std::vector<int>& label(const std::string& task) const;
  std::vector<std::string> task_names() const;
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

  /// Empirical Pr(S = k); each entry > 0, summing to 1.
  const std::vector<double>& group_priors() const noexcept { return priors_; }
  std::vector<std::size_t> group_counts() const;
  /// True when every feature value is exactly 0 or 1.
  bool binary_features() const noexcept { return binary_; }

  /// Rows in the given order (repeats allowed).
  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  Matrix features_;
  std::vector<int> sensitive_;
  int num_groups_ = 0;
  std::map<std::string, std::vector<int>> labels_;
  std::vector<std::string> feature_names_;
  std::vector<double> priors_;
  bool binary_ = true;
};

/// Empirical group priors of a sensitive column.
std::vector<double> compute_group_priors(std::span<const int> sensitive, int num_groups);

struct SplitSpec {
  /// Share of rows sent to candidate selection; the rest go to the fairness test.
  double candidate_fraction = 0.6;
  std::uint64_t seed = 0;
  bool stratify_on_sensitive = true;
};

struct SplitIndices {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
};

/// Row indices of the split, each part in ascending order.
SplitIndices split_indices(const Dataset& d, const SplitSpec& spec);

/// Disjoint (D_c, D_f) partition. Throws frg::DataError when either part would
/// hold fewer than 2 rows of some group.
std::pair<Dataset, Dataset> split_candidate_fairness(const Dataset& d, const SplitSpec& spec);

/// Stratified (train, test) hold-out with `test_fraction` of rows in test.
std::pair<Dataset, Dataset> split_holdout(const Dataset& d, double test_fraction,
                                          std::uint64_t seed);

struct ResampledDataset {
  std::size_t resample = 0;
  double fraction = 1.0;
  Dataset data;
};

/// n_resamples bootstrap resamples (size n, with replacement); each is cut to its
/// first floor(f * n) rows for every fraction f. Resample-major order.
std::vector<ResampledDataset> resample_trials(const Dataset& d, std::size_t n_resamples,
                                              std::span<const double> fractions,
                                              std::uint64_t seed);

struct SyntheticSpec {
  std::size_t n = 1000;
  int d = 10;
  int num_groups = 2;
  /// Target Pr(S = k); empty means uniform.
  std::vector<double> priors;
  /// 0 gives X independent of S; 1 applies the full group offsets.
  double leakage = 0.0;
  /// Standard deviation of the per-group feature offsets.
  double offset_scale = 2.0;
  /// Labeler y ~ Bernoulli(sigmoid(w . x + b)); empty weights are drawn from the
  /// structure stream.
  std::vector<double> label_weights;
  double label_bias = 0.0;
  /// Threshold features at zero into {0, 1}; otherwise keep them continuous.
  bool binary_features = true;
  /// Fixes the population (offsets, label weights); `seed` fixes the sample.
  std::uint64_t structure_seed = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Generative process: S ~ Categorical(priors); u ~ N(0, I_d);
/// x = u + leakage * offset[S] (thresholded at 0 when binary);
/// y = Bernoulli(sigmoid(w . x + b)) stored under task "y".
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace frg
