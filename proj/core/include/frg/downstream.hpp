#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "frg/data.hpp"
#include "frg/neural.hpp"
#include "frg/representation.hpp"

namespace frg {

enum class EmbedMode { mean, sample };

/// Representations of every row: posterior means, or one reparameterized draw per
/// row (noise from `seed`).
Matrix embed(const RepresentationModel& model, const Dataset& data, EmbedMode mode,
             std::uint64_t seed = 0);

struct DownstreamConfig {
  int hidden = 32;
  nn::Activation activation = nn::Activation::relu;
  int epochs = 20;
  int batch_size = 256;
  double step_size = 1e-3;
  /// Predict 1 iff sigmoid(score) >= threshold.
  double threshold = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One-hidden-layer classifier on representations.
class DownstreamModel {
 public:
  DownstreamModel(nn::Mlp net, double threshold);

  /// Raw scores (logits), one per row.
  Vector scores(const Matrix& z) const;
  std::vector<int> predict(const Matrix& z) const;

  const nn::Mlp& network() const noexcept { return net_; }
  double threshold() const noexcept { return threshold_; }

 private:
  nn::Mlp net_;
  double threshold_;
};

/// Minimises binary cross-entropy with Adam. Throws frg::DataError on a
/// single-class label vector or mismatched lengths.
DownstreamModel train_downstream(const Matrix& z, std::span<const int> y,
                                 const DownstreamConfig& config);

/// max over group pairs of |Pr(yhat = 1 | S = a) - Pr(yhat = 1 | S = b)|.
/// Throws frg::DataError when some group has no rows.
double delta_dp(std::span<const int> predictions, std::span<const int> sensitive, int num_groups);
double delta_dp(const DownstreamModel& model, const Matrix& z, std::span<const int> sensitive,
                int num_groups);

/// Rank-based AUC with midranks for ties. Throws frg::DataError unless both classes occur.
double auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace frg
