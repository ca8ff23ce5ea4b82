#include "frg/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "frg/error.hpp"
#include "frg/rng.hpp"

namespace frg {

Matrix embed(const RepresentationModel& model, const Dataset& data, EmbedMode mode,
             std::uint64_t seed) {
  const auto post = model.encode(data.features(), data.sensitive());
  if (mode == EmbedMode::mean) return post.mu;
  Rng rng(seed);
  Matrix noise(post.mu.rows(), post.mu.cols());
  for (Eigen::Index r = 0; r < noise.rows(); ++r) {
    for (Eigen::Index c = 0; c < noise.cols(); ++c) noise(r, c) = rng.normal();
  }
  return reparameterize(post, noise);
}

void DownstreamConfig::validate() const {
  if (hidden < 1) throw ConfigError("downstream hidden size must be positive");
  if (epochs < 0) throw ConfigError("downstream epochs must be nonnegative");
  if (batch_size < 1) throw ConfigError("downstream batch_size must be positive");
  if (!(step_size >= nn::Adam::kMinStepSize)) throw ConfigError("downstream step size below 1e-6");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("decision threshold must lie in (0, 1)");
}

DownstreamModel::DownstreamModel(nn::Mlp net, double threshold)
    : net_(std::move(net)), threshold_(threshold) {
  if (net_.output_dim() != 1) throw DomainError("downstream network must have one output");
  if (!(threshold_ > 0.0 && threshold_ < 1.0)) throw DomainError("threshold must lie in (0, 1)");
}

Vector DownstreamModel::scores(const Matrix& z) const { return net_.forward(z).col(0); }

std::vector<int> DownstreamModel::predict(const Matrix& z) const {
  const Vector s = scores(z);
  // sigmoid(s) >= t  <=>  s >= logit(t)
  const double cut = std::log(threshold_ / (1.0 - threshold_));
  std::vector<int> out(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = s(i) >= cut ? 1 : 0;
  return out;
}

DownstreamModel train_downstream(const Matrix& z, std::span<const int> y,
                                 const DownstreamConfig& config) {
  config.validate();
  if (static_cast<std::size_t>(z.rows()) != y.size()) {
    throw DataError("representation rows and labels disagree in length");
  }
  const auto positives = std::count(y.begin(), y.end(), 1);
  if (positives == 0 || static_cast<std::size_t>(positives) == y.size()) {
    throw DataError("downstream labels contain a single class");
  }
  nn::Mlp net({.layer_sizes = {static_cast<int>(z.cols()), config.hidden, 1},
               .activations = {config.activation, nn::Activation::identity},
               .init_scale = 1.0,
               .seed = derive_seed(config.seed, 1)});
  nn::Adam adam({.step_size = config.step_size});
  auto params = net.parameter_ptrs();
  Rng rng(derive_seed(config.seed, 2));

  const std::size_t n = y.size();
  const auto bs = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t len = std::min(bs, n - start);
      Matrix zb(static_cast<Eigen::Index>(len), z.cols());
      Vector yb(static_cast<Eigen::Index>(len));
      for (std::size_t i = 0; i < len; ++i) {
        zb.row(static_cast<Eigen::Index>(i)) = z.row(static_cast<Eigen::Index>(order[start + i]));
        yb(static_cast<Eigen::Index>(i)) = y[order[start + i]];
      }
      nn::Mlp::Cache cache;
      const Matrix logits = net.forward(zb, cache);
      // d BCE / d logit = sigmoid(logit) - y, averaged over the batch
      Matrix grad = (1.0 / (1.0 + (-logits.array()).exp())).matrix() - yb;
      grad /= static_cast<double>(len);
      net.zero_grad();
      net.backward(cache, grad);
      adam.step(params);
    }
  }
  return DownstreamModel(std::move(net), config.threshold);
}

double delta_dp(std::span<const int> predictions, std::span<const int> sensitive, int num_groups) {
  if (predictions.size() != sensitive.size()) throw DataError("predictions and groups disagree in length");
  std::vector<double> pos(static_cast<std::size_t>(num_groups), 0.0);
  std::vector<double> count(static_cast<std::size_t>(num_groups), 0.0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int g = sensitive[i];
    if (g < 0 || g >= num_groups) throw DataError("sensitive value out of range", i + 1);
    count[static_cast<std::size_t>(g)] += 1.0;
    pos[static_cast<std::size_t>(g)] += predictions[i] == 1 ? 1.0 : 0.0;
  }
  double lo = 1.0;
  double hi = 0.0;
  for (std::size_t g = 0; g < count.size(); ++g) {
    if (count[g] == 0.0) throw DataError("sensitive group " + std::to_string(g) + " is absent");
    const double rate = pos[g] / count[g];
    lo = std::min(lo, rate);
    hi = std::max(hi, rate);
  }
  return hi - lo;
}

double delta_dp(const DownstreamModel& model, const Matrix& z, std::span<const int> sensitive,
                int num_groups) {
  return delta_dp(model.predict(z), sensitive, num_groups);
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DataError("scores and labels disagree in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum += midrank;
        n_pos += 1.0;
      }
    }
    i = j + 1;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) throw DataError("AUC needs both classes");
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

}  // namespace frg
