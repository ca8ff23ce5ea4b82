#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "frg/data.hpp"
#include "frg/neural.hpp"

namespace frg {

enum class Likelihood { bernoulli, gaussian };

struct RepresentationArch {
  int latent_dim = 32;
  std::vector<int> encoder_hidden{64};
  std::vector<int> decoder_hidden{64};
  nn::Activation hidden_activation = nn::Activation::tanh;
  /// Bernoulli for {0,1} features; unit-variance Gaussian for continuous ones.
  Likelihood likelihood = Likelihood::bernoulli;
  double init_scale = 1.0;
};

/// Per-example diagonal Gaussian q(z | x, s); one row per example.
struct GaussianPosterior {
  Matrix mu;
  Matrix logvar;
};

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;

/// Gaussian encoder q_phi(z | x, s) and decoder p_theta(x | z, s).
/// Encoder input is [x, onehot(s)] -> [mu, logvar]; decoder input is
/// [z, onehot(s)] -> per-feature logits (or means for the Gaussian likelihood).
class RepresentationModel {
 public:
  RepresentationModel() = default;
  RepresentationModel(int input_dim, int num_groups, RepresentationArch arch, std::uint64_t seed);
  RepresentationModel(int input_dim, int num_groups, RepresentationArch arch, nn::Mlp encoder,
                      nn::Mlp decoder);

  int input_dim() const noexcept { return input_dim_; }
  int num_groups() const noexcept { return num_groups_; }
  int latent_dim() const noexcept { return arch_.latent_dim; }
  const RepresentationArch& arch() const noexcept { return arch_; }

  const nn::Mlp& encoder() const noexcept { return encoder_; }
  const nn::Mlp& decoder() const noexcept { return decoder_; }
  nn::Mlp& encoder() noexcept { return encoder_; }
  nn::Mlp& decoder() noexcept { return decoder_; }

  /// Encoder tensors followed by decoder tensors.
  std::vector<nn::ParamTensor*> parameter_ptrs();
  std::vector<nn::ParamTensor> all_params() const;

  GaussianPosterior encode(const Matrix& x, std::span<const int> s) const;
  Matrix decode_logits(const Matrix& z, std::span<const int> s) const;

 private:
  int input_dim_ = 0;
  int num_groups_ = 0;
  RepresentationArch arch_;
  nn::Mlp encoder_;
  nn::Mlp decoder_;
};

Matrix one_hot(std::span<const int> s, int num_groups);

/// z = mu + exp(logvar / 2) * noise.
Matrix reparameterize(const GaussianPosterior& post, const Matrix& noise);

/// Per-example KL(q || N(0, I)) = 1/2 sum_j (mu^2 + exp(logvar) - 1 - logvar).
Vector kl_to_prior(const GaussianPosterior& post);

/// Per-example log-likelihood of x under the given decoder outputs.
Vector log_likelihood(Likelihood lik, const Matrix& x, const Matrix& logits);

/// Per-example log p_theta(x | z, s). Throws frg::DataError when the Bernoulli
/// likelihood meets non-binary features.
Vector reconstruction_log_prob(const RepresentationModel& model, const Matrix& x, const Matrix& z,
                               std::span<const int> s);

struct I1Estimate {
  double mean = 0.0;
  std::vector<double> per_example;
};

/// Per-example KL of the encoder posterior to the prior; the mean estimates the
/// mutual-information upper bound I~1(Z;S). Processed in index-ordered chunks.
I1Estimate estimate_I1(const RepresentationModel& model, const Dataset& data,
                       std::size_t chunk_rows = 32768);

/// Penalty on the per-example KL values of a batch:
///   C = mean(g) + std_factor * sd(g) + offset,  g_i = kl_i - threshold,
/// with sd the Bessel-corrected batch standard deviation.
struct ConstraintTerm {
  bool active = false;
  double threshold = 0.0;
  double std_factor = 0.0;
  double offset = 0.0;

  double value(std::span<const double> kl) const;
};

struct ObjectiveValue {
  double loss = 0.0;            // mean(-recon + kl) + lambda * constraint
  double reconstruction = 0.0;  // mean log-likelihood
  double kl = 0.0;              // mean KL
  double constraint = 0.0;
};

/// Evaluates the (negative ELBO + lambda * constraint) objective on a batch with
/// fixed reparameterization noise. With `accumulate_grads`, adds analytic
/// gradients into the model's parameter grads (callers zero them first).
ObjectiveValue batch_objective(RepresentationModel& model, const Matrix& x, std::span<const int> s,
                               const Matrix& noise, const ConstraintTerm& constraint, double lambda,
                               bool accumulate_grads);

struct TrainConfig {
  int epochs = 20;
  int batch_size = 256;
  double step_size = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double objective = 0.0;  // average batch loss over the epoch
  double elbo = 0.0;       // average batch ELBO over the epoch
  double constraint = 0.0; // full-data constraint value (NaN when unconstrained)
  double lambda = 0.0;     // multiplier in force during the epoch
};

/// Multiplier schedule: fixed when lambda_step == 0, otherwise projected dual ascent
/// lambda <- max(0, lambda + lambda_step * full_constraint(model)) after each epoch.
struct LagrangeSchedule {
  double lambda_init = 0.0;
  double lambda_step = 0.0;
  /// Full-data constraint evaluated after each epoch; may be empty.
  std::function<double(const RepresentationModel&)> full_constraint;
};

/// Mini-batch training of the (optionally constrained) objective. RNG consumption
/// (shuffles and noise) does not depend on the constraint, so runs with lambda = 0
/// follow the unconstrained trajectory exactly.
std::vector<EpochRecord> train_representation(RepresentationModel& model, const Dataset& data,
                                              const TrainConfig& train,
                                              const ConstraintTerm& batch_term,
                                              const LagrangeSchedule& schedule);

struct VaeResult {
  RepresentationModel model;
  std::vector<EpochRecord> trace;
};

/// Unconstrained VAE baseline.
VaeResult vae_train(const Dataset& data, const RepresentationArch& arch, const TrainConfig& train);

/// Mean ELBO over a dataset with noise drawn from `seed`.
double mean_elbo(const RepresentationModel& model, const Dataset& data, std::uint64_t seed);

}  // namespace frg
