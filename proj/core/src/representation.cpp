#include "frg/representation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "frg/error.hpp"
#include "frg/rng.hpp"

namespace frg {

namespace {

nn::MlpConfig make_mlp(int in, const std::vector<int>& hidden, int out, nn::Activation act,
                       double init_scale, std::uint64_t seed) {
  nn::MlpConfig cfg;
  cfg.layer_sizes.push_back(in);
  for (int h : hidden) {
    cfg.layer_sizes.push_back(h);
    cfg.activations.push_back(act);
  }
  cfg.layer_sizes.push_back(out);
  cfg.activations.push_back(nn::Activation::identity);
  cfg.init_scale = init_scale;
  cfg.seed = seed;
  return cfg;
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

double softplus(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }

double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

void check_binary(const Matrix& x) {
  if (!((x.array() == 0.0) || (x.array() == 1.0)).all()) {
    throw DataError(
        "Bernoulli likelihood needs {0,1} features; mark continuous columns in the schema and "
        "use the gaussian likelihood");
  }
}

}  // namespace

RepresentationModel::RepresentationModel(int input_dim, int num_groups, RepresentationArch arch,
                                         std::uint64_t seed)
    : input_dim_(input_dim), num_groups_(num_groups), arch_(std::move(arch)) {
  if (input_dim_ < 1 || num_groups_ < 2 || arch_.latent_dim < 1) {
    throw ConfigError("representation model needs input_dim >= 1, K >= 2, latent_dim >= 1");
  }
  encoder_ = nn::Mlp(make_mlp(input_dim_ + num_groups_, arch_.encoder_hidden, 2 * arch_.latent_dim,
                              arch_.hidden_activation, arch_.init_scale, derive_seed(seed, 1)));
  decoder_ = nn::Mlp(make_mlp(arch_.latent_dim + num_groups_, arch_.decoder_hidden, input_dim_,
                              arch_.hidden_activation, arch_.init_scale, derive_seed(seed, 2)));
}

RepresentationModel::RepresentationModel(int input_dim, int num_groups, RepresentationArch arch,
                                         nn::Mlp encoder, nn::Mlp decoder)
    : input_dim_(input_dim),
      num_groups_(num_groups),
      arch_(std::move(arch)),
      encoder_(std::move(encoder)),
      decoder_(std::move(decoder)) {
  if (encoder_.input_dim() != input_dim_ + num_groups_ ||
      encoder_.output_dim() != 2 * arch_.latent_dim ||
      decoder_.input_dim() != arch_.latent_dim + num_groups_ || decoder_.output_dim() != input_dim_) {
    throw FormatError("encoder/decoder shapes do not match the representation layout");
  }
}

std::vector<nn::ParamTensor*> RepresentationModel::parameter_ptrs() {
  auto out = encoder_.parameter_ptrs();
  auto dec = decoder_.parameter_ptrs();
  out.insert(out.end(), dec.begin(), dec.end());
  return out;
}

std::vector<nn::ParamTensor> RepresentationModel::all_params() const {
  std::vector<nn::ParamTensor> out = encoder_.params();
  out.insert(out.end(), decoder_.params().begin(), decoder_.params().end());
  return out;
}

Matrix one_hot(std::span<const int> s, int num_groups) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(s.size()), num_groups);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < 0 || s[i] >= num_groups) throw DomainError("sensitive value out of range");
    out(static_cast<Eigen::Index>(i), s[i]) = 1.0;
  }
  return out;
}

GaussianPosterior RepresentationModel::encode(const Matrix& x, std::span<const int> s) const {
  if (x.cols() != input_dim_ || static_cast<std::size_t>(x.rows()) != s.size()) {
    throw DomainError("encode: input shape does not match the model");
  }
  const Matrix out = encoder_.forward(concat_cols(x, one_hot(s, num_groups_)));
  const int l = arch_.latent_dim;
  return {out.leftCols(l), out.rightCols(l).cwiseMax(kLogvarMin).cwiseMin(kLogvarMax)};
}

Matrix RepresentationModel::decode_logits(const Matrix& z, std::span<const int> s) const {
  if (z.cols() != arch_.latent_dim || static_cast<std::size_t>(z.rows()) != s.size()) {
    throw DomainError("decode: latent shape does not match the model");
  }
  return decoder_.forward(concat_cols(z, one_hot(s, num_groups_)));
}

Matrix reparameterize(const GaussianPosterior& post, const Matrix& noise) {
  if (noise.rows() != post.mu.rows() || noise.cols() != post.mu.cols()) {
    throw DomainError("reparameterize: noise shape does not match the posterior");
  }
  return post.mu + ((0.5 * post.logvar.array()).exp() * noise.array()).matrix();
}

Vector kl_to_prior(const GaussianPosterior& post) {
  return 0.5 * (post.mu.array().square() + post.logvar.array().exp() - 1.0 - post.logvar.array())
                   .rowwise()
                   .sum()
                   .matrix();
}

Vector log_likelihood(Likelihood lik, const Matrix& x, const Matrix& logits) {
  Vector out(x.rows());
  if (lik == Likelihood::bernoulli) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double a = logits(i, j);
        acc += x(i, j) * a - softplus(a);
      }
      out(i) = acc;
    }
  } else {
    const double c = 0.5 * std::log(2.0 * std::numbers::pi) * static_cast<double>(x.cols());
    out = -0.5 * (x - logits).array().square().rowwise().sum().matrix();
    out.array() -= c;
  }
  return out;
}

Vector reconstruction_log_prob(const RepresentationModel& model, const Matrix& x, const Matrix& z,
                               std::span<const int> s) {
  if (x.cols() != model.input_dim()) throw DomainError("feature dimension does not match the model");
  if (model.arch().likelihood == Likelihood::bernoulli) check_binary(x);
  return log_likelihood(model.arch().likelihood, x, model.decode_logits(z, s));
}

I1Estimate estimate_I1(const RepresentationModel& model, const Dataset& data,
                       std::size_t chunk_rows) {
  if (data.size() == 0) throw DataError("estimate_I1: empty dataset");
  I1Estimate out;
  out.per_example.resize(data.size());
  const Matrix& x = data.features();
  const auto& s = data.sensitive();
  for (std::size_t start = 0; start < data.size(); start += chunk_rows) {
    const std::size_t len = std::min(chunk_rows, data.size() - start);
    const auto post = model.encode(x.middleRows(static_cast<Eigen::Index>(start),
                                                static_cast<Eigen::Index>(len)),
                                   std::span(s).subspan(start, len));
    const Vector kl = kl_to_prior(post);
    for (std::size_t i = 0; i < len; ++i) out.per_example[start + i] = kl(static_cast<Eigen::Index>(i));
  }
  // Sequential sum in index order keeps the mean independent of chunking.
  double total = 0.0;
  for (double v : out.per_example) total += v;
  out.mean = total / static_cast<double>(data.size());
  return out;
}

namespace {

// Bessel-corrected sd of a batch. Spreads at rounding level (identical rows pushed
// through position-dependent GEMM kernels) count as zero, so the bound and the plain
// mean agree exactly on a constant batch.
double batch_sd(std::span<const double> kl, double mean) {
  if (kl.size() < 2) return 0.0;
  double ss = 0.0;
  double scale = 0.0;
  for (double v : kl) {
    ss += (v - mean) * (v - mean);
    scale = std::max(scale, std::abs(v));
  }
  const double sd = std::sqrt(ss / static_cast<double>(kl.size() - 1));
  return sd <= 1024.0 * std::numeric_limits<double>::epsilon() * scale ? 0.0 : sd;
}

}  // namespace

double ConstraintTerm::value(std::span<const double> kl) const {
  if (kl.empty()) return offset;
  const double b = static_cast<double>(kl.size());
  double mean = 0.0;
  for (double v : kl) mean += v;
  mean /= b;
  const double sd = std_factor != 0.0 ? batch_sd(kl, mean) : 0.0;
  return (mean - threshold) + std_factor * sd + offset;
}

ObjectiveValue batch_objective(RepresentationModel& model, const Matrix& x, std::span<const int> s,
                               const Matrix& noise, const ConstraintTerm& constraint, double lambda,
                               bool accumulate_grads) {
  const Eigen::Index b = x.rows();
  const int l = model.latent_dim();
  if (b == 0) throw DomainError("empty batch");
  if (x.cols() != model.input_dim() || static_cast<std::size_t>(b) != s.size()) {
    throw DomainError("batch shape does not match the model");
  }
  if (noise.rows() != b || noise.cols() != l) throw DomainError("noise shape does not match");
  if (model.arch().likelihood == Likelihood::bernoulli) check_binary(x);

  const Matrix s_hot = one_hot(s, model.num_groups());
  nn::Mlp::Cache enc_cache;
  const Matrix enc_out = model.encoder().forward(concat_cols(x, s_hot), enc_cache);
  const Matrix mu = enc_out.leftCols(l);
  const Matrix raw_logvar = enc_out.rightCols(l);
  const Matrix logvar = raw_logvar.cwiseMax(kLogvarMin).cwiseMin(kLogvarMax);
  const Matrix half_std = (0.5 * logvar.array()).exp().matrix();
  const Matrix z = mu + (half_std.array() * noise.array()).matrix();

  nn::Mlp::Cache dec_cache;
  const Matrix logits = model.decoder().forward(concat_cols(z, s_hot), dec_cache);

  const Vector recon = log_likelihood(model.arch().likelihood, x, logits);
  const Vector kl = kl_to_prior({mu, logvar});
  const std::vector<double> kl_values(kl.data(), kl.data() + b);

  const double inv_b = 1.0 / static_cast<double>(b);
  ObjectiveValue out;
  out.reconstruction = recon.mean();
  out.kl = kl.mean();
  out.constraint = constraint.active ? constraint.value(kl_values) : 0.0;
  out.loss = -out.reconstruction + out.kl + (constraint.active ? lambda * out.constraint : 0.0);

  if (!accumulate_grads) return out;

  // d loss / d kl_i
  Vector dkl = Vector::Constant(b, inv_b);
  if (constraint.active && lambda != 0.0) {
    Vector dc = Vector::Constant(b, inv_b);
    if (constraint.std_factor != 0.0) {
      double mean = 0.0;
      for (double v : kl_values) mean += v;
      mean *= inv_b;
      const double sd = batch_sd(kl_values, mean);
      if (sd > 0.0) {
        dc.array() += constraint.std_factor * (kl.array() - mean) / (static_cast<double>(b - 1) * sd);
      }
    }
    dkl += lambda * dc;
  }

  // d loss / d logits
  Matrix dlogits;
  if (model.arch().likelihood == Likelihood::bernoulli) {
    dlogits = logits.unaryExpr([](double a) { return sigmoid(a); }) - x;
  } else {
    dlogits = logits - x;
  }
  dlogits *= inv_b;

  const Matrix ddec_in = model.decoder().backward(dec_cache, dlogits);
  const Matrix dz = ddec_in.leftCols(l);

  Matrix dmu = dz + (mu.array().colwise() * dkl.array()).matrix();
  Matrix dlogvar = (dz.array() * 0.5 * half_std.array() * noise.array()).matrix() +
                   ((0.5 * (logvar.array().exp() - 1.0)).colwise() * dkl.array()).matrix();
  dlogvar = ((raw_logvar.array() > kLogvarMin) && (raw_logvar.array() < kLogvarMax))
                .select(dlogvar, 0.0);

  Matrix denc(b, 2 * l);
  denc << dmu, dlogvar;
  model.encoder().backward(enc_cache, denc);
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(step_size >= nn::Adam::kMinStepSize)) throw ConfigError("step size must be at least 1e-6");
}

std::vector<EpochRecord> train_representation(RepresentationModel& model, const Dataset& data,
                                              const TrainConfig& train,
                                              const ConstraintTerm& batch_term,
                                              const LagrangeSchedule& schedule) {
  train.validate();
  if (data.dim() != model.input_dim() || data.num_groups() != model.num_groups()) {
    throw DataError("dataset does not match the model's input layout");
  }
  if (model.arch().likelihood == Likelihood::bernoulli && !data.binary_features()) {
    check_binary(data.features());
  }
  if (!(schedule.lambda_init >= 0.0) || !(schedule.lambda_step >= 0.0)) {
    throw ConfigError("lambda_init and lambda_step must be nonnegative");
  }

  Rng rng(train.seed);
  nn::Adam adam({.step_size = train.step_size});
  auto params = model.parameter_ptrs();
  double lambda = schedule.lambda_init;
  const std::size_t n = data.size();
  const auto bs = static_cast<std::size_t>(train.batch_size);
  const int l = model.latent_dim();

  std::vector<std::size_t> order(n);
  std::vector<EpochRecord> trace;
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double loss_sum = 0.0;
    double elbo_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += bs) {
      const auto rows = std::span(order).subspan(start, std::min(bs, n - start));
      const Matrix xb = gather_rows(data.features(), rows);
      std::vector<int> sb(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) sb[i] = data.sensitive()[rows[i]];
      Matrix noise(xb.rows(), l);
      for (Eigen::Index c = 0; c < noise.cols(); ++c) {
        for (Eigen::Index r = 0; r < noise.rows(); ++r) noise(r, c) = rng.normal();
      }

      for (auto* p : params) p->grad.setZero();
      const auto obj = batch_objective(model, xb, sb, noise, batch_term, lambda, true);
      if (!std::isfinite(obj.loss)) {
        throw NonFiniteError("non-finite loss at epoch " + std::to_string(epoch) + " (recon " +
                             std::to_string(obj.reconstruction) + ", kl " + std::to_string(obj.kl) +
                             ", lambda " + std::to_string(lambda) + ")");
      }
      adam.step(params);
      loss_sum += obj.loss;
      elbo_sum += obj.reconstruction - obj.kl;
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lambda = lambda;
    rec.objective = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    rec.elbo = batches ? elbo_sum / static_cast<double>(batches) : 0.0;
    rec.constraint = std::numeric_limits<double>::quiet_NaN();
    if (schedule.full_constraint) {
      rec.constraint = schedule.full_constraint(model);
      if (schedule.lambda_step > 0.0) {
        lambda = std::max(0.0, lambda + schedule.lambda_step * rec.constraint);
        if (!std::isfinite(lambda) || lambda > 1e12) {
          throw NonFiniteError("Lagrange multiplier diverged at epoch " + std::to_string(epoch));
        }
      }
    }
    trace.push_back(rec);
  }
  return trace;
}

VaeResult vae_train(const Dataset& data, const RepresentationArch& arch, const TrainConfig& train) {
  VaeResult out{RepresentationModel(data.dim(), data.num_groups(), arch, derive_seed(train.seed, 0x1417)),
                {}};
  out.trace = train_representation(out.model, data, train, ConstraintTerm{}, LagrangeSchedule{});
  return out;
}

double mean_elbo(const RepresentationModel& model, const Dataset& data, std::uint64_t seed) {
  Rng rng(seed);
  const auto post = model.encode(data.features(), data.sensitive());
  Matrix noise(post.mu.rows(), post.mu.cols());
  for (Eigen::Index c = 0; c < noise.cols(); ++c) {
    for (Eigen::Index r = 0; r < noise.rows(); ++r) noise(r, c) = rng.normal();
  }
  const Matrix z = reparameterize(post, noise);
  const Vector recon = reconstruction_log_prob(model, data.features(), z, data.sensitive());
  return (recon - kl_to_prior(post)).mean();
}

}  // namespace frg
