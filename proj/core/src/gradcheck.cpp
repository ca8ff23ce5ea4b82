#include "frg/gradcheck.hpp"

#include <cmath>

#include "frg/data.hpp"
#include "frg/error.hpp"
#include "frg/rng.hpp"
#include "frg/stats_bounds.hpp"

namespace frg {

std::vector<RepresentationArch> GradcheckConfig::default_gradcheck_architectures() {
  std::vector<RepresentationArch> out;
  for (auto act : {nn::Activation::tanh, nn::Activation::relu}) {
    for (auto lik : {Likelihood::bernoulli, Likelihood::gaussian}) {
      RepresentationArch a;
      a.latent_dim = 3;
      a.encoder_hidden = {8};
      a.decoder_hidden = {8};
      a.hidden_activation = act;
      a.likelihood = lik;
      out.push_back(a);
    }
  }
  return out;
}

void GradcheckConfig::validate() const {
  if (architectures.empty()) throw ConfigError("gradcheck needs at least one architecture");
  if (seeds == 0) throw ConfigError("gradcheck needs at least one seed");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if (input_dim < 1) throw ConfigError("input_dim must be positive");
  if (batch < 2) throw ConfigError("batch must hold at least 2 rows");
}

nn::GradCheckReport check_objective_gradient(const ObjectiveCheckSpec& spec, const GradientHook& hook) {
  RepresentationModel model(spec.input_dim, 2, spec.arch, spec.seed);
  Rng rng(derive_seed(spec.seed, 9));
  // Zero biases put relu units exactly on their kink for some rows.
  for (auto* p : model.parameter_ptrs()) {
    if (p->name.front() == 'b') {
      for (auto& v : p->values.reshaped()) v = 0.1 * rng.normal();
    }
  }

  SyntheticSpec data_spec;
  data_spec.n = static_cast<std::size_t>(spec.batch);
  data_spec.d = spec.input_dim;
  data_spec.leakage = 1.0;
  data_spec.binary_features = spec.arch.likelihood == Likelihood::bernoulli;
  data_spec.seed = spec.seed;
  const Dataset data = generate_synthetic(data_spec);

  Matrix noise(spec.batch, spec.arch.latent_dim);
  for (auto& v : noise.reshaped()) v = rng.normal();

  ConstraintTerm term;
  double lambda = 0.0;
  if (spec.constrained) {
    ConfidenceBoundSpec bound;
    bound.inflated = true;
    term = {true, 0.05, student_t_width_factor(bound, static_cast<std::size_t>(spec.batch)), -0.01};
    lambda = 3.7;
  }

  auto loss = [&] {
    return batch_objective(model, data.features(), data.sensitive(), noise, term, lambda, false).loss;
  };
  auto ptrs = model.parameter_ptrs();
  auto gradients = [&] {
    for (auto* p : ptrs) p->grad.setZero();
    batch_objective(model, data.features(), data.sensitive(), noise, term, lambda, true);
    if (hook) hook(ptrs);
  };
  return nn::grad_check(loss, gradients, ptrs, spec.tolerance);
}

GradientHook corrupt_first_gradient(double amount) {
  return [amount](std::vector<nn::ParamTensor*>& params) {
    if (!params.empty() && params.front()->grad.size() > 0) params.front()->grad(0, 0) += amount;
  };
}

}  // namespace frg
