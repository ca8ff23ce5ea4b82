#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "frg/neural.hpp"
#include "frg/representation.hpp"

namespace frg {

/// Finite-difference check of the training objective for one architecture.
struct ObjectiveCheckSpec {
  RepresentationArch arch;
  int input_dim = 6;
  int batch = 10;
  /// Include the constraint term (std_factor for a 1 - 0.1 bound at `batch`
  /// samples, multiplier 3.7) on top of the ELBO.
  bool constrained = false;
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
};

/// Batch of checks run by the `gradcheck` command: every architecture, both
/// objectives, seeds first_seed .. first_seed + seeds - 1.
struct GradcheckConfig {
  std::vector<RepresentationArch> architectures = default_gradcheck_architectures();
  std::size_t seeds = 20;
  std::uint64_t first_seed = 0;
  double tolerance = 1e-4;
  int input_dim = 6;
  int batch = 10;

  /// Small tanh and relu nets under both likelihoods.
  static std::vector<RepresentationArch> default_gradcheck_architectures();
  void validate() const;
};

/// Called after analytic gradients are filled; lets callers tamper with them.
using GradientHook = std::function<void(std::vector<nn::ParamTensor*>&)>;

/// Random nonzero biases, synthetic batch, fixed reparameterization noise.
nn::GradCheckReport check_objective_gradient(const ObjectiveCheckSpec& spec,
                                             const GradientHook& hook = {});

/// Adds `amount` to the first gradient coordinate of the first tensor.
GradientHook corrupt_first_gradient(double amount = 1e-2);

}  // namespace frg
