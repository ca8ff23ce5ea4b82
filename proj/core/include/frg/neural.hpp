#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace frg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

}  // namespace frg

namespace frg::nn {

enum class Activation { relu, tanh, sigmoid, identity };

std::string to_string(Activation a);
/// Throws frg::ConfigError on unknown names.
Activation activation_from_string(const std::string& name);

/// Named parameter storage with a gradient buffer of the same shape.
struct ParamTensor {
  std::string name;
  Matrix values;
  Matrix grad;

  ParamTensor() = default;
  ParamTensor(std::string n, Matrix v)
      : name(std::move(n)), values(std::move(v)), grad(Matrix::Zero(values.rows(), values.cols())) {}

  bool all_finite() const { return values.allFinite(); }
};

struct MlpConfig {
  std::vector<int> layer_sizes;
  std::vector<Activation> activations;
  double init_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Fully connected network; rows of the input matrix are examples.
/// Layer i computes act_i(x W_i + b_i) with W_i of shape (in, out).
class Mlp {
 public:
  struct Cache {
    std::vector<Matrix> inputs;       // input to each layer
    std::vector<Matrix> activations;  // output of each layer
    std::uint64_t generation = 0;

    const Matrix& output() const { return activations.back(); }
  };

  Mlp() = default;
  /// Weights ~ U(-s/sqrt(fan_in), s/sqrt(fan_in)) with s = init_scale; biases zero.
  explicit Mlp(MlpConfig cfg);
  /// Rebuilds from stored tensors (e.g. a deserialized model).
  Mlp(MlpConfig cfg, std::vector<ParamTensor> params);

  const MlpConfig& config() const noexcept { return cfg_; }
  int input_dim() const { return cfg_.layer_sizes.front(); }
  int output_dim() const { return cfg_.layer_sizes.back(); }
  std::size_t num_layers() const { return cfg_.activations.size(); }

  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, Cache& cache) const;

  /// Accumulates parameter gradients for d(loss)/d(output) = `upstream` and
  /// returns d(loss)/d(input). Throws when `cache` predates a parameter change.
  Matrix backward(const Cache& cache, const Matrix& upstream);

  void zero_grad();

  const std::vector<ParamTensor>& params() const noexcept { return params_; }
  /// Mutable access; invalidates outstanding caches.
  std::vector<ParamTensor>& mutable_params() noexcept {
    ++generation_;
    return params_;
  }
  /// Pointers for the optimizer; invalidates outstanding caches.
  std::vector<ParamTensor*> parameter_ptrs();

  const Matrix& weight(std::size_t layer) const { return params_[2 * layer].values; }
  const Matrix& bias(std::size_t layer) const { return params_[2 * layer + 1].values; }

 private:
  MlpConfig cfg_;
  std::vector<ParamTensor> params_;
  std::uint64_t generation_ = 1;
};

Matrix apply_activation(Activation a, const Matrix& pre);

struct AdamConfig {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimizer. Moments are keyed by position in the parameter list,
/// so the same list (same order) must be passed on every step.
class Adam {
 public:
  static constexpr double kMinStepSize = 1e-6;

  explicit Adam(AdamConfig cfg = {});

  /// Descends along each tensor's grad. Throws frg::NonFiniteError on a non-finite
  /// gradient or parameter, leaving parameters untouched in the gradient case.
  void step(std::span<ParamTensor* const> params);

  std::uint64_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_row = 0;
  Eigen::Index worst_col = 0;
  std::size_t coordinates = 0;
  bool passed = true;
};

/// Compares analytic gradients against central differences.
/// `loss` evaluates the loss at the current parameter values; `gradients` must
/// zero and then fill every tensor's grad at the current values.
/// Relative error per coordinate is |a - n| / max(|a|, |n|, abs_floor).
GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::function<void()>& gradients,
                           std::span<ParamTensor* const> params, double tolerance,
                           double h = 1e-5, double abs_floor = 1e-7);

}  // namespace frg::nn
