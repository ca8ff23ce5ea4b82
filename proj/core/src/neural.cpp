#include "frg/neural.hpp"

#include <algorithm>
#include <cmath>

#include "frg/error.hpp"
#include "frg/rng.hpp"

namespace frg::nn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + name + "'");
}

void MlpConfig::validate() const {
  if (layer_sizes.size() < 2) throw ConfigError("an MLP needs at least input and output sizes");
  if (activations.size() + 1 != layer_sizes.size()) {
    throw ConfigError("need exactly one activation per layer");
  }
  for (int s : layer_sizes) {
    if (s < 1) throw ConfigError("layer sizes must be positive");
  }
  if (!(init_scale >= 0.0)) throw ConfigError("init_scale must be nonnegative");
}

Mlp::Mlp(MlpConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  for (std::size_t i = 0; i < cfg_.activations.size(); ++i) {
    const int in = cfg_.layer_sizes[i];
    const int out = cfg_.layer_sizes[i + 1];
    const double bound = cfg_.init_scale / std::sqrt(static_cast<double>(in));
    Matrix w(in, out);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-bound, bound);
    }
    params_.emplace_back("W" + std::to_string(i), std::move(w));
    params_.emplace_back("b" + std::to_string(i), Matrix::Zero(1, out));
  }
}

Mlp::Mlp(MlpConfig cfg, std::vector<ParamTensor> params)
    : cfg_(std::move(cfg)), params_(std::move(params)) {
  cfg_.validate();
  if (params_.size() != 2 * cfg_.activations.size()) {
    throw FormatError("parameter count does not match the layer layout");
  }
  for (std::size_t i = 0; i < cfg_.activations.size(); ++i) {
    const auto& w = params_[2 * i].values;
    const auto& b = params_[2 * i + 1].values;
    if (w.rows() != cfg_.layer_sizes[i] || w.cols() != cfg_.layer_sizes[i + 1] || b.rows() != 1 ||
        b.cols() != cfg_.layer_sizes[i + 1]) {
      throw FormatError("parameter shape does not match layer " + std::to_string(i));
    }
    params_[2 * i].grad = Matrix::Zero(w.rows(), w.cols());
    params_[2 * i + 1].grad = Matrix::Zero(1, b.cols());
  }
}

Matrix apply_activation(Activation a, const Matrix& pre) {
  switch (a) {
    case Activation::relu: return pre.cwiseMax(0.0);
    case Activation::tanh: return pre.array().tanh().matrix();
    case Activation::sigmoid: return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
    case Activation::identity: return pre;
  }
  return pre;
}

Matrix Mlp::forward(const Matrix& x) const {
  Cache scratch;
  return forward(x, scratch);
}

Matrix Mlp::forward(const Matrix& x, Cache& cache) const {
  if (x.cols() != input_dim()) {
    throw DomainError("MLP input has " + std::to_string(x.cols()) + " columns, expected " +
                      std::to_string(input_dim()));
  }
  cache.inputs.clear();
  cache.activations.clear();
  cache.generation = generation_;
  Matrix h = x;
  for (std::size_t i = 0; i < num_layers(); ++i) {
    Matrix pre = h * weight(i);
    pre.rowwise() += bias(i).row(0);
    cache.inputs.push_back(std::move(h));
    h = apply_activation(cfg_.activations[i], pre);
    cache.activations.push_back(h);
  }
  return h;
}

Matrix Mlp::backward(const Cache& cache, const Matrix& upstream) {
  if (cache.generation != generation_ || cache.activations.size() != num_layers()) {
    throw Error("stale forward cache: parameters changed since the forward pass");
  }
  if (upstream.rows() != cache.output().rows() || upstream.cols() != cache.output().cols()) {
    throw DomainError("upstream gradient shape does not match the network output");
  }
  Matrix delta = upstream;
  for (std::size_t k = num_layers(); k-- > 0;) {
    const Matrix& y = cache.activations[k];
    switch (cfg_.activations[k]) {
      case Activation::relu: delta = (y.array() > 0.0).select(delta, 0.0); break;
      case Activation::tanh: delta = (delta.array() * (1.0 - y.array().square())).matrix(); break;
      case Activation::sigmoid: delta = (delta.array() * y.array() * (1.0 - y.array())).matrix(); break;
      case Activation::identity: break;
    }
    params_[2 * k].grad.noalias() += cache.inputs[k].transpose() * delta;
    params_[2 * k + 1].grad += delta.colwise().sum();
    delta = delta * weight(k).transpose();
  }
  return delta;
}

void Mlp::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

std::vector<ParamTensor*> Mlp::parameter_ptrs() {
  ++generation_;
  std::vector<ParamTensor*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(&p);
  return out;
}

Adam::Adam(AdamConfig cfg) : cfg_(cfg) {
  if (!(cfg_.step_size >= kMinStepSize)) {
    throw ConfigError("step size must be at least 1e-6");
  }
  if (!(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0 && cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0)) {
    throw ConfigError("moment decay rates must lie in [0, 1)");
  }
  if (!(cfg_.epsilon > 0.0)) throw ConfigError("optimizer epsilon must be positive");
}

void Adam::step(std::span<ParamTensor* const> params) {
  for (const ParamTensor* p : params) {
    if (!p->grad.allFinite()) throw NonFiniteError("non-finite gradient in '" + p->name + "'");
  }
  if (m_.empty()) {
    for (const ParamTensor* p : params) {
      m_.push_back(Matrix::Zero(p->values.rows(), p->values.cols()));
      v_.push_back(Matrix::Zero(p->values.rows(), p->values.cols()));
    }
  } else if (m_.size() != params.size()) {
    throw DomainError("optimizer was initialised with a different parameter list");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamTensor& p = *params[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p.grad;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * p.grad.cwiseProduct(p.grad);
    p.values.array() -= cfg_.step_size * (m_[i].array() / bc1) /
                        ((v_[i].array() / bc2).sqrt() + cfg_.epsilon);
    if (!p.all_finite()) throw NonFiniteError("parameter '" + p.name + "' became non-finite");
  }
}

GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::function<void()>& gradients,
                           std::span<ParamTensor* const> params, double tolerance, double h,
                           double abs_floor) {
  gradients();
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const ParamTensor* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamTensor& p = *params[i];
    for (Eigen::Index c = 0; c < p.values.cols(); ++c) {
      for (Eigen::Index r = 0; r < p.values.rows(); ++r) {
        const double saved = p.values(r, c);
        p.values(r, c) = saved + h;
        const double up = loss();
        p.values(r, c) = saved - h;
        const double down = loss();
        p.values(r, c) = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic[i](r, c);
        const double abs_err = std::abs(a - numeric);
        const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), abs_floor});
        ++report.coordinates;
        report.max_abs_error = std::max(report.max_abs_error, abs_err);
        if (report.worst_param.empty() || rel > report.max_rel_error) {
          report.max_rel_error = rel;
          report.worst_param = p.name;
          report.worst_row = r;
          report.worst_col = c;
        }
      }
    }
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

}  // namespace frg::nn
