#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace frg {

// Closed-form statistics: the mutual-information-to-parity bound and the
// one-sided high-confidence upper bounds used by the fairness test.

/// max(log((2+v)/(2-v)) - 2v/(2+v), v^2/2 + v^4/36 + v^6/288) on [0, 2).
double helper_f(double v);

/// Lower bound on I(Z;S) implied by a parity gap `delta_dp` for binary S
/// with pi = Pr(S = 1).
double psi_binary(double delta_dp, double pi);

/// Multinomial form f(min_k pi_k * delta_dp).
double psi_multinomial(double delta_dp, std::span<const double> pis);

/// Dispatches on the number of groups: binary form for K = 2 (pi = pis[1]),
/// multinomial form otherwise.
double psi(double delta_dp, std::span<const double> pis);

/// Largest parity gap whose psi equals `target`; 1 when psi(1) < target.
/// Bisection to 1e-9 absolute.
double psi_inverse(double target, std::span<const double> pis);

/// Inverse CDF of Student's t with `dof` degrees of freedom.
double t_quantile(double p, double dof);

enum class BoundMethod { student_t, hoeffding };

struct ConfidenceBoundSpec {
  BoundMethod method = BoundMethod::student_t;
  double delta = 0.1;
  /// Doubles the width (upper - mean) of the interval.
  bool inflated = false;
  /// Range of individual samples; required for Hoeffding.
  std::optional<std::pair<double, double>> hoeffding_range;

  /// Throws frg::DomainError when the invariants do not hold.
  void validate() const;
};

struct BoundResult {
  double upper = 0.0;
  double sample_mean = 0.0;
  double sample_std = 0.0;
  std::size_t m = 0;

  friend bool operator==(const BoundResult&, const BoundResult&) = default;
};

/// One-sided 1 - delta upper confidence bound on the mean of `samples`.
BoundResult upper_bound(std::span<const double> samples, const ConfidenceBoundSpec& spec);

/// Multiplier applied to the sample standard deviation by the Student-t bound
/// for `m` samples: w * t_{1-delta, m-1} / sqrt(m), w = 2 when inflated.
double student_t_width_factor(const ConfidenceBoundSpec& spec, std::size_t m);

/// Width added to the mean by the Hoeffding bound for `m` samples.
double hoeffding_width(const ConfidenceBoundSpec& spec, std::size_t m);

}  // namespace frg
