#include "frg/stats_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "frg/error.hpp"

namespace frg {

double helper_f(double v) {
  if (!(v >= 0.0 && v < 2.0)) {
    throw DomainError("helper_f: argument must lie in [0, 2), got " + std::to_string(v));
  }
  const double log_branch = std::log((2.0 + v) / (2.0 - v)) - 2.0 * v / (2.0 + v);
  const double v2 = v * v;
  const double poly_branch = v2 / 2.0 + v2 * v2 / 36.0 + v2 * v2 * v2 / 288.0;
  return std::max(log_branch, poly_branch);
}

namespace {

void check_delta_dp(double delta_dp) {
  if (!(delta_dp >= 0.0 && delta_dp <= 1.0)) {
    throw DomainError("parity gap must lie in [0, 1], got " + std::to_string(delta_dp));
  }
}

void check_priors(std::span<const double> pis) {
  if (pis.size() < 2) throw DomainError("need at least two group priors");
  double total = 0.0;
  for (double p : pis) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("group priors must lie in (0, 1)");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("group priors must sum to 1");
}

}  // namespace

double psi_binary(double delta_dp, double pi) {
  check_delta_dp(delta_dp);
  if (!(pi > 0.0 && pi < 1.0)) throw DomainError("pi must lie in (0, 1)");
  return (1.0 - pi) * helper_f(pi * delta_dp) + pi * helper_f((1.0 - pi) * delta_dp);
}

double psi_multinomial(double delta_dp, std::span<const double> pis) {
  check_delta_dp(delta_dp);
  check_priors(pis);
  const double alpha = *std::min_element(pis.begin(), pis.end());
  return helper_f(alpha * delta_dp);
}

double psi(double delta_dp, std::span<const double> pis) {
  check_priors(pis);
  if (pis.size() == 2) return psi_binary(delta_dp, pis[1]);
  return psi_multinomial(delta_dp, pis);
}

double psi_inverse(double target, std::span<const double> pis) {
  if (!(target >= 0.0)) throw DomainError("psi_inverse: target must be nonnegative");
  if (target == 0.0) return 0.0;
  if (psi(1.0, pis) < target) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    if (psi(mid, pis) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("t_quantile: p must lie in (0, 1)");
  if (!(dof >= 1.0)) throw DomainError("t_quantile: dof must be at least 1");
  if (p == 0.5) return 0.0;
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, p);
}

void ConfidenceBoundSpec::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie strictly inside (0, 1)");
  if (method == BoundMethod::hoeffding) {
    if (!hoeffding_range) throw DomainError("Hoeffding bound requires a sample range");
    if (!(hoeffding_range->second > hoeffding_range->first)) {
      throw DomainError("Hoeffding range must have upper > lower");
    }
  } else if (hoeffding_range) {
    throw DomainError("sample range only applies to the Hoeffding bound");
  }
}

double student_t_width_factor(const ConfidenceBoundSpec& spec, std::size_t m) {
  if (m < 2) throw DomainError("Student-t bound needs at least 2 samples");
  const double w = spec.inflated ? 2.0 : 1.0;
  return w * t_quantile(1.0 - spec.delta, static_cast<double>(m - 1)) /
         std::sqrt(static_cast<double>(m));
}

double hoeffding_width(const ConfidenceBoundSpec& spec, std::size_t m) {
  if (m < 1) throw DomainError("Hoeffding bound needs at least 1 sample");
  const double w = spec.inflated ? 2.0 : 1.0;
  const double range = spec.hoeffding_range->second - spec.hoeffding_range->first;
  return w * range * std::sqrt(std::log(1.0 / spec.delta) / (2.0 * static_cast<double>(m)));
}

BoundResult upper_bound(std::span<const double> samples, const ConfidenceBoundSpec& spec) {
  spec.validate();
  if (samples.empty()) throw DomainError("upper_bound: no samples");
  const std::size_t m = samples.size();
  BoundResult out;
  out.m = m;
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  if (*lo_it == *hi_it) {
    // Constant samples: report the value itself rather than a rounded sum.
    out.sample_mean = *lo_it;
  } else {
    out.sample_mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(m);
  }
  if (m >= 2 && *lo_it != *hi_it) {
    double ss = 0.0;
    for (double x : samples) ss += (x - out.sample_mean) * (x - out.sample_mean);
    out.sample_std = std::sqrt(ss / static_cast<double>(m - 1));
  }

  if (spec.method == BoundMethod::student_t) {
    if (m < 2) throw DomainError("Student-t bound needs at least 2 samples");
    out.upper = out.sample_std == 0.0
                    ? out.sample_mean
                    : out.sample_mean + out.sample_std * student_t_width_factor(spec, m);
  } else {
    const auto [lo, hi] = *spec.hoeffding_range;
    for (double x : samples) {
      if (x < lo || x > hi) throw DomainError("sample outside the declared Hoeffding range");
    }
    out.upper = out.sample_mean + hoeffding_width(spec, m);
  }
  if (!std::isfinite(out.upper)) throw NonFiniteError("upper bound is not finite");
  return out;
}

}  // namespace frg
