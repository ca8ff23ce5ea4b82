#pragma once

// Independent reference implementations used as test oracles. They favour
// obviousness over speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace frg::oracle {

/// Student-t density via log-gamma.
inline double t_density(double t, double nu) {
  const double lc = std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) -
                    0.5 * std::log(nu * std::numbers::pi);
  return std::exp(lc - (nu + 1.0) / 2.0 * std::log1p(t * t / nu));
}

/// CDF by composite Simpson integration of the density from 0 to t.
inline double t_cdf(double t, double nu, int intervals = 20000) {
  const double a = 0.0, b = std::abs(t);
  const double h = (b - a) / intervals;
  double s = t_density(a, nu) + t_density(b, nu);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * t_density(a + i * h, nu);
  const double half = s * h / 3.0;
  return t >= 0 ? 0.5 + half : 0.5 - half;
}

/// Quantile by bisection on the integrated CDF.
inline double t_quantile(double p, double nu) {
  double lo = -1e3, hi = 1e3;
  if (p > 0.5) lo = 0.0;
  if (p < 0.5) hi = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (t_cdf(mid, nu) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Polynomial and log branches of f evaluated separately.
inline double f_log_branch(double v) { return std::log((2 + v) / (2 - v)) - 2 * v / (2 + v); }
inline double f_poly_branch(double v) {
  return v * v / 2 + std::pow(v, 4) / 36 + std::pow(v, 6) / 288;
}

/// Max pairwise gap of positive rates by explicit pair loop.
inline double delta_dp(std::span<const int> pred, std::span<const int> s, int k) {
  double worst = 0.0;
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      double pa = 0, na = 0, pb = 0, nb = 0;
      for (std::size_t i = 0; i < pred.size(); ++i) {
        if (s[i] == a) { na += 1; pa += pred[i]; }
        if (s[i] == b) { nb += 1; pb += pred[i]; }
      }
      worst = std::max(worst, std::abs(pa / na - pb / nb));
    }
  }
  return worst;
}

/// P(score_pos > score_neg) + 0.5 P(tie) over all pairs.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1;
      if (scores[i] > scores[j]) wins += 1;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_sd(std::span<const double> v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace frg::oracle
