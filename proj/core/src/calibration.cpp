#include <algorithm>
#include <cmath>

#include "frg/error.hpp"
#include "frg/frg.hpp"
#include "frg/rng.hpp"

namespace frg {

void CalibrationConfig::validate(double epsilon) const {
  if (!(c >= 0.0 && c <= epsilon)) throw ConfigError("calibration c must lie in [0, epsilon]");
  if (!(k >= 0.0 && k <= 100.0)) throw ConfigError("calibration percentile k must lie in [0, 100]");
  if (sweep.empty()) throw ConfigError("calibration sweep is empty");
  for (double w : sweep) {
    if (!(w >= 0.0)) throw ConfigError("sweep penalty weights must be nonnegative");
  }
  if (task.empty()) throw ConfigError("calibration needs a downstream task name");
  train.validate();
  downstream.validate();
}

double CalibrationResult::value() const {
  if (!adjustment) {
    throw CalibrationFailure("no sweep model reached epsilon - c <= parity gap <= epsilon on D_c");
  }
  return *adjustment;
}

CalibrationResult select_adjustment(std::vector<SweepPoint> sweep, double epsilon, double c,
                                    double k, double psi_epsilon) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    auto& p = sweep[i];
    p.qualified = p.delta_dp >= epsilon - c && p.delta_dp <= epsilon;
    if (p.qualified) kept.push_back(i);
  }
  CalibrationResult out;
  out.psi_epsilon = psi_epsilon;
  if (kept.empty()) {
    out.sweep = std::move(sweep);
    return out;
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [&](std::size_t a, std::size_t b) { return sweep[a].i1 < sweep[b].i1; });
  // Nearest rank: k = 0 is the minimum, k = 100 the maximum.
  const auto n = static_cast<double>(kept.size());
  const auto rank = static_cast<std::size_t>(std::max(0.0, std::ceil(k / 100.0 * n) - 1.0));
  const std::size_t pos = std::min(rank, kept.size() - 1);
  std::size_t chosen = kept[pos];
  for (std::size_t i : kept) {
    if (sweep[i].i1 == sweep[chosen].i1 && sweep[i].auc > sweep[chosen].auc) chosen = i;
  }

  out.chosen = chosen;
  out.adjustment = sweep[chosen].i1 - psi_epsilon;
  out.sweep = std::move(sweep);
  return out;
}

CalibrationResult calibrate_adjustment(const Dataset& candidate_data, double epsilon,
                                       const CalibrationConfig& config) {
  config.validate(epsilon);
  const auto& y = candidate_data.label(config.task);
  const double psi_eps = psi(epsilon, candidate_data.group_priors());

  ConstraintTerm penalty;
  penalty.active = true;  // mean KL, threshold 0

  std::vector<SweepPoint> sweep;
  for (std::size_t i = 0; i < config.sweep.size(); ++i) {
    TrainConfig train = config.train;
    train.seed = derive_seed(config.train.seed, i);
    RepresentationModel model(candidate_data.dim(), candidate_data.num_groups(), config.arch,
                              derive_seed(train.seed, 0x1417));
    train_representation(model, candidate_data, train, penalty,
                         LagrangeSchedule{config.sweep[i], 0.0, {}});

    const Matrix z = embed(model, candidate_data, EmbedMode::mean);
    DownstreamConfig ds = config.downstream;
    ds.seed = derive_seed(config.downstream.seed, i);
    const auto clf = train_downstream(z, y, ds);
    const Vector scores = clf.scores(z);

    SweepPoint p;
    p.penalty = config.sweep[i];
    p.delta_dp = delta_dp(clf, z, candidate_data.sensitive(), candidate_data.num_groups());
    p.i1 = estimate_I1(model, candidate_data).mean;
    p.auc = auc(std::span(scores.data(), static_cast<std::size_t>(scores.size())), y);
    sweep.push_back(p);
  }
  return select_adjustment(std::move(sweep), epsilon, config.c, config.k, psi_eps);
}

}  // namespace frg
