#include "frg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <thread>

#include "frg/error.hpp"
#include "frg/rng.hpp"

namespace frg {

std::string to_string(Method m) {
  switch (m) {
    case Method::frg_guarantee: return "frg_guarantee";
    case Method::frg_practical: return "frg_practical";
    case Method::frg_ablation: return "frg_ablation";
    case Method::vae: return "vae";
  }
  return "vae";
}

Method method_from_string(const std::string& name) {
  if (name == "frg_guarantee") return Method::frg_guarantee;
  if (name == "frg_practical") return Method::frg_practical;
  if (name == "frg_ablation") return Method::frg_ablation;
  if (name == "vae") return Method::vae;
  throw ConfigError("unknown method '" + name +
                    "' (expected frg_guarantee, frg_practical, frg_ablation or vae)");
}

std::string to_string(TrialKind k) {
  switch (k) {
    case TrialKind::solution: return "solution";
    case TrialKind::nsf: return "nsf";
    case TrialKind::failed: return "failed";
  }
  return "failed";
}

FrgConfig method_config(Method method, FrgConfig f) {
  switch (method) {
    case Method::frg_guarantee:
      f.mode = FrgMode::guarantee;
      f.ablation = false;
      break;
    case Method::frg_practical:
      f.mode = FrgMode::practical;
      f.ablation = false;
      break;
    case Method::frg_ablation:
      f.mode = FrgMode::practical;
      f.ablation = true;
      break;
    case Method::vae: break;
  }
  return f;
}

namespace {

std::vector<std::string> resolve_tasks(const Dataset& data, const ProtocolConfig& config) {
  auto tasks = config.tasks.empty() ? data.task_names() : config.tasks;
  for (const auto& t : tasks) {
    if (!data.has_label(t)) throw DataError("dataset has no label '" + t + "'");
  }
  if (tasks.empty()) throw DataError("experiment needs at least one labelled task");
  return tasks;
}

}  // namespace

void ProtocolConfig::validate() const {
  if (n_resamples < 1) throw ConfigError("n_resamples must be at least 1");
  if (fractions.empty()) throw ConfigError("fractions must not be empty");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("fractions must lie in (0, 1]");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (!(candidate_fraction > 0.0 && candidate_fraction < 1.0)) {
    throw ConfigError("candidate_fraction must lie in (0, 1)");
  }
  method_config(method, frg).validate();
  downstream.validate();
}

TrialReport run_trial(const Dataset& train, const Dataset& test, const ProtocolConfig& config,
                      std::size_t trial, std::size_t resample, double fraction) {
  TrialReport report;
  report.trial = trial;
  report.resample = resample;
  report.fraction = fraction;
  report.n_train = train.size();
  const std::uint64_t trial_seed = derive_seed(config.seed, 1000 + trial);
  try {
    FrgConfig f = method_config(config.method, config.frg);
    f.train.seed = derive_seed(trial_seed, 2);
    std::optional<RepresentationModel> model;
    if (config.method == Method::vae) {
      model = vae_train(train, f.arch, f.train).model;
      report.kind = TrialKind::solution;
    } else {
      const SplitSpec split{config.candidate_fraction, derive_seed(trial_seed, 1), true};
      auto out = run_frg(train, split, f);
      report.certificate = out.certificate();
      if (out.is_solution()) {
        report.kind = TrialKind::solution;
        report.threshold = out.solution().threshold;
        model = std::move(std::get<FrgSolution>(out.result).model);
      } else {
        report.kind = TrialKind::nsf;
        report.threshold = out.no_solution().threshold;
      }
    }
    if (model) {
      const Matrix z_train = embed(*model, train, config.embed_mode, derive_seed(trial_seed, 4));
      const Matrix z_test = embed(*model, test, config.embed_mode, derive_seed(trial_seed, 5));
      for (const auto& task : resolve_tasks(train, config)) {
        DownstreamConfig ds = config.downstream;
        ds.seed = derive_seed(trial_seed, 3);
        const auto clf = train_downstream(z_train, train.label(task), ds);
        const Vector scores = clf.scores(z_test);
        TaskMetrics m;
        m.delta_dp = delta_dp(clf, z_test, test.sensitive(), test.num_groups());
        m.auc = auc(std::span(scores.data(), static_cast<std::size_t>(scores.size())), test.label(task));
        report.tasks[task] = m;
      }
    }
  } catch (const std::exception& e) {
    report.kind = TrialKind::failed;
    report.tasks.clear();
    report.error = e.what();
  }
  return report;
}

ExperimentResult run_experiment(const Dataset& data, const ProtocolConfig& config,
                                unsigned workers) {
  config.validate();
  const auto tasks = resolve_tasks(data, config);
  auto [pool, test] = split_holdout(data, config.test_fraction, derive_seed(config.seed, 1));
  const auto trials = resample_trials(pool, config.n_resamples, config.fractions,
                                      derive_seed(config.seed, 2));

  ExperimentResult out;
  out.trials.resize(trials.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < trials.size(); i = next++) {
      out.trials[i] = run_trial(trials[i].data, test, config, i, trials[i].resample, trials[i].fraction);
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(trials.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> threads;
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work);
  }
  out.aggregates = aggregate_trials(out.trials, to_string(config.method), config.frg.epsilon, tasks,
                                    config.fractions);
  return out;
}

std::vector<AggregateRow> aggregate_trials(const std::vector<TrialReport>& trials,
                                           const std::string& method, double epsilon,
                                           const std::vector<std::string>& tasks,
                                           const std::vector<double>& fractions) {
  std::vector<AggregateRow> rows;
  for (const auto& task : tasks) {
    for (double f : fractions) {
      AggregateRow row;
      row.method = method;
      row.task = task;
      row.fraction = f;
      std::vector<double> aucs, gaps;
      std::size_t solutions = 0, violations = 0;
      for (const auto& t : trials) {
        if (t.fraction != f || t.kind == TrialKind::failed) continue;
        ++row.n_trials;
        if (t.kind != TrialKind::solution) continue;
        ++solutions;
        const auto it = t.tasks.find(task);
        if (it == t.tasks.end()) continue;
        aucs.push_back(it->second.auc);
        gaps.push_back(it->second.delta_dp);
        if (it->second.delta_dp > epsilon) ++violations;
      }
      auto mean_std = [](const std::vector<double>& v) -> std::pair<double, double> {
        if (v.empty()) return {std::nan(""), std::nan("")};
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        if (v.size() < 2) return {m, 0.0};
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
      };
      if (row.n_trials > 0) {
        row.solution_rate = static_cast<double>(solutions) / static_cast<double>(row.n_trials);
        row.violation_rate = static_cast<double>(violations) / static_cast<double>(row.n_trials);
      } else {
        row.solution_rate = row.violation_rate = std::nan("");
      }
      std::tie(row.mean_auc, row.std_auc) = mean_std(aucs);
      std::tie(row.mean_delta_dp, row.std_delta_dp) = mean_std(gaps);
      rows.push_back(row);
    }
  }
  return rows;
}

namespace {
std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
}  // namespace

std::string aggregates_csv(const std::vector<AggregateRow>& rows, const std::string& task) {
  std::ostringstream out;
  out << "method,fraction,n_trials,solution_rate,violation_rate,mean_auc,std_auc,mean_delta_dp,"
         "std_delta_dp\n";
  for (const auto& r : rows) {
    if (r.task != task) continue;
    out << r.method << ',' << fmt_double(r.fraction) << ',' << r.n_trials << ','
        << fmt_double(r.solution_rate) << ',' << fmt_double(r.violation_rate) << ','
        << fmt_double(r.mean_auc) << ',' << fmt_double(r.std_auc) << ','
        << fmt_double(r.mean_delta_dp) << ',' << fmt_double(r.std_delta_dp) << '\n';
  }
  return out.str();
}

nlohmann::json trial_to_json(const TrialReport& r) {
  nlohmann::json j{{"trial", r.trial},       {"resample", r.resample}, {"fraction", r.fraction},
                   {"n_train", r.n_train},   {"kind", to_string(r.kind)},
                   {"threshold", r.threshold}};
  j["tasks"] = nlohmann::json::object();
  for (const auto& [task, m] : r.tasks) j["tasks"][task] = {{"delta_dp", m.delta_dp}, {"auc", m.auc}};
  if (r.certificate) {
    j["certificate"] = {{"upper", r.certificate->upper},
                        {"sample_mean", r.certificate->sample_mean},
                        {"sample_std", r.certificate->sample_std},
                        {"m", r.certificate->m}};
  } else {
    j["certificate"] = nullptr;
  }
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

TrialReport trial_from_json(const nlohmann::json& j) {
  TrialReport r;
  r.trial = j.at("trial").get<std::size_t>();
  r.resample = j.at("resample").get<std::size_t>();
  r.fraction = j.at("fraction").get<double>();
  r.n_train = j.at("n_train").get<std::size_t>();
  const auto kind = j.at("kind").get<std::string>();
  r.kind = kind == "solution" ? TrialKind::solution : kind == "nsf" ? TrialKind::nsf : TrialKind::failed;
  r.threshold = j.at("threshold").get<double>();
  for (const auto& [task, m] : j.at("tasks").items()) {
    r.tasks[task] = {m.at("delta_dp").get<double>(), m.at("auc").get<double>()};
  }
  if (!j.at("certificate").is_null()) {
    const auto& c = j.at("certificate");
    r.certificate = BoundResult{c.at("upper").get<double>(), c.at("sample_mean").get<double>(),
                                c.at("sample_std").get<double>(), c.at("m").get<std::size_t>()};
  }
  if (j.contains("error")) r.error = j.at("error").get<std::string>();
  return r;
}

}  // namespace frg
