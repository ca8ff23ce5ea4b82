#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "frg/config.hpp"
#include "frg/dataset_cache.hpp"
#include "frg/downstream.hpp"
#include "frg/error.hpp"
#include "frg/experiment.hpp"
#include "frg/frg.hpp"
#include "frg/gradcheck.hpp"
#include "frg/output_io.hpp"
#include "frg/rng.hpp"
#include "frg/schema.hpp"
#include "frg/stats_bounds.hpp"
#include "frg/util.hpp"

#ifndef FRG_VERSION
#define FRG_VERSION "unknown"
#endif

namespace frg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Collects the files a command writes so the manifest can list their hashes.
class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void text(const std::string& name, std::string_view body) {
    write_text_file((dir_ / name).string(), body);
    files_[name] = to_hex(fnv1a64(body));
  }
  void binary(const std::string& name, const std::vector<std::uint8_t>& bytes) {
    write_binary_file((dir_ / name).string(), bytes);
    files_[name] = to_hex(fnv1a64(bytes));
  }
  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

  const fs::path& dir() const { return dir_; }
  const std::map<std::string, std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::map<std::string, std::string> files_;
};

Dataset load_data(const Invocation& inv) { return load_dataset(inv.inputs.at("data")).dataset; }

std::string trace_csv(const std::vector<EpochRecord>& trace) {
  std::string out = "epoch,objective,elbo,constraint,lambda\n";
  for (const auto& e : trace) {
    out += std::to_string(e.epoch) + "," + num(e.objective) + "," + num(e.elbo) + "," +
           (std::isnan(e.constraint) ? std::string("nan") : num(e.constraint)) + "," + num(e.lambda) + "\n";
  }
  return out;
}

json dataset_stats(const Dataset& d) {
  json tasks = json::object();
  for (const auto& name : d.task_names()) {
    const auto& y = d.label(name);
    double pos = 0.0;
    for (int v : y) pos += v;
    tasks[name] = {{"base_rate", pos / static_cast<double>(y.size())},
                   {"delta_dp", delta_dp(y, d.sensitive(), d.num_groups())}};
  }
  return {{"n", d.size()}, {"d", d.dim()}, {"K", d.num_groups()}, {"priors", d.group_priors()},
          {"tasks", tasks}};
}

void print_stats(const json& stats, std::ostream& log) {
  log << "n = " << stats["n"] << ", d = " << stats["d"] << ", K = " << stats["K"] << "\n";
  log << "priors = " << stats["priors"].dump() << "\n";
  for (const auto& [name, t] : stats["tasks"].items()) {
    log << "task " << name << ": base rate " << t["base_rate"].get<double>() << ", true-label delta_dp "
        << t["delta_dp"].get<double>() << "\n";
  }
}

int cmd_ingest(const Invocation& inv, OutputDir& out, std::ostream& log) {
  const TabularSchema schema = TabularSchema::from_json(inv.config.at("schema"));
  const std::string csv = inv.inputs.at("csv");
  const DatasetMeta meta{hash_file(csv), schema.hash()};

  std::optional<Dataset> data;
  fs::path cached;
  if (const char* dir = std::getenv("FRG_CACHE_DIR"); dir && *dir) {
    cached = fs::path(dir) / cache_file_name(meta.source_hash, meta.schema_hash);
    if (fs::exists(cached)) {
      try {
        auto hit = load_dataset(cached.string());
        if (hit.meta.source_hash == meta.source_hash && hit.meta.schema_hash == meta.schema_hash) {
          data = std::move(hit.dataset);
          log << "cache hit: " << cached.string() << "\n";
        }
      } catch (const FormatError& e) {
        log << "ignoring unreadable cache entry " << cached.string() << ": " << e.what() << "\n";
      }
    }
  }
  if (!data) {
    auto table = load_tabular(csv, schema);
    log << "rows read " << table.report.rows_read << ", kept " << table.report.rows_kept
        << ", dropped (missing) " << table.report.rows_dropped_missing << "\n";
    data = std::move(table.dataset);
    if (!cached.empty()) {
      fs::create_directories(cached.parent_path());
      save_dataset(cached.string(), *data, meta);
    }
  }
  out.binary("dataset.frgd", encode_dataset(*data, meta));
  const json stats = dataset_stats(*data);
  out.json_file("stats.json", stats);
  print_stats(stats, log);
  return kOk;
}

int cmd_synth(const Invocation& inv, OutputDir& out, std::ostream& log) {
  const auto spec = config_from_json<SyntheticSpec>(inv.config);
  const Dataset d = generate_synthetic(spec);
  out.binary("dataset.frgd", encode_dataset(d, {}));
  const json stats = dataset_stats(d);
  out.json_file("stats.json", stats);
  print_stats(stats, log);
  return kOk;
}

int cmd_train(const Invocation& inv, OutputDir& out, std::ostream& log) {
  const auto run = config_from_json<RunConfig>(inv.config);
  const Dataset data = load_data(inv);
  if (run.method == Method::vae) {
    run.frg.train.validate();
    const auto result = vae_train(data, run.frg.arch, run.frg.train);
    out.binary("model.frgm", save_model(result.model, {{"method", "vae"}}));
    out.text("trace.csv", trace_csv(result.trace));
    const json summary = {{"status", "solution"},
                          {"method", "vae"},
                          {"i1", estimate_I1(result.model, data).mean},
                          {"final_elbo", result.trace.empty() ? 0.0 : result.trace.back().elbo}};
    out.json_file("summary.json", summary);
    log << "vae trained; I1 on the training data " << summary["i1"].get<double>() << "\n";
    return kOk;
  }
  const FrgConfig frg = method_config(run.method, run.frg);
  const FrgOutput result = run_frg(data, run.split, frg);
  out.binary("output.frgo", save_output(result, {{"method", to_string(run.method)}}));
  json summary = output_summary(result);
  summary["method"] = to_string(run.method);
  out.json_file("summary.json", summary);
  out.text("trace.csv", trace_csv(result.trace));
  const auto& cert = result.certificate();
  if (result.is_solution()) {
    out.binary("model.frgm", save_model(result.solution().model, {{"method", to_string(run.method)}}));
    log << "solution: upper bound " << cert.upper << " <= 0 on m = " << cert.m << "\n";
    if (result.solution().implied_delta_dp) {
      log << "implied delta_dp bound " << *result.solution().implied_delta_dp << "\n";
    }
    return kOk;
  }
  log << "no solution found: " << result.no_solution().reason << "\n";
  return kNoSolution;
}

RepresentationModel load_any_model(const std::string& path) {
  const auto bytes = read_binary_file(path);
  const std::string magic = peek_magic(bytes);
  if (magic == "FRGM") return load_model(bytes).model;
  if (magic == "FRGO") {
    auto loaded = load_output(bytes);
    if (!loaded.output.is_solution()) throw DataError(path + " holds no model (no solution found)");
    return std::move(std::get<FrgSolution>(loaded.output.result).model);
  }
  throw FormatError(path + " is neither a model nor an FRG output file");
}

int cmd_certify(const Invocation& inv, OutputDir& out, std::ostream& log) {
  const auto frg = config_from_json<FrgConfig>(inv.config);
  frg.validate();
  const RepresentationModel model = load_any_model(inv.inputs.at("model"));
  const Dataset data = load_data(inv);
  if (model.input_dim() != data.dim() || model.num_groups() != data.num_groups()) {
    throw DataError("schema mismatch: model expects d = " + std::to_string(model.input_dim()) +
                    ", K = " + std::to_string(model.num_groups()) + " but the dataset has d = " +
                    std::to_string(data.dim()) + ", K = " + std::to_string(data.num_groups()));
  }
  const auto priors = data.group_priors();
  const auto test = fairness_test(model, data, frg, priors);
  json report = {{"passed", test.passed},
                 {"certificate", bound_to_json(test.certificate)},
                 {"threshold", test.threshold},
                 {"epsilon", frg.epsilon},
                 {"delta", frg.delta},
                 {"mode", to_string(frg.mode)},
                 {"priors", priors}};
  if (frg.mode == FrgMode::guarantee) {
    report["implied_delta_dp"] = psi_inverse(std::max(0.0, test.certificate.upper + test.threshold), priors);
  }
  out.json_file("certificate.json", report);
  std::string csv = "index,g\n";
  for (std::size_t i = 0; i < test.estimates.size(); ++i) csv += std::to_string(i) + "," + num(test.estimates[i]) + "\n";
  out.text("estimates.csv", csv);
  log << (test.passed ? "PASS" : "FAIL") << ": upper " << test.certificate.upper << ", m "
      << test.certificate.m << ", threshold " << test.threshold << "\n";
  if (report.contains("implied_delta_dp")) {
    log << "implied delta_dp bound " << report["implied_delta_dp"].get<double>() << "\n";
  }
  return test.passed ? kOk : kNoSolution;
}

int cmd_experiment(const Invocation& inv, OutputDir& out, std::ostream& log) {
  const auto protocol = config_from_json<ProtocolConfig>(inv.config);
  protocol.validate();
  const Dataset data = load_data(inv);
  const auto result = run_experiment(data, protocol, inv.workers);
  std::string jsonl;
  for (const auto& t : result.trials) {
    jsonl += trial_to_json(t).dump() + "\n";
    if (t.kind == TrialKind::failed) log << "trial " << t.trial << " failed: " << t.error << "\n";
  }
  out.text("trials.jsonl", jsonl);
  std::vector<std::string> tasks;
  for (const auto& row : result.aggregates) {
    if (std::find(tasks.begin(), tasks.end(), row.task) == tasks.end()) tasks.push_back(row.task);
  }
  for (const auto& task : tasks) {
    const std::string csv = aggregates_csv(result.aggregates, task);
    out.text("aggregates_" + task + ".csv", csv);
    log << "task " << task << "\n" << csv;
  }
  return kOk;
}

int cmd_calibrate(const Invocation& inv, OutputDir& out, std::ostream& log) {
  const double epsilon = inv.config.at("epsilon").get<double>();
  const auto cc = config_from_json<CalibrationConfig>(inv.config.at("calibration"));
  const Dataset data = load_data(inv);
  const auto result = calibrate_adjustment(data, epsilon, cc);
  std::string csv = "penalty,delta_dp,i1,auc,qualified\n";
  for (const auto& p : result.sweep) {
    csv += num(p.penalty) + "," + num(p.delta_dp) + "," + num(p.i1) + "," + num(p.auc) + "," +
           (p.qualified ? "1" : "0") + "\n";
  }
  out.text("sweep.csv", csv);
  json summary = {{"epsilon", epsilon}, {"psi_epsilon", result.psi_epsilon}};
  summary["adjustment"] = result.adjustment ? json(*result.adjustment) : json(nullptr);
  summary["chosen"] = result.chosen ? json(*result.chosen) : json(nullptr);
  if (result.adjustment) summary["threshold"] = result.psi_epsilon + *result.adjustment;
  out.json_file("adjustment.json", summary);
  log << csv;
  if (!result.ok()) {
    log << "calibration failed: no sweep model has epsilon - c <= delta_dp <= epsilon\n";
    return kCalibrationFailure;
  }
  log << "adjustment " << *result.adjustment << " (threshold " << summary["threshold"].get<double>() << ")\n";
  return kOk;
}

int cmd_gradcheck(const Invocation& inv, OutputDir& out, std::ostream& log) {
  const auto cfg = config_from_json<GradcheckConfig>(inv.config);
  cfg.validate();
  const bool corrupt = inv.options.value("corrupt_gradient", false);
  const GradientHook hook = corrupt ? corrupt_first_gradient() : GradientHook{};
  json rows = json::array();
  bool all_passed = true;
  for (std::size_t a = 0; a < cfg.architectures.size(); ++a) {
    const auto& arch = cfg.architectures[a];
    for (bool constrained : {false, true}) {
      double worst = 0.0;
      std::size_t failures = 0;
      for (std::size_t s = 0; s < cfg.seeds; ++s) {
        ObjectiveCheckSpec spec{arch, cfg.input_dim, cfg.batch, constrained, cfg.first_seed + s, cfg.tolerance};
        const auto r = check_objective_gradient(spec, hook);
        worst = std::max(worst, r.max_rel_error);
        failures += r.passed ? 0 : 1;
      }
      const bool passed = failures == 0;
      all_passed = all_passed && passed;
      const std::string objective = constrained ? "lagrangian" : "elbo";
      const std::string label = to_string(arch.hidden_activation) + "/" + to_string(arch.likelihood);
      rows.push_back({{"architecture", a},
                      {"label", label},
                      {"objective", objective},
                      {"max_rel_error", worst},
                      {"failed_seeds", failures},
                      {"passed", passed}});
      char line[160];
      std::snprintf(line, sizeof line, "arch %zu %-18s %-10s max_rel_error %.3e  %s\n", a, label.c_str(),
                    objective.c_str(), worst, passed ? "PASS" : "FAIL");
      log << line;
    }
  }
  out.json_file("gradcheck.json", {{"tolerance", cfg.tolerance}, {"passed", all_passed}, {"checks", rows}});
  return all_passed ? kOk : kGradcheckFailure;
}

json load_json_or_empty(const std::optional<std::string>& path) {
  return path ? read_json_file(*path) : json::object();
}

}  // namespace

json invocation_to_json(const Invocation& inv) {
  json inputs = json::object();
  for (const auto& [role, path] : inv.inputs) inputs[role] = path;
  return {{"command", inv.command},
          {"config", inv.config},
          {"inputs", inputs},
          {"options", inv.options},
          {"root_seed", inv.root_seed ? json(*inv.root_seed) : json(nullptr)},
          {"workers", inv.workers}};
}

Invocation invocation_from_json(const json& j) {
  try {
    Invocation inv;
    inv.command = j.at("command").get<std::string>();
    inv.config = j.at("config");
    for (const auto& [role, entry] : j.at("inputs").items()) {
      inv.inputs[role] = entry.is_object() ? entry.at("path").get<std::string>() : entry.get<std::string>();
    }
    inv.options = j.value("options", json::object());
    if (j.contains("root_seed") && !j.at("root_seed").is_null()) inv.root_seed = j.at("root_seed").get<std::uint64_t>();
    inv.workers = j.value("workers", 1u);
    return inv;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
}

int execute(const Invocation& inv, std::ostream& log) {
  const std::string started = utc_now();
  json inputs = json::object();
  for (const auto& [role, path] : inv.inputs) {
    if (!fs::exists(path)) throw DataError("input file not found: " + path);
    inputs[role] = {{"path", path}, {"hash", to_hex(hash_file(path))}};
  }
  OutputDir out(inv.out);
  int code = kOk;
  if (inv.command == "ingest") code = cmd_ingest(inv, out, log);
  else if (inv.command == "synth") code = cmd_synth(inv, out, log);
  else if (inv.command == "train") code = cmd_train(inv, out, log);
  else if (inv.command == "certify") code = cmd_certify(inv, out, log);
  else if (inv.command == "experiment") code = cmd_experiment(inv, out, log);
  else if (inv.command == "calibrate") code = cmd_calibrate(inv, out, log);
  else if (inv.command == "gradcheck") code = cmd_gradcheck(inv, out, log);
  else throw ConfigError("unknown command '" + inv.command + "'");

  json manifest = invocation_to_json(inv);
  manifest["inputs"] = inputs;
  manifest["outputs"] = out.files();
  manifest["exit_code"] = code;
  manifest["tool_version"] = FRG_VERSION;
  manifest["started_at"] = started;
  manifest["finished_at"] = utc_now();
  write_text_file((inv.out / "manifest.json").string(), manifest.dump(2) + "\n");
  return code;
}

int report_error(std::ostream& err) {
  try {
    throw;
  } catch (const CalibrationFailure& e) {
    err << "calibration failure: " << e.what() << "\n";
    return kCalibrationFailure;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "invalid setting: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const FormatError& e) {
    err << "file format error: " << e.what() << "\n";
    return kDataError;
  } catch (const NonFiniteError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "file system error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
}

Invocation resolve_ingest(const std::string& csv, const std::string& schema) {
  Invocation inv;
  inv.command = "ingest";
  inv.config = {{"schema", TabularSchema::load(schema).to_json()}};
  inv.inputs = {{"csv", csv}};
  return inv;
}

Invocation resolve_synth(const std::optional<std::string>& config, std::optional<std::uint64_t> seed) {
  auto spec = config_from_json<SyntheticSpec>(load_json_or_empty(config));
  if (seed) spec.seed = *seed;
  Invocation inv;
  inv.command = "synth";
  inv.config = spec;
  inv.root_seed = seed;
  return inv;
}

Invocation resolve_train(const std::string& data, const std::optional<std::string>& config,
                         std::optional<std::uint64_t> seed) {
  auto run = config_from_json<RunConfig>(load_json_or_empty(config));
  if (seed) {
    run.frg.train.seed = derive_seed(*seed, 1);
    run.split.seed = derive_seed(*seed, 2);
  }
  if (run.method != Method::vae) method_config(run.method, run.frg).validate();
  Invocation inv;
  inv.command = "train";
  inv.config = run;
  inv.inputs = {{"data", data}};
  inv.root_seed = seed;
  return inv;
}

Invocation resolve_certify(const std::string& model, const std::string& data,
                           const std::optional<std::string>& config, std::optional<double> epsilon,
                           std::optional<double> delta) {
  FrgConfig frg;
  if (config) {
    frg = config_from_json<FrgConfig>(read_json_file(*config));
  } else if (const auto bytes = read_binary_file(model); peek_magic(bytes) == "FRGO") {
    frg = load_output(bytes).output.config;
  }
  if (epsilon) frg.epsilon = *epsilon;
  if (delta) frg.delta = *delta;
  frg.validate();
  Invocation inv;
  inv.command = "certify";
  inv.config = frg;
  inv.inputs = {{"model", model}, {"data", data}};
  return inv;
}

Invocation resolve_experiment(const std::string& data, const std::optional<std::string>& config,
                              std::optional<std::uint64_t> seed) {
  auto protocol = config_from_json<ProtocolConfig>(load_json_or_empty(config));
  if (seed) protocol.seed = *seed;
  protocol.validate();
  Invocation inv;
  inv.command = "experiment";
  inv.config = protocol;
  inv.inputs = {{"data", data}};
  inv.root_seed = seed;
  return inv;
}

Invocation resolve_calibrate(const std::string& data, double epsilon,
                             const std::optional<std::string>& config, std::optional<std::uint64_t> seed) {
  auto cc = config_from_json<CalibrationConfig>(load_json_or_empty(config));
  if (seed) {
    cc.train.seed = derive_seed(*seed, 1);
    cc.downstream.seed = derive_seed(*seed, 2);
  }
  cc.validate(epsilon);
  Invocation inv;
  inv.command = "calibrate";
  inv.config = {{"epsilon", epsilon}, {"calibration", cc}};
  inv.inputs = {{"data", data}};
  inv.root_seed = seed;
  return inv;
}

Invocation resolve_gradcheck(const std::optional<std::string>& config, std::optional<std::uint64_t> seed,
                             bool corrupt_gradient) {
  auto cfg = config_from_json<GradcheckConfig>(load_json_or_empty(config));
  if (seed) cfg.first_seed = *seed;
  cfg.validate();
  Invocation inv;
  inv.command = "gradcheck";
  inv.config = cfg;
  inv.options = {{"corrupt_gradient", corrupt_gradient}};
  inv.root_seed = seed;
  return inv;
}

Invocation resolve_rerun(const std::string& manifest) {
  const json j = read_json_file(manifest);
  Invocation inv = invocation_from_json(j);
  for (const auto& [role, entry] : j.at("inputs").items()) {
    if (!entry.is_object() || !entry.contains("hash")) continue;
    const std::string path = entry.at("path").get<std::string>();
    if (!fs::exists(path)) throw DataError("input " + role + " (" + path + ") no longer exists");
    if (to_hex(hash_file(path)) != entry.at("hash").get<std::string>()) {
      throw DataError("input " + role + " (" + path + ") changed since the manifest was written");
    }
  }
  return inv;
}

}  // namespace frg::cli
