#include "frg/config.hpp"

#include <set>

#include "frg/error.hpp"
#include "frg/util.hpp"

namespace frg {

using nlohmann::json;

namespace {

/// Reads known keys from an object and rejects the rest.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  template <class T>
  void get(const char* key, T& out) {
    known_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const ConfigError& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    } catch (const Error& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  template <class T, class Parse>
  void get_enum(const char* key, T& out, Parse parse) {
    std::string name;
    get(key, name);
    if (!j_.contains(key)) return;
    try {
      out = parse(name);
    } catch (const Error& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  /// Throws on any key not requested through get().
  void done() const {
    for (const auto& item : j_.items()) {
      if (!known_.contains(item.key())) {
        throw ConfigError("unknown key '" + item.key() + "' in " + where_);
      }
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> known_;
};

}  // namespace

std::string to_string(Likelihood l) { return l == Likelihood::bernoulli ? "bernoulli" : "gaussian"; }

Likelihood likelihood_from_string(const std::string& name) {
  if (name == "bernoulli") return Likelihood::bernoulli;
  if (name == "gaussian") return Likelihood::gaussian;
  throw ConfigError("unknown likelihood '" + name + "' (expected bernoulli or gaussian)");
}

std::string to_string(BoundMethod m) { return m == BoundMethod::student_t ? "student_t" : "hoeffding"; }

BoundMethod bound_method_from_string(const std::string& name) {
  if (name == "student_t") return BoundMethod::student_t;
  if (name == "hoeffding") return BoundMethod::hoeffding;
  throw ConfigError("unknown bound method '" + name + "' (expected student_t or hoeffding)");
}

void to_json(json& j, const RepresentationArch& v) {
  j = {{"latent_dim", v.latent_dim},
       {"encoder_hidden", v.encoder_hidden},
       {"decoder_hidden", v.decoder_hidden},
       {"hidden_activation", nn::to_string(v.hidden_activation)},
       {"likelihood", to_string(v.likelihood)},
       {"init_scale", v.init_scale}};
}

void from_json(const json& j, RepresentationArch& v) {
  Fields f(j, "arch");
  f.get("latent_dim", v.latent_dim);
  f.get("encoder_hidden", v.encoder_hidden);
  f.get("decoder_hidden", v.decoder_hidden);
  f.get_enum("hidden_activation", v.hidden_activation, nn::activation_from_string);
  f.get_enum("likelihood", v.likelihood, likelihood_from_string);
  f.get("init_scale", v.init_scale);
  f.done();
}

void to_json(json& j, const TrainConfig& v) {
  j = {{"epochs", v.epochs}, {"batch_size", v.batch_size}, {"step_size", v.step_size}, {"seed", v.seed}};
}

void from_json(const json& j, TrainConfig& v) {
  Fields f(j, "train");
  f.get("epochs", v.epochs);
  f.get("batch_size", v.batch_size);
  f.get("step_size", v.step_size);
  f.get("seed", v.seed);
  f.done();
}

void to_json(json& j, const DownstreamConfig& v) {
  j = {{"hidden", v.hidden},
       {"activation", nn::to_string(v.activation)},
       {"epochs", v.epochs},
       {"batch_size", v.batch_size},
       {"step_size", v.step_size},
       {"threshold", v.threshold},
       {"seed", v.seed}};
}

void from_json(const json& j, DownstreamConfig& v) {
  Fields f(j, "downstream");
  f.get("hidden", v.hidden);
  f.get_enum("activation", v.activation, nn::activation_from_string);
  f.get("epochs", v.epochs);
  f.get("batch_size", v.batch_size);
  f.get("step_size", v.step_size);
  f.get("threshold", v.threshold);
  f.get("seed", v.seed);
  f.done();
}

void to_json(json& j, const FrgConfig& v) {
  j = {{"epsilon", v.epsilon},
       {"delta", v.delta},
       {"mode", to_string(v.mode)},
       {"adjustment", v.adjustment},
       {"bound_method", to_string(v.bound_method)},
       {"lambda_init", v.lambda_init},
       {"lambda_step", v.lambda_step},
       {"arch", v.arch},
       {"train", v.train},
       {"ablation", v.ablation}};
  if (v.hoeffding_range) {
    j["hoeffding_range"] = {v.hoeffding_range->first, v.hoeffding_range->second};
  } else {
    j["hoeffding_range"] = nullptr;
  }
}

void from_json(const json& j, FrgConfig& v) {
  Fields f(j, "frg");
  f.get("epsilon", v.epsilon);
  f.get("delta", v.delta);
  f.get_enum("mode", v.mode, frg_mode_from_string);
  f.get("adjustment", v.adjustment);
  f.get_enum("bound_method", v.bound_method, bound_method_from_string);
  f.get("lambda_init", v.lambda_init);
  f.get("lambda_step", v.lambda_step);
  f.get("arch", v.arch);
  f.get("train", v.train);
  f.get("ablation", v.ablation);
  json range;
  f.get("hoeffding_range", range);
  if (!range.is_null()) {
    if (!range.is_array() || range.size() != 2 || !range[0].is_number() || !range[1].is_number()) {
      throw ConfigError("frg.hoeffding_range must be [lo, hi] or null");
    }
    v.hoeffding_range = std::make_pair(range[0].get<double>(), range[1].get<double>());
  }
  f.done();
}

void to_json(json& j, const SplitSpec& v) {
  j = {{"candidate_fraction", v.candidate_fraction},
       {"seed", v.seed},
       {"stratify_on_sensitive", v.stratify_on_sensitive}};
}

void from_json(const json& j, SplitSpec& v) {
  Fields f(j, "split");
  f.get("candidate_fraction", v.candidate_fraction);
  f.get("seed", v.seed);
  f.get("stratify_on_sensitive", v.stratify_on_sensitive);
  f.done();
}

void to_json(json& j, const CalibrationConfig& v) {
  j = {{"c", v.c},         {"k", v.k},       {"sweep", v.sweep},
       {"arch", v.arch},   {"train", v.train}, {"task", v.task},
       {"downstream", v.downstream}};
}

void from_json(const json& j, CalibrationConfig& v) {
  Fields f(j, "calibration");
  f.get("c", v.c);
  f.get("k", v.k);
  f.get("sweep", v.sweep);
  f.get("arch", v.arch);
  f.get("train", v.train);
  f.get("task", v.task);
  f.get("downstream", v.downstream);
  f.done();
}

void to_json(json& j, const SyntheticSpec& v) {
  j = {{"n", v.n},
       {"d", v.d},
       {"num_groups", v.num_groups},
       {"priors", v.priors},
       {"leakage", v.leakage},
       {"offset_scale", v.offset_scale},
       {"label_weights", v.label_weights},
       {"label_bias", v.label_bias},
       {"binary_features", v.binary_features},
       {"structure_seed", v.structure_seed},
       {"seed", v.seed}};
}

void from_json(const json& j, SyntheticSpec& v) {
  Fields f(j, "synthetic");
  f.get("n", v.n);
  f.get("d", v.d);
  f.get("num_groups", v.num_groups);
  f.get("priors", v.priors);
  f.get("leakage", v.leakage);
  f.get("offset_scale", v.offset_scale);
  f.get("label_weights", v.label_weights);
  f.get("label_bias", v.label_bias);
  f.get("binary_features", v.binary_features);
  f.get("structure_seed", v.structure_seed);
  f.get("seed", v.seed);
  f.done();
}

namespace {
EmbedMode embed_mode_from_string(const std::string& name) {
  if (name == "mean") return EmbedMode::mean;
  if (name == "sample") return EmbedMode::sample;
  throw ConfigError("unknown embed mode '" + name + "' (expected mean or sample)");
}
}  // namespace

void to_json(json& j, const ProtocolConfig& v) {
  j = {{"method", to_string(v.method)},
       {"n_resamples", v.n_resamples},
       {"fractions", v.fractions},
       {"test_fraction", v.test_fraction},
       {"seed", v.seed},
       {"candidate_fraction", v.candidate_fraction},
       {"frg", v.frg},
       {"downstream", v.downstream},
       {"embed_mode", v.embed_mode == EmbedMode::mean ? "mean" : "sample"},
       {"tasks", v.tasks}};
}

void from_json(const json& j, ProtocolConfig& v) {
  Fields f(j, "experiment");
  f.get_enum("method", v.method, method_from_string);
  f.get("n_resamples", v.n_resamples);
  f.get("fractions", v.fractions);
  f.get("test_fraction", v.test_fraction);
  f.get("seed", v.seed);
  f.get("candidate_fraction", v.candidate_fraction);
  f.get("frg", v.frg);
  f.get("downstream", v.downstream);
  f.get_enum("embed_mode", v.embed_mode, embed_mode_from_string);
  f.get("tasks", v.tasks);
  f.done();
}

void to_json(json& j, const GradcheckConfig& v) {
  j = {{"architectures", v.architectures}, {"seeds", v.seeds},    {"first_seed", v.first_seed},
       {"tolerance", v.tolerance},         {"input_dim", v.input_dim}, {"batch", v.batch}};
}

void from_json(const json& j, GradcheckConfig& v) {
  Fields f(j, "gradcheck");
  f.get("architectures", v.architectures);
  f.get("seeds", v.seeds);
  f.get("first_seed", v.first_seed);
  f.get("tolerance", v.tolerance);
  f.get("input_dim", v.input_dim);
  f.get("batch", v.batch);
  f.done();
}

void to_json(json& j, const RunConfig& v) {
  j = {{"method", to_string(v.method)}, {"frg", v.frg}, {"split", v.split}};
}

void from_json(const json& j, RunConfig& v) {
  Fields f(j, "run");
  f.get_enum("method", v.method, method_from_string);
  f.get("frg", v.frg);
  f.get("split", v.split);
  f.done();
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  return parse_json(read_text_file(path), path.string());
}

std::string fingerprint(const json& j) { return to_hex(fnv1a64(j.dump())); }

}  // namespace frg
