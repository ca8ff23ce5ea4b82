#include "frg/output_io.hpp"

#include <cmath>
#include <limits>

#include "frg/config.hpp"
#include "frg/error.hpp"
#include "frg/serialize.hpp"
#include "frg/util.hpp"

namespace frg {

using nlohmann::json;

namespace {

constexpr std::uint32_t kVersion = 1;

double number_or_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

void write_model(ByteWriter& w, const RepresentationModel& model) {
  const json header{{"input_dim", model.input_dim()},
                    {"num_groups", model.num_groups()},
                    {"arch", model.arch()},
                    {"encoder", nn::mlp_config_to_json(model.encoder().config())},
                    {"decoder", nn::mlp_config_to_json(model.decoder().config())}};
  w.str(header.dump());
  nn::write_tensors(w, model.encoder().params());
  nn::write_tensors(w, model.decoder().params());
}

RepresentationModel read_model(ByteReader& r) {
  const json header = parse_json(r.str(), "model header");
  try {
    auto encoder_params = nn::read_tensors(r);
    auto decoder_params = nn::read_tensors(r);
    nn::Mlp encoder(nn::mlp_config_from_json(header.at("encoder")), std::move(encoder_params));
    nn::Mlp decoder(nn::mlp_config_from_json(header.at("decoder")), std::move(decoder_params));
    return RepresentationModel(header.at("input_dim").get<int>(), header.at("num_groups").get<int>(),
                               config_from_json<RepresentationArch>(header.at("arch")),
                               std::move(encoder), std::move(decoder));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model header: ") + e.what());
  }
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json bound_to_json(const BoundResult& b) {
  return {{"upper", finite_or_null(b.upper)},
          {"sample_mean", finite_or_null(b.sample_mean)},
          {"sample_std", finite_or_null(b.sample_std)},
          {"m", b.m}};
}

BoundResult bound_from_json(const json& j) {
  return {number_or_nan(j.at("upper")), number_or_nan(j.at("sample_mean")),
          number_or_nan(j.at("sample_std")), j.at("m").get<std::size_t>()};
}

json trace_to_json(const std::vector<EpochRecord>& trace) {
  json out = json::array();
  for (const auto& e : trace) {
    out.push_back({{"epoch", e.epoch},
                   {"objective", e.objective},
                   {"elbo", e.elbo},
                   {"constraint", finite_or_null(e.constraint)},
                   {"lambda", e.lambda}});
  }
  return out;
}

std::vector<EpochRecord> trace_from_json(const json& j) {
  std::vector<EpochRecord> out;
  for (const auto& e : j) {
    out.push_back({e.at("epoch").get<int>(), number_or_nan(e.at("objective")),
                   number_or_nan(e.at("elbo")), number_or_nan(e.at("constraint")),
                   number_or_nan(e.at("lambda"))});
  }
  return out;
}

std::vector<std::uint8_t> save_model(const RepresentationModel& model, const json& metadata) {
  ByteWriter w;
  w.str(metadata.dump());
  write_model(w, model);
  return seal("FRGM", kVersion, w.bytes());
}

LoadedModel load_model(std::span<const std::uint8_t> file) {
  const auto payload = unseal(file, "FRGM", kVersion);
  ByteReader r(payload);
  LoadedModel out;
  out.metadata = parse_json(r.str(), "model metadata");
  out.model = read_model(r);
  if (r.remaining() != 0) throw FormatError("trailing bytes after model payload");
  return out;
}

json output_summary(const FrgOutput& output) {
  json j;
  j["status"] = output.is_solution() ? "solution" : "no_solution_found";
  j["certificate"] = bound_to_json(output.certificate());
  j["passed"] = output.certificate().upper <= 0.0;
  j["priors"] = output.priors;
  j["config"] = output.config;
  j["config_fingerprint"] = fingerprint(j["config"]);
  if (output.is_solution()) {
    const auto& s = output.solution();
    j["threshold"] = s.threshold;
    j["guaranteed"] = s.guaranteed;
    j["tested"] = s.tested;
    j["implied_delta_dp"] = s.implied_delta_dp ? json(*s.implied_delta_dp) : json(nullptr);
  } else {
    j["threshold"] = output.no_solution().threshold;
    j["reason"] = output.no_solution().reason;
  }
  return j;
}

std::vector<std::uint8_t> save_output(const FrgOutput& output, const json& metadata) {
  json header = output_summary(output);
  header["trace"] = trace_to_json(output.trace);
  header["metadata"] = metadata;
  ByteWriter w;
  w.str(header.dump());
  w.u8(output.is_solution() ? 1 : 0);
  if (output.is_solution()) write_model(w, output.solution().model);
  return seal("FRGO", kVersion, w.bytes());
}

LoadedOutput load_output(std::span<const std::uint8_t> file) {
  const auto payload = unseal(file, "FRGO", kVersion);
  ByteReader r(payload);
  const json header = parse_json(r.str(), "output header");
  const bool has_model = r.u8() != 0;
  LoadedOutput out;
  try {
    out.output.config = config_from_json<FrgConfig>(header.at("config"));
    out.output.priors = header.at("priors").get<std::vector<double>>();
    out.output.trace = trace_from_json(header.at("trace"));
    out.metadata = header.at("metadata");
    out.config_fingerprint = header.at("config_fingerprint").get<std::string>();
    const BoundResult cert = bound_from_json(header.at("certificate"));
    const double threshold = header.at("threshold").get<double>();
    const bool solution = header.at("status").get<std::string>() == "solution";
    if (solution != has_model) throw FormatError("output status does not match model presence");
    if (solution) {
      FrgSolution s;
      s.model = read_model(r);
      s.certificate = cert;
      s.threshold = threshold;
      s.guaranteed = header.at("guaranteed").get<bool>();
      s.tested = header.at("tested").get<bool>();
      if (!header.at("implied_delta_dp").is_null()) {
        s.implied_delta_dp = header.at("implied_delta_dp").get<double>();
      }
      out.output.result = std::move(s);
    } else {
      out.output.result = FrgNoSolution{header.at("reason").get<std::string>(), cert, threshold};
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed output header: ") + e.what());
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after output payload");
  if (fingerprint(json(out.output.config)) != out.config_fingerprint) {
    throw FormatError("config fingerprint mismatch");
  }
  return out;
}

}  // namespace frg
