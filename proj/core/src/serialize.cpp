#include "frg/serialize.hpp"

#include "frg/error.hpp"

namespace frg::nn {

void write_tensors(ByteWriter& w, std::span<const ParamTensor> tensors) {
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.str(t.name);
    w.u64(static_cast<std::uint64_t>(t.values.rows()));
    w.u64(static_cast<std::uint64_t>(t.values.cols()));
    for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.values.cols(); ++c) w.f64(t.values(r, c));
    }
  }
}

std::vector<ParamTensor> read_tensors(ByteReader& r) {
  const std::uint32_t count = r.u32();
  std::vector<ParamTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const auto rows = static_cast<Eigen::Index>(r.u64());
    const auto cols = static_cast<Eigen::Index>(r.u64());
    if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) * 8 > r.remaining()) {
      throw FormatError("tensor '" + name + "' has an impossible shape");
    }
    Matrix m(rows, cols);
    for (Eigen::Index a = 0; a < rows; ++a) {
      for (Eigen::Index b = 0; b < cols; ++b) m(a, b) = r.f64();
    }
    out.emplace_back(std::move(name), std::move(m));
  }
  return out;
}

std::vector<std::uint8_t> save_tensors(std::span<const ParamTensor> tensors) {
  ByteWriter w;
  write_tensors(w, tensors);
  return seal("FRGT", 1, w.bytes());
}

std::vector<ParamTensor> load_tensors(std::span<const std::uint8_t> file) {
  const auto payload = unseal(file, "FRGT", 1);
  ByteReader r(payload);
  auto out = read_tensors(r);
  if (r.remaining() != 0) throw FormatError("trailing bytes after tensors");
  return out;
}

nlohmann::json tensors_to_json(std::span<const ParamTensor> tensors) {
  auto out = nlohmann::json::array();
  for (const auto& t : tensors) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(t.values.cols()));
      for (Eigen::Index c = 0; c < t.values.cols(); ++c) row[static_cast<std::size_t>(c)] = t.values(r, c);
      rows.push_back(row);
    }
    out.push_back({{"name", t.name}, {"shape", {t.values.rows(), t.values.cols()}}, {"values", rows}});
  }
  return out;
}

nlohmann::json mlp_config_to_json(const MlpConfig& cfg) {
  std::vector<std::string> acts;
  for (auto a : cfg.activations) acts.push_back(to_string(a));
  return {{"layer_sizes", cfg.layer_sizes},
          {"activations", acts},
          {"init_scale", cfg.init_scale},
          {"seed", cfg.seed}};
}

MlpConfig mlp_config_from_json(const nlohmann::json& j) {
  MlpConfig cfg;
  cfg.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  for (const auto& a : j.at("activations")) cfg.activations.push_back(activation_from_string(a));
  cfg.init_scale = j.at("init_scale").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

}  // namespace frg::nn
