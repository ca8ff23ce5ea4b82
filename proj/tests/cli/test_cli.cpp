#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "frg/config.hpp"
#include "frg/dataset_cache.hpp"
#include "frg/error.hpp"
#include "frg/output_io.hpp"
#include "frg/stats_bounds.hpp"
#include "frg/util.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

namespace {

namespace fs = std::filesystem;
using namespace frg;
using frg::cli::Invocation;
using frg::testing_support::TempDir;
using nlohmann::json;

const std::string kSmallArch = R"("arch": {"latent_dim": 3, "encoder_hidden": [8], "decoder_hidden": [8]})";

int run(Invocation inv, const fs::path& out, std::string* log = nullptr) {
  inv.out = out;
  std::ostringstream os;
  const int code = cli::execute(inv, os);
  if (log) *log = os.str();
  return code;
}

std::string synth_data(const TempDir& dir, std::size_t n, double leakage, std::uint64_t seed) {
  const auto cfg = dir.write("synth.json", "{\"n\": " + std::to_string(n) + ", \"d\": 6, \"leakage\": " +
                                               std::to_string(leakage) + "}");
  const fs::path out = dir.path() / ("synth_" + std::to_string(seed));
  EXPECT_EQ(run(cli::resolve_synth(cfg, seed), out), 0);
  return (out / "dataset.frgd").string();
}

std::size_t manifests_in(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().filename() == "manifest.json";
  return n;
}

TEST(CliIngest, ToyCsvStatsMatchHandCount) {
  TempDir dir("frg_cli");
  const auto csv = dir.write("toy.csv", "color,g,y\nred,f,yes\nblue,m,no\nred,m,yes\nblue,f,no\n?,f,no\n");
  const auto schema = dir.write("schema.json", R"({
    "version": 1, "name": "toy",
    "sensitive": {"column": "g", "levels": ["f", "m"]},
    "labels": [{"name": "y", "column": "y", "positive": ["yes"], "negative": ["no"]}],
    "categorical": [{"column": "color", "levels": ["red", "blue"]}],
    "numeric": []})");
  std::string log;
  ASSERT_EQ(run(cli::resolve_ingest(csv, schema), dir.path() / "out", &log), 0);
  const auto stats = read_json_file(dir / "out/stats.json");
  EXPECT_EQ(stats["n"], 4);
  EXPECT_EQ(stats["d"], 2);
  EXPECT_EQ(stats["priors"][0].get<double>(), 0.5);
  EXPECT_EQ(stats["tasks"]["y"]["base_rate"].get<double>(), 0.5);
  // f: yes, no -> 0.5; m: no, yes -> 0.5
  EXPECT_EQ(stats["tasks"]["y"]["delta_dp"].get<double>(), 0.0);
  EXPECT_NE(log.find("dropped (missing) 1"), std::string::npos);
  EXPECT_EQ(load_dataset(dir / "out/dataset.frgd").dataset.size(), 4u);
}

TEST(CliIngest, ErrorsCarryRowNumbers) {
  TempDir dir("frg_cli");
  const auto csv = dir.write("toy.csv", "color,g,y\nred,f,yes\ngreen,m,no\n");
  const auto schema = dir.write("schema.json", R"({
    "version": 1, "name": "toy",
    "sensitive": {"column": "g", "levels": ["f", "m"]},
    "labels": [{"name": "y", "column": "y", "positive": ["yes"]}],
    "categorical": [{"column": "color", "levels": ["red", "blue"]}],
    "numeric": []})");
  try {
    run(cli::resolve_ingest(csv, schema), dir.path() / "out");
    FAIL();
  } catch (...) {
    std::ostringstream err;
    EXPECT_EQ(cli::report_error(err), cli::kDataError);
    EXPECT_NE(err.str().find("3"), std::string::npos) << err.str();
  }
}

TEST(CliIngest, AdultStatsAndCache) {
  TempDir dir("frg_cli");
  const std::string root = std::string(FRG_DATA_DIR) + "/adult/";
  const auto cache = dir.path() / "cache";
  ::setenv("FRG_CACHE_DIR", cache.c_str(), 1);
  std::string first, second;
  const auto inv = cli::resolve_ingest(root + "adult.csv", root + "adult_schema.json");
  ASSERT_EQ(run(inv, dir.path() / "a", &first), 0);
  ASSERT_EQ(run(inv, dir.path() / "b", &second), 0);
  ::unsetenv("FRG_CACHE_DIR");
  EXPECT_EQ(first.find("cache hit"), std::string::npos);
  EXPECT_NE(second.find("cache hit"), std::string::npos);
  EXPECT_EQ(read_text_file(dir / "a/stats.json"), read_text_file(dir / "b/stats.json"));
  EXPECT_EQ(read_binary_file(dir / "a/dataset.frgd"), read_binary_file(dir / "b/dataset.frgd"));
  const auto stats = read_json_file(dir / "a/stats.json");
  EXPECT_EQ(stats["n"], 45222);
  EXPECT_EQ(stats["d"], 117);
  EXPECT_NEAR(stats["priors"][1].get<double>(), 0.668, 0.01);
  EXPECT_NEAR(stats["tasks"]["income"]["delta_dp"].get<double>(), 0.198901432678815, 1e-12);
}

TEST(CliTrain, GuaranteeOnTinyDataIsNsf) {
  TempDir dir("frg_cli");
  const auto data = synth_data(dir, 30, 1.0, 1);
  const auto cfg = dir.write("run.json", "{\"frg\": {\"epsilon\": 0.01, " + kSmallArch + "}}");
  EXPECT_EQ(run(cli::resolve_train(data, cfg, 4), dir.path() / "t"), cli::kNoSolution);
  EXPECT_FALSE(fs::exists(dir.path() / "t/model.frgm"));
  EXPECT_EQ(read_json_file(dir / "t/summary.json")["status"], "no_solution_found");
  EXPECT_EQ(manifests_in(dir.path() / "t"), 1u);
}

TEST(CliTrain, VaeSucceedsAndIsReproducible) {
  TempDir dir("frg_cli");
  const auto data = synth_data(dir, 300, 1.0, 2);
  const auto cfg = dir.write("run.json", "{\"method\": \"vae\", \"frg\": {" + kSmallArch + ", \"train\": {\"epochs\": 3}}}");
  ASSERT_EQ(run(cli::resolve_train(data, cfg, 5), dir.path() / "a"), 0);
  ASSERT_EQ(run(cli::resolve_train(data, cfg, 5), dir.path() / "b"), 0);
  ASSERT_EQ(run(cli::resolve_train(data, cfg, 6), dir.path() / "c"), 0);
  EXPECT_EQ(hash_file(dir / "a/model.frgm"), hash_file(dir / "b/model.frgm"));
  EXPECT_NE(hash_file(dir / "a/model.frgm"), hash_file(dir / "c/model.frgm"));
}

TEST(CliTrain, InvalidConfigIsUsageError) {
  TempDir dir("frg_cli");
  const auto data = synth_data(dir, 100, 1.0, 3);
  const auto cfg = dir.write("run.json", R"({"method": "frg_guarantee", "frg": {"adjustment": 0.3}})");
  try {
    cli::resolve_train(data, cfg, std::nullopt);
    FAIL();
  } catch (...) {
    std::ostringstream err;
    EXPECT_EQ(cli::report_error(err), cli::kUsage);
    EXPECT_NE(err.str().find("adjustment"), std::string::npos) << err.str();
  }
}

TEST(CliCertify, ZeroModelPassesAndReportIsStable) {
  TempDir dir("frg_cli");
  const auto data = synth_data(dir, 200, 1.0, 4);
  RepresentationArch arch;
  arch.latent_dim = 3;
  RepresentationModel m(6, 2, arch, 1);
  for (auto* p : m.encoder().parameter_ptrs()) p->values.setZero();
  write_binary_file(dir / "zero.frgm", save_model(m));
  const auto inv = cli::resolve_certify(dir / "zero.frgm", data, std::nullopt, 0.2, 0.1);
  ASSERT_EQ(run(inv, dir.path() / "a"), 0);
  ASSERT_EQ(run(inv, dir.path() / "b"), 0);
  EXPECT_EQ(read_text_file(dir / "a/certificate.json"), read_text_file(dir / "b/certificate.json"));
  const auto report = read_json_file(dir / "a/certificate.json");
  EXPECT_TRUE(report["passed"].get<bool>());
  EXPECT_DOUBLE_EQ(report["certificate"]["upper"].get<double>(), -report["threshold"].get<double>());
}

TEST(CliCertify, UpperMatchesRecomputationFromExportedValues) {
  TempDir dir("frg_cli");
  const auto data = synth_data(dir, 150, 1.0, 5);
  RepresentationArch arch;
  arch.latent_dim = 3;
  arch.encoder_hidden = {8};
  write_binary_file(dir / "m.frgm", save_model(RepresentationModel(6, 2, arch, 3)));
  const auto inv = cli::resolve_certify(dir / "m.frgm", data, std::nullopt, 0.1, 0.05);
  const int code = run(inv, dir.path() / "c");
  const auto report = read_json_file(dir / "c/certificate.json");
  EXPECT_EQ(code, report["passed"].get<bool>() ? 0 : cli::kNoSolution);
  std::ifstream in(dir / "c/estimates.csv");
  std::string line;
  std::getline(in, line);
  std::vector<double> g;
  while (std::getline(in, line)) g.push_back(std::stod(line.substr(line.find(',') + 1)));
  ASSERT_EQ(g.size(), 150u);
  const double expected =
      oracle::mean(g) + oracle::sample_sd(g) / std::sqrt(150.0) * oracle::t_quantile(0.95, 149);
  EXPECT_NEAR(report["certificate"]["upper"].get<double>(), expected, 1e-6);
}

TEST(CliCertify, SchemaMismatchIsDataError) {
  TempDir dir("frg_cli");
  const auto data = synth_data(dir, 100, 1.0, 6);
  RepresentationArch arch;
  arch.latent_dim = 2;
  write_binary_file(dir / "m.frgm", save_model(RepresentationModel(9, 2, arch, 1)));
  try {
    run(cli::resolve_certify(dir / "m.frgm", data, std::nullopt, 0.2, 0.1), dir.path() / "c");
    FAIL();
  } catch (...) {
    std::ostringstream err;
    EXPECT_EQ(cli::report_error(err), cli::kDataError);
    EXPECT_NE(err.str().find("schema mismatch"), std::string::npos);
  }
}

TEST(CliExperiment, VaeTablesAndRerun) {
  TempDir dir("frg_cli");
  const auto data = synth_data(dir, 300, 1.0, 7);
  const auto cfg = dir.write("exp.json", "{\"method\": \"vae\", \"n_resamples\": 2, \"fractions\": [1.0], \"frg\": {" +
                                             kSmallArch + ", \"train\": {\"epochs\": 2}}, \"downstream\": {\"epochs\": 2}}");
  auto inv = cli::resolve_experiment(data, cfg, 11);
  inv.workers = 2;
  ASSERT_EQ(run(inv, dir.path() / "a"), 0);
  const std::string csv = read_text_file(dir / "a/aggregates_y.csv");
  EXPECT_NE(csv.find("vae,1.000000,2,1.000000,"), std::string::npos) << csv;
  std::ifstream trials(dir / "a/trials.jsonl");
  std::string line;
  std::size_t count = 0;
  while (std::getline(trials, line)) {
    EXPECT_EQ(json::parse(line)["kind"], "solution");
    ++count;
  }
  EXPECT_EQ(count, 2u);

  auto again = cli::resolve_rerun(dir / "a/manifest.json");
  again.workers = 1;
  ASSERT_EQ(run(again, dir.path() / "b"), 0);
  for (const char* f : {"trials.jsonl", "aggregates_y.csv"}) {
    EXPECT_EQ(read_text_file((dir.path() / "a" / f).string()), read_text_file((dir.path() / "b" / f).string())) << f;
  }
  const auto ma = read_json_file(dir / "a/manifest.json");
  const auto mb = read_json_file(dir / "b/manifest.json");
  EXPECT_EQ(ma["outputs"], mb["outputs"]);
  EXPECT_EQ(ma["config"], mb["config"]);
  EXPECT_EQ(manifests_in(dir.path() / "b"), 1u);
}

TEST(CliRerun, ChangedInputRejected) {
  TempDir dir("frg_cli");
  const auto data = synth_data(dir, 100, 1.0, 8);
  const auto cfg = dir.write("run.json", "{\"method\": \"vae\", \"frg\": {" + kSmallArch + ", \"train\": {\"epochs\": 1}}}");
  ASSERT_EQ(run(cli::resolve_train(data, cfg, 1), dir.path() / "a"), 0);
  write_binary_file(data, encode_dataset(load_dataset(synth_data(dir, 120, 1.0, 9)).dataset, {}));
  EXPECT_THROW(cli::resolve_rerun(dir / "a/manifest.json"), DataError);
}

TEST(CliCalibrate, NoQualifyingModelExitsWithCalibrationCode) {
  TempDir dir("frg_cli");
  const auto data = synth_data(dir, 300, 1.0, 10);
  const auto cfg = dir.write("cal.json", "{\"sweep\": [0.0], \"task\": \"y\", \"c\": 0.0, " + kSmallArch +
                                             ", \"train\": {\"epochs\": 2}, \"downstream\": {\"epochs\": 2}}");
  ASSERT_EQ(run(cli::resolve_calibrate(data, 0.9, cfg, 1), dir.path() / "c"), cli::kCalibrationFailure);
  const auto summary = read_json_file(dir / "c/adjustment.json");
  EXPECT_TRUE(summary["adjustment"].is_null());
  EXPECT_EQ(read_text_file(dir / "c/sweep.csv").rfind("penalty,delta_dp,i1,auc,qualified\n", 0), 0u);
}

TEST(CliGradcheck, DefaultsPassCorruptionFails) {
  TempDir dir("frg_cli");
  std::string log;
  ASSERT_EQ(run(cli::resolve_gradcheck(std::nullopt, std::nullopt, false), dir.path() / "ok", &log), 0);
  const auto report = read_json_file(dir / "ok/gradcheck.json");
  EXPECT_TRUE(report["passed"].get<bool>());
  EXPECT_EQ(report["checks"].size(), 2 * GradcheckConfig::default_gradcheck_architectures().size());
  for (const auto& row : report["checks"]) {
    EXPECT_LT(row["max_rel_error"].get<double>(), 1e-4);
  }
  EXPECT_NE(log.find("max_rel_error"), std::string::npos);
  EXPECT_EQ(run(cli::resolve_gradcheck(std::nullopt, std::nullopt, true), dir.path() / "bad"),
            cli::kGradcheckFailure);
  EXPECT_FALSE(read_json_file(dir / "bad/gradcheck.json")["passed"].get<bool>());
}

}  // namespace
