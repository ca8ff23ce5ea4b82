#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "cli.hpp"

namespace {

using frg::cli::Invocation;

struct Common {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned workers = 0;
};

void add_common(CLI::App* cmd, Common& c, bool with_seed = true) {
  cmd->add_option("--config", c.config, "JSON config file (defaults fill missing keys)")->check(CLI::ExistingFile);
  if (with_seed) cmd->add_option("--seed", c.seed, "Root seed; overrides the seeds in the config");
  cmd->add_option("--out", c.out, "Output directory")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fair representation learning with high-confidence parity guarantees"};
  app.require_subcommand(1);
  app.set_version_flag("--version", FRG_VERSION);

  Common common;
  std::string csv, schema, data, model, manifest;
  std::optional<double> epsilon, delta;
  double cal_epsilon = 0.0;
  bool corrupt = false;

  auto* ingest = app.add_subcommand("ingest", "Encode a CSV per a schema into a dataset cache");
  ingest->add_option("--csv", csv, "Source CSV with a header row")->required()->check(CLI::ExistingFile);
  ingest->add_option("--schema", schema, "Schema JSON")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", common.out, "Output directory")->required();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  add_common(synth, common);

  auto* train = app.add_subcommand("train", "Run FRG (or a plain VAE) on a dataset");
  train->add_option("--data", data, "Dataset cache (.frgd)")->required()->check(CLI::ExistingFile);
  add_common(train, common);

  auto* certify = app.add_subcommand("certify", "Run the fairness test for a trained model on a dataset");
  certify->add_option("--model", model, "Model (.frgm) or FRG output (.frgo)")->required()->check(CLI::ExistingFile);
  certify->add_option("--data", data, "Dataset cache (.frgd)")->required()->check(CLI::ExistingFile);
  certify->add_option("--epsilon", epsilon, "Parity tolerance");
  certify->add_option("--delta", delta, "Confidence level 1 - delta");
  add_common(certify, common, false);

  auto* experiment = app.add_subcommand("experiment", "Multi-trial resampling experiment");
  experiment->add_option("--data", data, "Dataset cache (.frgd)")->required()->check(CLI::ExistingFile);
  experiment->add_option("--workers", common.workers, "Concurrent trials (default: hardware threads)");
  add_common(experiment, common);

  auto* calibrate = app.add_subcommand("calibrate", "Calibrate the practical-mode adjustment");
  calibrate->add_option("--data", data, "Candidate-selection dataset cache (.frgd)")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--epsilon", cal_epsilon, "Parity tolerance")->required();
  add_common(calibrate, common);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the training objectives");
  gradcheck->add_flag("--corrupt-gradient", corrupt, "Perturb one analytic gradient (checker self-test)");
  add_common(gradcheck, common);

  auto* rerun = app.add_subcommand("rerun", "Replay a command from its manifest.json");
  rerun->add_option("--manifest", manifest, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
  rerun->add_option("--out", common.out, "Output directory")->required();
  rerun->add_option("--workers", common.workers, "Concurrent trials (experiment only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : frg::cli::kUsage;
  }

  try {
    Invocation inv;
    if (*ingest) inv = frg::cli::resolve_ingest(csv, schema);
    else if (*synth) inv = frg::cli::resolve_synth(common.config, common.seed);
    else if (*train) inv = frg::cli::resolve_train(data, common.config, common.seed);
    else if (*certify) inv = frg::cli::resolve_certify(model, data, common.config, epsilon, delta);
    else if (*experiment) inv = frg::cli::resolve_experiment(data, common.config, common.seed);
    else if (*calibrate) inv = frg::cli::resolve_calibrate(data, cal_epsilon, common.config, common.seed);
    else if (*gradcheck) inv = frg::cli::resolve_gradcheck(common.config, common.seed, corrupt);
    else inv = frg::cli::resolve_rerun(manifest);

    inv.out = common.out;
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    inv.workers = common.workers > 0 ? common.workers : (*rerun ? inv.workers : hw);
    return frg::cli::execute(inv, std::cout);
  } catch (...) {
    return frg::cli::report_error(std::cerr);
  }
}
