// rfsearch: receptive-field search experiments from a JSON config.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rfsearch/errors.hpp"
#include "rfsearch/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::optional<std::string> init;
  bool parallel = false;
  std::optional<std::string> pmf;
  std::string mode = "compare";
  std::string run_dir;
  std::optional<std::string> idx_images;
  std::optional<std::string> idx_labels;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "experiment config (JSON)")->required();
  cmd->add_option("--seed", f.seed, "override master_seed");
  cmd->add_option("--jobs", f.jobs, "parallel candidate evaluations")
      ->check(CLI::PositiveNumber);
}

void add_idx(CLI::App* cmd, Flags& f) {
  auto* images = cmd->add_option("--idx-images", f.idx_images, "IDX image file (permuted-pixel task)");
  auto* labels = cmd->add_option("--idx-labels", f.idx_labels, "IDX label file (permuted-pixel task)");
  images->needs(labels);
  labels->needs(images);
}

// Command-line overrides are folded into the JSON so the echoed config reproduces the run.
rfs::ExperimentConfig load(const Flags& f, bool local_overrides) {
  if (!std::filesystem::exists(f.config)) {
    throw rfs::ConfigError("config file not found: " + f.config);
  }
  rfs::Json j = rfs::read_json_file(f.config);
  if (!j.is_object()) throw rfs::ConfigError(f.config + ": top level must be an object");
  if (f.seed) j["master_seed"] = *f.seed;
  if (f.idx_images) {
    if (!j.contains("idx") || j["idx"].is_null()) j["idx"] = rfs::Json::object();
    j["idx"]["images"] = *f.idx_images;
    j["idx"]["labels"] = *f.idx_labels;
  }
  if (local_overrides && (f.parallel || f.pmf)) {
    if (!j.contains("local") || j["local"].is_null()) j["local"] = rfs::Json::object();
    if (f.parallel) j["local"]["finalize_parallel"] = true;
    if (f.pmf) j["local"]["pmf"] = *f.pmf;
  }
  return rfs::parse_experiment_config(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Global-to-local receptive-field search for dilated convnets"};
  app.require_subcommand(1);
  Flags f;

  auto* global = app.add_subcommand("global", "genetic search over coarse dilation combinations");
  add_common(global, f);
  add_idx(global, f);

  auto* local = app.add_subcommand("local", "expectation-guided local refinement");
  add_common(local, f);
  add_idx(local, f);
  local->add_option("--init", f.init, "genome JSON, genome string d1,d2,... or 'baseline'");
  local->add_flag("--parallel", f.parallel, "keep every sampled branch in the final structure");
  local->add_option("--pmf", f.pmf, "coefficient normalization")
      ->check(CLI::IsMember({"abs", "softmax", "sigmoid"}));

  auto* train = app.add_subcommand("train", "train a fixed genome and report metrics");
  add_common(train, f);
  add_idx(train, f);
  train->add_option("--init", f.init, "genome JSON, parallel JSON, genome string or 'baseline'");
  train->add_option("--pmf", f.pmf, "coefficient normalization for parallel structures")
      ->check(CLI::IsMember({"abs", "softmax", "sigmoid"}));

  auto* oracle = app.add_subcommand("oracle", "surrogate runs: exhaustive ranking, random, GA vs random");
  add_common(oracle, f);
  oracle->add_option("--mode", f.mode, "exhaustive | random | compare")
      ->check(CLI::IsMember({"exhaustive", "random", "compare"}));

  auto* report = app.add_subcommand("report", "aggregate trajectory CSVs across seeds");
  report->add_option("run_dir", f.run_dir, "directory with trajectory CSVs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? rfs::kExitOk : rfs::kExitUsage;
  }

  try {
    if (report->parsed()) return rfs::cmd_report(f.run_dir, std::cout, std::cerr);

    rfs::RunOptions opts;
    opts.jobs = f.jobs;
    opts.init = f.init;
    if (global->parsed()) {
      rfs::cmd_global(load(f, false), opts, std::cout);
    } else if (local->parsed()) {
      rfs::cmd_local(load(f, true), opts, std::cout);
    } else if (train->parsed()) {
      rfs::cmd_train(load(f, f.pmf.has_value()), opts, std::cout);
    } else if (oracle->parsed()) {
      opts.oracle_mode = rfs::parse_oracle_mode(f.mode);
      rfs::cmd_oracle(load(f, false), opts, std::cout);
    }
  } catch (const rfs::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rfs::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return rfs::kExitRuntime;
  }
  return rfs::kExitOk;
}
