#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rfsearch/global_search.hpp"
#include "rfsearch/local_search.hpp"
#include "rfsearch/network.hpp"
#include "rfsearch/oracle.hpp"
#include "rfsearch/serialize.hpp"
#include "rfsearch/tasks.hpp"
#include "rfsearch/train.hpp"

namespace rfs {

struct NetworkConfig {
  std::vector<int> kernel_sizes{3, 3, 3, 3};
  std::vector<int> widths{16, 16, 16, 16};
  bool residual = true;
  HeadKind head = HeadKind::Classifier;
  PaddingMode padding = PaddingMode::Causal;
  std::vector<int> dilations;  // searched layers only; empty resolves to all 1
};

// Closed-form fitness instead of training. Without a target, every seed draws its own
// hidden target from the search space.
struct SurrogateConfig {
  std::optional<std::vector<int>> target;
  std::optional<std::vector<int>> decoy;
  double decoy_gap = 1.0;
};

struct GlobalSettings {
  int iterations = 20;
  std::size_t population = 12;
  double p_m = 0.2;
  double p_s = 0.2;
  int epochs = 3;
  int k = 2;
  int T = 10;
  int max_dilation_cap = 0;  // 0 resolves to sequence_length - 1 (or k^T with a surrogate)
  MutationMode mutation_mode = MutationMode::Uniform;
};

struct OracleSettings {
  std::size_t seeds = 20;
  std::size_t budget = 0;  // 0 resolves to population * (iterations + 1)
};

// Permuted-pixel sequences read from IDX files in place of a synthetic task.
struct IdxSource {
  std::filesystem::path images;
  std::filesystem::path labels;
  std::size_t max_items = 0;  // 0 = every item
  double val_fraction = 0.2;
  std::size_t classes = 10;
};

struct ExperimentConfig {
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir = "runs/default";
  std::filesystem::path data_cache_dir;  // empty disables the dataset cache
  TaskSpec task;
  NetworkConfig network;
  TrainConfig train;
  std::optional<SurrogateConfig> surrogate;
  std::optional<GlobalSettings> global;
  std::optional<LocalConfig> local;
  OracleSettings oracle;
  std::optional<IdxSource> idx;

  /// Fills derived defaults (dilations, caps, budget) and validates everything.
  /// Throws ConfigError.
  void resolve();
};

/// Strict parse: unknown keys and wrong types are ConfigErrors. The result is resolved.
ExperimentConfig parse_experiment_config(const Json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Every field, defaults included; parsing the output reproduces the config.
Json to_json(const ExperimentConfig& cfg);

NetworkSpec network_spec(const ExperimentConfig& cfg);
GlobalConfig global_config(const ExperimentConfig& cfg);
/// The synthetic task, or the IDX data when `idx` is set.
TaskData load_data(const ExperimentConfig& cfg);
SurrogateFitness surrogate_for_seed(const ExperimentConfig& cfg, std::uint64_t seed);

enum class OracleMode { Exhaustive, Random, Compare };
OracleMode parse_oracle_mode(std::string_view name);

struct RunOptions {
  std::size_t jobs = 1;
  std::optional<std::string> init;  // genome JSON path, genome string, or "baseline"
  OracleMode oracle_mode = OracleMode::Compare;
};

// Exit codes shared by the commands and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Each command writes the resolved config.json into output_dir first, streams results
/// there, and prints a short summary to `out`. Errors propagate as exceptions
/// (ConfigError for usage problems).
void cmd_global(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out);
void cmd_local(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out);
void cmd_train(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out);
void cmd_oracle(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out);
/// Aggregates every trajectory CSV in `run_dir` into report.csv and summary.txt.
/// Returns kExitUsage when no trajectory rows are found.
int cmd_report(const std::filesystem::path& run_dir, std::ostream& out, std::ostream& err);

/// Resolves --init against the network: "baseline" gives all ones, an existing file is read
/// as genome JSON, anything else is parsed as a genome string.
DilationGenome resolve_initial_genome(const ExperimentConfig& cfg,
                                      const std::optional<std::string>& init);

}  // namespace rfs
