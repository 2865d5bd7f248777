#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "rfsearch/genome.hpp"
#include "rfsearch/rng.hpp"
#include "rfsearch/train.hpp"

namespace rfs {

/// Fitness assigned to candidates whose training diverged.
inline constexpr double kDivergedFitness = -static_cast<double>(std::numeric_limits<float>::max());

enum class MutationMode { Uniform, Neighbor };

MutationMode parse_mutation_mode(std::string_view name);
std::string_view to_string(MutationMode mode);

struct Individual {
  EvalRecord record;
  std::uint64_t candidate_id = 0;
};

struct Population {
  std::vector<Individual> members;
  std::size_t capacity = 0;
  int generation = 0;
};

struct GlobalConfig {
  int iterations = 20;        // N
  std::size_t population = 12;  // M
  double p_m = 0.2;
  double p_s = 0.2;
  int epochs = 3;             // n, early-stop budget per candidate
  SearchSpace space = build_space(2, 10, 1024);
  std::size_t num_layers = 1;  // L
  std::uint64_t master_seed = 0;
  MutationMode mutation_mode = MutationMode::Uniform;

  void validate() const;
};

/// Fitness-proportional selection probabilities. If any fitness is <= 0 the values are
/// shifted to E - min(E) + 1e-9 first.
std::vector<double> selection_probabilities(std::span<const double> fitness);
std::vector<double> selection_probabilities(const Population& pop);

/// Two-point segment crossover with explicit anchors u <= v: genes in [u, v) are swapped.
std::pair<DilationGenome, DilationGenome> crossover_segments(const DilationGenome& a,
                                                             const DilationGenome& b,
                                                             std::size_t u, std::size_t v);
/// Anchors drawn uniformly from {0..L} and ordered.
std::pair<DilationGenome, DilationGenome> crossover_segments(const DilationGenome& a,
                                                             const DilationGenome& b, Rng& rng);

/// With probability p_m the genome is selected; each gene of a selected genome is then
/// resampled with probability p_s (uniformly over the space, or to an adjacent candidate
/// in neighbor mode).
DilationGenome mutate(const DilationGenome& g, const SearchSpace& space, double p_m, double p_s,
                      Rng& rng, MutationMode mode = MutationMode::Uniform);

/// Trains `genome` for `epochs` via `trainer` and packages the record. Divergence yields
/// kDivergedFitness with metrics["diverged"] = 1.
EvalRecord evaluate(const DilationGenome& genome, const Trainer& trainer, int epochs,
                    std::uint64_t seed);

/// Population-level summary emitted after each generation (0 = initial population).
struct GenerationReport {
  int generation = 0;
  std::vector<Individual> created;  // new candidates of this generation, by candidate id
  std::vector<double> wall_time_s;  // parallel to `created`; 0 for cache hits
  const Population* population = nullptr;
  std::size_t evaluations = 0;      // trainer invocations so far
  std::size_t created_total = 0;    // candidates created so far (nominal budget)
};

struct GlobalSearchOptions {
  std::size_t jobs = 1;
  std::function<void(const GenerationReport&)> on_generation;
};

struct GlobalSearchResult {
  Population population;             // sorted by fitness, best first
  std::vector<double> best_by_generation;
  std::vector<std::size_t> created_by_generation;
  std::size_t evaluations = 0;
};

/// Genetic search: initial random population, then per generation fitness-proportional parent draws,
/// segment crossover on consecutive pairs, mutation, evaluation of the M offspring and
/// truncation of parents + offspring to the best M.
GlobalSearchResult run_global_search(const GlobalConfig& cfg, const Trainer& trainer,
                                     const GlobalSearchOptions& options = {});

/// Survivor ordering: fitness descending, then genome ascending, then candidate id.
bool survivor_before(const Individual& a, const Individual& b);

}  // namespace rfs
