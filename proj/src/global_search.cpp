#include "rfsearch/global_search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rfsearch/errors.hpp"
#include "rfsearch/parallel.hpp"

namespace rfs {

MutationMode parse_mutation_mode(std::string_view name) {
  if (name == "uniform") return MutationMode::Uniform;
  if (name == "neighbor") return MutationMode::Neighbor;
  throw std::invalid_argument("unknown mutation mode: " + std::string(name));
}

std::string_view to_string(MutationMode mode) {
  return mode == MutationMode::Uniform ? "uniform" : "neighbor";
}

void GlobalConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("global: iterations N must be >= 1");
  if (population < 2) throw std::invalid_argument("global: population M must be >= 2");
  if (epochs < 1) throw std::invalid_argument("global: early-stop epochs n must be >= 1");
  if (!(p_m >= 0.0 && p_m <= 1.0) || !(p_s >= 0.0 && p_s <= 1.0)) {
    throw std::invalid_argument("global: mutation probabilities must lie in [0, 1]");
  }
  if (num_layers < 1) throw std::invalid_argument("global: genome length must be >= 1");
  if (space.candidates.empty()) throw std::invalid_argument("global: empty search space");
}

std::vector<double> selection_probabilities(std::span<const double> fitness) {
  if (fitness.empty()) throw std::invalid_argument("selection_probabilities: empty population");
  for (double f : fitness) {
    if (!std::isfinite(f)) throw std::invalid_argument("selection_probabilities: non-finite fitness");
  }
  constexpr double kShift = 1e-9;
  std::vector<double> weights(fitness.begin(), fitness.end());
  const double lowest = *std::min_element(weights.begin(), weights.end());
  if (lowest <= 0.0) {
    for (double& w : weights) w = w - lowest + kShift;
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double highest = *std::max_element(weights.begin(), weights.end());
  std::vector<double> probs(weights.size());
  if (!(total > 0.0) || !std::isfinite(total) || highest - lowest == 0.0) {
    std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(probs.size()));
    return probs;
  }
  for (std::size_t i = 0; i < weights.size(); ++i) probs[i] = weights[i] / total;
  return probs;
}

std::vector<double> selection_probabilities(const Population& pop) {
  std::vector<double> fitness;
  fitness.reserve(pop.members.size());
  for (const auto& m : pop.members) fitness.push_back(m.record.fitness);
  return selection_probabilities(fitness);
}

std::pair<DilationGenome, DilationGenome> crossover_segments(const DilationGenome& a,
                                                             const DilationGenome& b,
                                                             std::size_t u, std::size_t v) {
  if (a.size() != b.size()) throw std::invalid_argument("crossover: parents differ in length");
  if (u > v || v > a.size()) throw std::invalid_argument("crossover: invalid anchors");
  DilationGenome first = a;
  DilationGenome second = b;
  for (std::size_t i = u; i < v; ++i) std::swap(first.dilations[i], second.dilations[i]);
  return {std::move(first), std::move(second)};
}

std::pair<DilationGenome, DilationGenome> crossover_segments(const DilationGenome& a,
                                                             const DilationGenome& b, Rng& rng) {
  std::uniform_int_distribution<std::size_t> anchor(0, a.size());
  std::size_t u = anchor(rng);
  std::size_t v = anchor(rng);
  if (u > v) std::swap(u, v);
  return crossover_segments(a, b, u, v);
}

DilationGenome mutate(const DilationGenome& g, const SearchSpace& space, double p_m, double p_s,
                      Rng& rng, MutationMode mode) {
  if (!(p_m >= 0.0 && p_m <= 1.0) || !(p_s >= 0.0 && p_s <= 1.0)) {
    throw std::invalid_argument("mutate: probabilities must lie in [0, 1]");
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (!(coin(rng) < p_m)) return g;
  DilationGenome out = g;
  std::uniform_int_distribution<std::size_t> pick(0, space.candidates.size() - 1);
  for (int& gene : out.dilations) {
    if (!(coin(rng) < p_s)) continue;
    if (mode == MutationMode::Uniform) {
      gene = space.candidates[pick(rng)];
      continue;
    }
    // Neighbor: step to an adjacent candidate (genes outside the space snap to the nearest).
    const auto it = std::lower_bound(space.candidates.begin(), space.candidates.end(), gene);
    auto idx = static_cast<std::ptrdiff_t>(it - space.candidates.begin());
    const auto last = static_cast<std::ptrdiff_t>(space.candidates.size()) - 1;
    if (last == 0) {
      gene = space.candidates.front();
      continue;
    }
    idx = std::min(idx, last);
    const bool up = std::bernoulli_distribution(0.5)(rng);
    idx = up ? (idx == last ? idx - 1 : idx + 1) : (idx == 0 ? 1 : idx - 1);
    gene = space.candidates[static_cast<std::size_t>(idx)];
  }
  return out;
}

EvalRecord evaluate(const DilationGenome& genome, const Trainer& trainer, int epochs,
                    std::uint64_t seed) {
  if (epochs < 1) throw std::invalid_argument("evaluate: epochs must be >= 1");
  EvalRecord record;
  record.genome = genome;
  record.epochs_trained = epochs;
  record.seed = seed;
  try {
    TrainerResult result = trainer(genome, epochs, seed);
    if (!std::isfinite(result.fitness)) throw TrainingDiverged("trainer returned non-finite fitness");
    record.fitness = result.fitness;
    record.metrics = std::move(result.metrics);
  } catch (const TrainingDiverged&) {
    record.fitness = kDivergedFitness;
    record.metrics["diverged"] = 1.0;
  }
  return record;
}

bool survivor_before(const Individual& a, const Individual& b) {
  if (a.record.fitness != b.record.fitness) return a.record.fitness > b.record.fitness;
  if (a.record.genome != b.record.genome) return a.record.genome < b.record.genome;
  return a.candidate_id < b.candidate_id;
}

namespace {

class Evaluator {
 public:
  Evaluator(const Trainer& trainer, int epochs, std::uint64_t seed, std::size_t jobs)
      : trainer_(trainer), epochs_(epochs), seed_(seed), jobs_(jobs) {}

  // Evaluates every genome, training each distinct uncached genome exactly once.
  std::vector<EvalRecord> run(const std::vector<DilationGenome>& genomes,
                              std::vector<double>& wall_time) {
    std::vector<DilationGenome> fresh;
    for (const auto& g : genomes) {
      if (!cache_.contains(g.dilations) &&
          std::find(fresh.begin(), fresh.end(), g) == fresh.end()) {
        fresh.push_back(g);
      }
    }
    std::vector<EvalRecord> fresh_records(fresh.size());
    std::vector<double> fresh_time(fresh.size(), 0.0);
    parallel_for(fresh.size(), jobs_, [&](std::size_t i) {
      const auto start = std::chrono::steady_clock::now();
      fresh_records[i] = evaluate(fresh[i], trainer_, epochs_, seed_);
      fresh_time[i] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });
    evaluations_ += fresh.size();

    std::map<std::vector<int>, double> time_of;
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      cache_.emplace(fresh[i].dilations, fresh_records[i]);
      time_of.emplace(fresh[i].dilations, fresh_time[i]);
    }
    std::vector<EvalRecord> out;
    wall_time.clear();
    for (const auto& g : genomes) {
      EvalRecord rec = cache_.at(g.dilations);
      rec.genome = g;
      out.push_back(std::move(rec));
      auto it = time_of.find(g.dilations);
      if (it != time_of.end()) {
        wall_time.push_back(it->second);
        time_of.erase(it);  // only the first occurrence paid for training
      } else {
        wall_time.push_back(0.0);
      }
    }
    return out;
  }

  std::size_t evaluations() const { return evaluations_; }

 private:
  const Trainer& trainer_;
  int epochs_;
  std::uint64_t seed_;
  std::size_t jobs_;
  std::map<std::vector<int>, EvalRecord> cache_;
  std::size_t evaluations_ = 0;
};

}  // namespace

GlobalSearchResult run_global_search(const GlobalConfig& cfg, const Trainer& trainer,
                                     const GlobalSearchOptions& options) {
  cfg.validate();
  Rng rng(derive_seed(cfg.master_seed, "global-operators"));
  Evaluator evaluator(trainer, cfg.epochs, derive_seed(cfg.master_seed, "evaluation"),
                      options.jobs);
  const std::size_t M = cfg.population;
  std::uint64_t next_id = 0;

  GlobalSearchResult result;
  Population& pop = result.population;
  pop.capacity = M;

  auto publish = [&](int generation, std::vector<Individual> created,
                     std::vector<double> wall_time) {
    result.best_by_generation.push_back(pop.members.front().record.fitness);
    result.created_by_generation.push_back(next_id);
    if (options.on_generation) {
      GenerationReport report;
      report.generation = generation;
      report.created = std::move(created);
      report.wall_time_s = std::move(wall_time);
      report.population = &pop;
      report.evaluations = evaluator.evaluations();
      report.created_total = next_id;
      options.on_generation(report);
    }
  };

  // Generation 0: gradually sparse random initialization.
  std::vector<DilationGenome> initial;
  for (std::size_t i = 0; i < M; ++i) initial.push_back(random_genome(cfg.space, cfg.num_layers, rng));
  std::vector<double> wall;
  std::vector<EvalRecord> records = evaluator.run(initial, wall);
  std::vector<Individual> created;
  for (auto& rec : records) created.push_back({std::move(rec), next_id++});
  pop.members = created;
  std::sort(pop.members.begin(), pop.members.end(), survivor_before);
  pop.generation = 0;
  publish(0, std::move(created), std::move(wall));

  for (int gen = 1; gen <= cfg.iterations; ++gen) {
    const std::vector<double> probs = selection_probabilities(pop);
    std::discrete_distribution<std::size_t> parent(probs.begin(), probs.end());
    const std::size_t draws = M + (M % 2);
    std::vector<std::size_t> parents(draws);
    for (auto& p : parents) p = parent(rng);

    std::vector<DilationGenome> offspring;
    for (std::size_t p = 0; p + 1 < draws; p += 2) {
      auto [first, second] = crossover_segments(pop.members[parents[p]].record.genome,
                                                pop.members[parents[p + 1]].record.genome, rng);
      offspring.push_back(std::move(first));
      offspring.push_back(std::move(second));
    }
    offspring.resize(M);
    for (auto& child : offspring) {
      child = mutate(child, cfg.space, cfg.p_m, cfg.p_s, rng, cfg.mutation_mode);
    }

    records = evaluator.run(offspring, wall);
    created.clear();
    for (auto& rec : records) created.push_back({std::move(rec), next_id++});

    std::vector<Individual> pool = pop.members;
    pool.insert(pool.end(), created.begin(), created.end());
    std::sort(pool.begin(), pool.end(), survivor_before);
    pool.resize(std::min(pool.size(), M));
    pop.members = std::move(pool);
    pop.generation = gen;
    publish(gen, std::move(created), std::move(wall));
  }
  result.evaluations = evaluator.evaluations();
  return result;
}

}  // namespace rfs
