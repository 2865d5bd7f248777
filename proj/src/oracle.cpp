#include "rfsearch/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rfs {

namespace {

double log_distance(const DilationGenome& g, const DilationGenome& target) {
  if (g.size() != target.size()) throw std::invalid_argument("surrogate: genome length mismatch");
  double total = 0.0;
  for (std::size_t l = 0; l < g.size(); ++l) {
    const double diff = std::log2(static_cast<double>(g[l])) - std::log2(static_cast<double>(target[l]));
    total += diff * diff;
  }
  return total;
}

}  // namespace

double SurrogateFitness::operator()(const DilationGenome& genome) const {
  const double main = 0.0 - log_distance(genome, hidden_target);
  if (!decoy) return main;
  return std::max(main, 0.0 - log_distance(genome, *decoy) - decoy_gap);
}

Trainer SurrogateFitness::as_trainer() const {
  return [self = *this](const DilationGenome& genome, int, std::uint64_t) {
    TrainerResult result;
    result.fitness = self(genome);
    return result;
  };
}

std::uint64_t space_volume(const SearchSpace& space, std::size_t num_layers) {
  std::uint64_t volume = 1;
  const std::uint64_t base = space.candidates.size();
  for (std::size_t l = 0; l < num_layers; ++l) {
    if (base != 0 && volume > std::numeric_limits<std::uint64_t>::max() / base) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    volume *= base;
  }
  return volume;
}

std::vector<RankedGenome> exhaustive_rank(const SearchSpace& space, std::size_t num_layers,
                                          const FitnessFn& fitness, std::uint64_t limit) {
  if (num_layers < 1 || space.candidates.empty()) {
    throw std::invalid_argument("exhaustive_rank: empty space");
  }
  const std::uint64_t volume = space_volume(space, num_layers);
  if (volume > limit) {
    throw std::length_error("exhaustive_rank: space has " + std::to_string(volume) +
                            " genomes, above the limit of " + std::to_string(limit));
  }
  std::vector<RankedGenome> ranked;
  ranked.reserve(volume);
  std::vector<std::size_t> digits(num_layers, 0);
  for (std::uint64_t n = 0; n < volume; ++n) {
    DilationGenome g;
    for (std::size_t l = 0; l < num_layers; ++l) g.dilations.push_back(space.candidates[digits[l]]);
    const double f = fitness(g);
    ranked.push_back({std::move(g), f});
    for (std::size_t l = num_layers; l-- > 0;) {
      if (++digits[l] < space.candidates.size()) break;
      digits[l] = 0;
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedGenome& a, const RankedGenome& b) {
    if (a.fitness != b.fitness) return a.fitness > b.fitness;
    return a.genome < b.genome;
  });
  return ranked;
}

RandomSearchResult random_search(const SearchSpace& space, std::size_t num_layers,
                                 std::size_t budget, const FitnessFn& fitness, std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("random_search: budget must be >= 1");
  Rng rng(derive_seed(seed, "random-search"));
  RandomSearchResult result;
  result.running_best.reserve(budget);
  for (std::size_t i = 0; i < budget; ++i) {
    DilationGenome g = random_genome(space, num_layers, rng);
    const double f = fitness(g);
    if (i == 0 || f > result.best.fitness ||
        (f == result.best.fitness && g < result.best.genome)) {
      result.best = {std::move(g), f};
    }
    result.running_best.push_back(result.best.fitness);
  }
  return result;
}

}  // namespace rfs
