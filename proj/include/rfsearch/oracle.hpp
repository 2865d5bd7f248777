#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rfsearch/genome.hpp"
#include "rfsearch/train.hpp"

namespace rfs {

/// Closed-form stand-in for trained fitness: -sum_l (log2 d_l - log2 t_l)^2, maximized
/// (at 0) exactly at the hidden target. The deceptive variant adds a second, lower peak
/// at `decoy` with height -decoy_gap.
struct SurrogateFitness {
  DilationGenome hidden_target;
  std::optional<DilationGenome> decoy;
  double decoy_gap = 1.0;

  double operator()(const DilationGenome& genome) const;
  /// Adapter to the Trainer callback shape (epochs and seed are ignored).
  Trainer as_trainer() const;
};

using FitnessFn = std::function<double(const DilationGenome&)>;

struct RankedGenome {
  DilationGenome genome;
  double fitness = 0.0;
};

/// Number of genomes in space^L, saturating at UINT64_MAX.
std::uint64_t space_volume(const SearchSpace& space, std::size_t num_layers);

/// Every genome of space^L sorted by fitness descending, ties by genome ascending.
/// Throws std::length_error (message carries the size) when the space exceeds `limit`.
std::vector<RankedGenome> exhaustive_rank(const SearchSpace& space, std::size_t num_layers,
                                          const FitnessFn& fitness,
                                          std::uint64_t limit = 1'000'000);

struct RandomSearchResult {
  RankedGenome best;
  std::vector<double> running_best;  // running_best[i] = best fitness after i+1 draws
};

/// `budget` i.i.d. uniform genomes; returns the best and the running-best trajectory.
RandomSearchResult random_search(const SearchSpace& space, std::size_t num_layers,
                                 std::size_t budget, const FitnessFn& fitness, std::uint64_t seed);

}  // namespace rfs
