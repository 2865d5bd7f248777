#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfsearch/rng.hpp"

namespace rfs {

/// Gradually sparse candidate set {k^0, k^1, ..., k^T}, each clamped to the cap.
struct SearchSpace {
  int k = 2;
  int T = 0;
  int max_dilation_cap = 1;
  std::vector<int> candidates;  // strictly increasing, starts at 1

  std::size_t size() const { return candidates.size(); }
  bool contains(int dilation) const;
  // Position of `dilation` in candidates; throws std::out_of_range if absent.
  std::size_t index_of(int dilation) const;
};

/// Throws std::invalid_argument for k < 2, T < 0 or cap < 1.
SearchSpace build_space(int k, int T, int cap);

/// Per-layer dilation rates for the searched (kernel_size > 1) layers of a network.
struct DilationGenome {
  std::vector<int> dilations;
  // Network layer index each gene binds to; empty means genes bind to layers 0..L-1.
  std::vector<std::size_t> layer_map;

  DilationGenome() = default;
  explicit DilationGenome(std::vector<int> d, std::vector<std::size_t> map = {})
      : dilations(std::move(d)), layer_map(std::move(map)) {}

  std::size_t size() const { return dilations.size(); }
  int operator[](std::size_t i) const { return dilations[i]; }

  bool operator==(const DilationGenome& other) const { return dilations == other.dilations; }
  // Lexicographic by dilations; this is the population tie-break order.
  std::strong_ordering operator<=>(const DilationGenome& other) const {
    return dilations <=> other.dilations;
  }
};

/// True when every gene is in [1, cap].
bool genome_valid(const DilationGenome& genome, int cap);
/// True when every gene is a member of the space.
bool genome_in_space(const DilationGenome& genome, const SearchSpace& space);

/// Each gene drawn independently and uniformly from the space's candidates.
DilationGenome random_genome(const SearchSpace& space, std::size_t num_layers, Rng& rng);

/// Causal stacked receptive field 1 + sum_l (kernel_l - 1) * d_l.
/// Throws std::invalid_argument when the lengths differ.
std::int64_t receptive_field(const DilationGenome& genome, std::span<const int> kernel_sizes);

/// "d1,d2,...,dL"
std::string to_genome_string(const DilationGenome& genome);
/// Parses "d1,d2,...,dL"; throws std::invalid_argument on malformed input or a gene < 1.
DilationGenome parse_genome_string(std::string_view text);

/// One evaluated candidate.
struct EvalRecord {
  DilationGenome genome;
  double fitness = 0.0;  // higher is better
  int epochs_trained = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> metrics;
};

/// Best-genome artifact persisted as JSON.
struct GenomeFile {
  DilationGenome genome;
  std::vector<int> kernel_sizes;
  double fitness = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const GenomeFile& other) const = default;
};

}  // namespace rfs
