#include "rfsearch/genome.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace rfs {

bool SearchSpace::contains(int dilation) const {
  return std::binary_search(candidates.begin(), candidates.end(), dilation);
}

std::size_t SearchSpace::index_of(int dilation) const {
  const auto it = std::lower_bound(candidates.begin(), candidates.end(), dilation);
  if (it == candidates.end() || *it != dilation) {
    throw std::out_of_range("dilation " + std::to_string(dilation) + " not in search space");
  }
  return static_cast<std::size_t>(it - candidates.begin());
}

SearchSpace build_space(int k, int T, int cap) {
  if (k < 2) throw std::invalid_argument("build_space: k must be >= 2");
  if (T < 0) throw std::invalid_argument("build_space: T must be >= 0");
  if (cap < 1) throw std::invalid_argument("build_space: cap must be >= 1");

  SearchSpace space{k, T, cap, {}};
  std::int64_t power = 1;
  for (int i = 0; i <= T; ++i) {
    const int value = static_cast<int>(std::min<std::int64_t>(power, cap));
    if (space.candidates.empty() || space.candidates.back() != value) {
      space.candidates.push_back(value);
    }
    if (power >= cap) break;  // every later power clamps to the same value
    power *= k;
  }
  return space;
}

bool genome_valid(const DilationGenome& genome, int cap) {
  return std::all_of(genome.dilations.begin(), genome.dilations.end(),
                     [cap](int d) { return d >= 1 && d <= cap; });
}

bool genome_in_space(const DilationGenome& genome, const SearchSpace& space) {
  return std::all_of(genome.dilations.begin(), genome.dilations.end(),
                     [&space](int d) { return space.contains(d); });
}

DilationGenome random_genome(const SearchSpace& space, std::size_t num_layers, Rng& rng) {
  if (num_layers < 1) throw std::invalid_argument("random_genome: need at least one layer");
  if (space.candidates.empty()) throw std::invalid_argument("random_genome: empty space");
  std::uniform_int_distribution<std::size_t> pick(0, space.candidates.size() - 1);
  DilationGenome genome;
  genome.dilations.reserve(num_layers);
  for (std::size_t l = 0; l < num_layers; ++l) genome.dilations.push_back(space.candidates[pick(rng)]);
  return genome;
}

std::int64_t receptive_field(const DilationGenome& genome, std::span<const int> kernel_sizes) {
  if (kernel_sizes.size() != genome.size()) {
    throw std::invalid_argument("receptive_field: " + std::to_string(kernel_sizes.size()) +
                                " kernel sizes for " + std::to_string(genome.size()) + " genes");
  }
  std::int64_t field = 1;
  for (std::size_t l = 0; l < genome.size(); ++l) {
    field += static_cast<std::int64_t>(kernel_sizes[l] - 1) * genome[l];
  }
  return field;
}

std::string to_genome_string(const DilationGenome& genome) {
  std::string out;
  for (std::size_t l = 0; l < genome.size(); ++l) {
    if (l > 0) out += ',';
    out += std::to_string(genome[l]);
  }
  return out;
}

DilationGenome parse_genome_string(std::string_view text) {
  DilationGenome genome;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string_view token = text.substr(pos, comma - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    int value = 0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc{} || end != token.data() + token.size()) {
      throw std::invalid_argument("malformed genome string: '" + std::string(text) + "'");
    }
    if (value < 1) throw std::invalid_argument("genome string contains a dilation < 1");
    genome.dilations.push_back(value);
    pos = comma + 1;
  }
  return genome;
}

}  // namespace rfs
