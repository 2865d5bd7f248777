#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rfsearch/genome.hpp"
#include "rfsearch/multi_dilated.hpp"
#include "rfsearch/network.hpp"
#include "rfsearch/tasks.hpp"
#include "rfsearch/train.hpp"

namespace rfs {

// Rounding applied to the PMF expectation. Floor is the reference rule; nearest is kept
// for diagnostics only.
enum class ExpectationRounding { Floor, Nearest };

ExpectationRounding parse_rounding(std::string_view name);
std::string_view to_string(ExpectationRounding rounding);

struct LocalConfig {
  double delta_fraction = 0.1;   // Delta D_l = max(1, round(delta_fraction * D_l))
  std::size_t samples = 3;       // S
  int iterations = 3;
  int epochs_per_iteration = 3;
  double w_init = 1.0;
  bool finalize_parallel = false;
  PmfKind pmf = PmfKind::AbsNormalize;
  bool separate_kernels = false;  // independent per-branch weights (comparison variant)
  int max_dilation_cap = 1 << 20;
  ExpectationRounding rounding = ExpectationRounding::Floor;

  void validate() const;
};

/// T_l: S dilations evenly spaced over [D - dD, D + dD], rounded, clamped to [1, cap] and
/// deduplicated in order. Throws std::invalid_argument for S < 2 or D < 1.
std::vector<int> sample_dilation_set(int dilation, double delta_fraction, std::size_t samples,
                                     int max_dilation_cap = 1 << 20);

/// floor(sum_i alpha_i * d_i), at least 1. A relative slack of 1e-9 absorbs rounding in
/// the weighted sum so that an exactly integral expectation is not floored one below.
int expected_dilation(std::span<const int> dilations, std::span<const double> alpha,
                      ExpectationRounding rounding = ExpectationRounding::Floor);

/// Model trained inside the local search: every searched layer can hold a dilation set
/// with learnable branch coefficients.
class SupernetModel {
 public:
  virtual ~SupernetModel() = default;
  virtual std::size_t num_searched_layers() const = 0;
  /// Installs T_l on layer `layer` with every coefficient set to `w_init`.
  virtual void configure_layer(std::size_t layer, std::span<const int> dilations,
                               double w_init) = 0;
  /// Fixes layer `layer` to a single dilation (no coefficients).
  virtual void fix_layer(std::size_t layer, int dilation) = 0;
  /// Trains shared kernels and coefficients jointly.
  virtual void train(int epochs) = 0;
  /// Current PMF over the layer's dilation set.
  virtual std::vector<double> layer_pmf(std::size_t layer) const = 0;
};

/// SupernetModel backed by Network training on a task.
class NetworkSupernet : public SupernetModel {
 public:
  NetworkSupernet(NetworkSpec spec, const DilationGenome& initial, const TaskData& data,
                  TrainConfig train, PmfKind kind, bool separate_kernels, std::uint64_t seed);

  std::size_t num_searched_layers() const override { return net_.num_searched(); }
  void configure_layer(std::size_t layer, std::span<const int> dilations, double w_init) override;
  void fix_layer(std::size_t layer, int dilation) override;
  void train(int epochs) override;
  std::vector<double> layer_pmf(std::size_t layer) const override;

  const Network& network() const { return net_; }

 private:
  Network net_;
  const TaskData& data_;
  TrainConfig train_;
  bool separate_kernels_;
  Rng rng_;
};

struct LocalIterationRow {
  int iteration = 0;
  std::size_t layer = 0;
  std::vector<int> dilation_set;
  std::vector<double> alpha;
  int new_dilation = 0;
  bool skipped = false;  // degenerate T_l
};

struct LocalSearchResult {
  DilationGenome genome;
  std::optional<ParallelStructure> parallel;
  std::vector<LocalIterationRow> trajectory;
};

/// Expectation-guided iterative refinement: per iteration build T_l around every layer's
/// dilation, reset W to w_init, train, and move each layer to the PMF expectation.
LocalSearchResult run_local_search(const DilationGenome& initial, const LocalConfig& cfg,
                                   SupernetModel& model, std::span<const int> kernel_sizes = {});

}  // namespace rfs
