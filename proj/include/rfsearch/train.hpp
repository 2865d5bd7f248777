#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "rfsearch/adam.hpp"
#include "rfsearch/genome.hpp"
#include "rfsearch/network.hpp"
#include "rfsearch/tasks.hpp"

namespace rfs {

struct TrainConfig {
  int epochs = 10;
  std::size_t batch_size = 32;
  AdamConfig adam{};
  // Learning rate for branch coefficients W; <= 0 means "same as the model".
  double coefficient_learning_rate = 0.0;

  void validate() const;
  double coefficient_lr_scale() const;
};

struct TrainStats {
  double last_epoch_loss = 0.0;
  int epochs = 0;
};

/// Minibatch Adam over `epochs` passes of `data`, shuffled by `rng`. The optimizer state is
/// fresh for this call. Throws TrainingDiverged on a non-finite loss or gradient.
TrainStats train_epochs(Network& net, const Dataset& data, const TrainConfig& cfg, int epochs,
                        Rng& rng);

/// Framewise accuracy for classifier heads.
double evaluate_accuracy(const Network& net, const Dataset& data, std::size_t chunk = 64);
/// Mean loss over the dataset (softmax NLL for classifiers).
double evaluate_loss(const Network& net, const Dataset& data, std::size_t chunk = 64);

/// Outcome of training one candidate structure.
struct TrainerResult {
  double fitness = 0.0;
  std::map<std::string, double> metrics;
};

/// Candidate-evaluation callback: train `genome` for `epochs` from an initialization
/// derived from `seed` and report validation fitness. Must be deterministic in its
/// arguments and safe to call concurrently.
using Trainer = std::function<TrainerResult(const DilationGenome& genome, int epochs,
                                            std::uint64_t seed)>;

/// Trainer backed by real network training on `data`; fitness = validation accuracy.
/// `data` must outlive the returned callback.
Trainer make_network_trainer(const NetworkSpec& spec, const TaskData& data,
                             const TrainConfig& cfg);

/// Retrains a parallel structure from scratch (T_l frozen, alpha learnable) and reports
/// validation accuracy.
TrainerResult train_parallel_structure(const NetworkSpec& spec, const ParallelStructure& structure,
                                       PmfKind kind, const TaskData& data, const TrainConfig& cfg,
                                       int epochs, std::uint64_t seed);

}  // namespace rfs
