#include "rfsearch/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rfsearch/errors.hpp"
#include "rfsearch/layers.hpp"

namespace rfs {

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  AdamState check(adam);  // validates betas/epsilon/lr
  (void)check;
}

double TrainConfig::coefficient_lr_scale() const {
  if (coefficient_learning_rate <= 0.0 || adam.learning_rate <= 0.0) return 1.0;
  return coefficient_learning_rate / adam.learning_rate;
}

namespace {

// Regression targets for a regressor head: one-hot of the class label per frame.
SeqBatch one_hot_targets(const LabelBatch& labels, std::size_t channels) {
  SeqBatch out(labels.batch, channels, labels.length);
  for (std::size_t b = 0; b < labels.batch; ++b) {
    for (std::size_t t = 0; t < labels.length; ++t) {
      const int y = labels.label(b, t);
      if (labels.active(b, t) && y >= 0 && static_cast<std::size_t>(y) < channels) {
        out.at(b, static_cast<std::size_t>(y), t) = 1.0;
      }
    }
  }
  return out;
}

LossResult head_loss(const Network& net, const SeqBatch& out, const LabelBatch& labels) {
  if (net.spec().head == HeadKind::Classifier) return softmax_nll_loss(out, labels);
  return mse_loss(out, one_hot_targets(labels, out.channels()), labels.mask);
}

}  // namespace

TrainStats train_epochs(Network& net, const Dataset& data, const TrainConfig& cfg, int epochs,
                        Rng& rng) {
  cfg.validate();
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  AdamState optimizer(cfg.adam);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  TrainStats stats;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const LabelBatch labels = data.labels.gather(idx);
      if (labels.active_count() == 0) continue;
      NetworkTape tape;
      const SeqBatch out = net.forward(data.inputs.gather(idx), &tape);
      const LossResult loss = head_loss(net, out, labels);
      if (!std::isfinite(loss.loss)) throw TrainingDiverged("train: non-finite loss");
      const NetworkGrads grads = net.backward(tape, loss.grad);
      const auto slots = net.param_slots(grads, cfg.coefficient_lr_scale());
      optimizer.step(slots);
      loss_sum += loss.loss;
      ++batches;
    }
    stats.last_epoch_loss = batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;
    stats.epochs = epoch + 1;
  }
  return stats;
}

namespace {

template <typename Fn>
void for_each_chunk(const Dataset& data, std::size_t chunk, Fn&& fn) {
  if (chunk < 1) chunk = 1;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    const std::size_t stop = std::min(data.size(), start + chunk);
    idx.resize(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    fn(data.inputs.gather(idx), data.labels.gather(idx));
  }
}

}  // namespace

double evaluate_accuracy(const Network& net, const Dataset& data, std::size_t chunk) {
  std::size_t active = 0;
  double correct = 0.0;
  for_each_chunk(data, chunk, [&](const SeqBatch& x, const LabelBatch& y) {
    const std::size_t n = y.active_count();
    if (n == 0) return;
    correct += framewise_accuracy(net.forward(x), y) * static_cast<double>(n);
    active += n;
  });
  if (active == 0) throw std::invalid_argument("evaluate_accuracy: empty mask");
  return correct / static_cast<double>(active);
}

double evaluate_loss(const Network& net, const Dataset& data, std::size_t chunk) {
  double total = 0.0;
  std::size_t active = 0;
  for_each_chunk(data, chunk, [&](const SeqBatch& x, const LabelBatch& y) {
    const std::size_t n = y.active_count();
    if (n == 0) return;
    total += head_loss(net, net.forward(x), y).loss * static_cast<double>(n);
    active += n;
  });
  if (active == 0) throw std::invalid_argument("evaluate_loss: empty mask");
  return total / static_cast<double>(active);
}

Trainer make_network_trainer(const NetworkSpec& spec, const TaskData& data,
                             const TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  return [spec, &data, cfg](const DilationGenome& genome, int epochs,
                            std::uint64_t seed) -> TrainerResult {
    Network net(spec, genome, derive_seed(seed, "init"));
    Rng shuffle(derive_seed(seed, "shuffle"));
    const TrainStats stats = train_epochs(net, data.train, cfg, epochs, shuffle);
    TrainerResult result;
    result.fitness = evaluate_accuracy(net, data.val);
    result.metrics["val_accuracy"] = result.fitness;
    result.metrics["train_loss"] = stats.last_epoch_loss;
    return result;
  };
}

TrainerResult train_parallel_structure(const NetworkSpec& spec, const ParallelStructure& structure,
                                       PmfKind kind, const TaskData& data, const TrainConfig& cfg,
                                       int epochs, std::uint64_t seed) {
  Network net(spec, structure, kind, derive_seed(seed, "init"));
  Rng shuffle(derive_seed(seed, "shuffle"));
  const TrainStats stats = train_epochs(net, data.train, cfg, epochs, shuffle);
  TrainerResult result;
  result.fitness = evaluate_accuracy(net, data.val);
  result.metrics["val_accuracy"] = result.fitness;
  result.metrics["train_loss"] = stats.last_epoch_loss;
  result.metrics["extra_parameters"] = static_cast<double>(parallel_param_count(structure));
  return result;
}

}  // namespace rfs
