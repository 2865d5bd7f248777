#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rfsearch/layers.hpp"
#include "rfsearch/tensor.hpp"

namespace rfs {

enum class TaskKind { LaggedCopy, MultiscaleSum, NoisyEventSpan };

TaskKind parse_task_kind(std::string_view name);
std::string_view to_string(TaskKind kind);

/// Synthetic framewise classification task with a known receptive-field requirement.
struct TaskSpec {
  TaskKind kind = TaskKind::LaggedCopy;
  std::size_t sequence_length = 256;
  std::size_t train_size = 2000;
  std::size_t val_size = 500;
  std::uint64_t seed = 0;

  // lagged_copy: target(t) = symbol(t - lag). Symbols are drawn i.i.d. and each one is
  // held for `symbol_hold` consecutive frames (1 = a fresh symbol every frame).
  std::size_t lag = 12;
  std::size_t vocab = 4;
  std::size_t symbol_hold = 1;

  // multiscale_sum: Gaussian inputs; label bit j = [sum of the last windows[j] inputs > 0].
  std::vector<std::size_t> windows{4, 32};

  // noisy_event_span: label = 1 + type of the most recent event within `span` frames,
  // else 0; every input channel carries N(0, noise^2).
  std::size_t span = 16;
  std::size_t event_types = 3;
  double event_rate = 0.05;
  double noise = 0.1;

  /// Throws std::invalid_argument for inconsistent parameters.
  void validate() const;
  std::size_t input_channels() const;
  std::size_t num_classes() const;
  /// Smallest causal receptive field that can solve the task.
  std::size_t minimal_receptive_field() const;
  /// Stable hash of every field, used to key on-disk dataset caches.
  std::uint64_t hash() const;
};

struct Dataset {
  SeqBatch inputs;
  LabelBatch labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return inputs.batch(); }
  bool operator==(const Dataset&) const = default;
};

struct TaskData {
  Dataset train;
  Dataset val;
};

TaskData gen_lagged_copy(const TaskSpec& spec);
TaskData gen_multiscale_sum(const TaskSpec& spec);
TaskData gen_noisy_event_span(const TaskSpec& spec);
/// Dispatches on spec.kind.
TaskData generate_task(const TaskSpec& spec);

/// Writes `<stem>.inputs.f64`, `<stem>.labels.f64`, `<stem>.mask.f64` (raw little-endian
/// doubles) and a `<stem>.json` sidecar with shape and spec hash.
void save_dataset(const std::filesystem::path& dir, const std::string& stem, const Dataset& data,
                  std::uint64_t spec_hash);
/// Loads a dataset written by save_dataset; throws std::runtime_error if the sidecar's
/// hash differs from `spec_hash` or the files are inconsistent.
Dataset load_dataset(const std::filesystem::path& dir, const std::string& stem,
                     std::uint64_t spec_hash);
/// generate_task with an on-disk cache under `dir` (created if missing).
TaskData generate_task_cached(const TaskSpec& spec, const std::filesystem::path& dir);

/// Parsed IDX file (the MNIST container format).
struct IdxArray {
  std::vector<std::size_t> dims;
  std::vector<std::uint8_t> bytes;
};
IdxArray read_idx(const std::filesystem::path& path);

/// Permuted-pixel sequence classification from IDX images/labels: every image becomes a
/// 1-channel sequence of its pixels (scaled to [0,1]) under one seeded permutation, and
/// only the final frame carries the label.
TaskData load_permuted_pixels(const std::filesystem::path& images,
                              const std::filesystem::path& labels, std::uint64_t perm_seed,
                              std::size_t max_items, double val_fraction);

}  // namespace rfs
