#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "rfsearch/conv.hpp"
#include "rfsearch/layers.hpp"
#include "rfsearch/tasks.hpp"
#include "rfsearch/train.hpp"

namespace rfs {
namespace {

TaskSpec lagged(std::size_t lag, std::size_t hold = 1) {
  TaskSpec t;
  t.kind = TaskKind::LaggedCopy;
  t.lag = lag;
  t.symbol_hold = hold;
  t.sequence_length = 48;
  t.train_size = 40;
  t.val_size = 20;
  t.seed = 3;
  return t;
}

int argmax_channel(const SeqBatch& x, std::size_t b, std::size_t t) {
  int best = 0;
  for (std::size_t c = 1; c < x.channels(); ++c)
    if (x.at(b, c, t) > x.at(b, static_cast<std::size_t>(best), t)) best = static_cast<int>(c);
  return best;
}

TEST(Tasks, RegenerationIsBitIdentical) {
  for (TaskKind kind : {TaskKind::LaggedCopy, TaskKind::MultiscaleSum, TaskKind::NoisyEventSpan}) {
    TaskSpec t = lagged(5);
    t.kind = kind;
    const TaskData a = generate_task(t), b = generate_task(t);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.val, b.val);
    t.seed += 1;
    EXPECT_NE(generate_task(t).train, a.train);
  }
}

TEST(Tasks, LaggedCopyTargetsAndMask) {
  const TaskData d = gen_lagged_copy(lagged(7));
  for (std::size_t b = 0; b < d.train.size(); ++b) {
    for (std::size_t t = 0; t < 48; ++t) {
      EXPECT_EQ(d.train.labels.active(b, t), t >= 7);
      if (t >= 7) EXPECT_EQ(d.train.labels.label(b, t), argmax_channel(d.train.inputs, b, t - 7));
    }
  }
  EXPECT_EQ(lagged(7).minimal_receptive_field(), 8u);
}

TEST(Tasks, SymbolHoldRepeatsSymbols) {
  const TaskData d = gen_lagged_copy(lagged(3, 4));
  std::size_t same = 0, total = 0;
  for (std::size_t b = 0; b < d.train.size(); ++b)
    for (std::size_t t = 1; t < 48; ++t, ++total)
      same += argmax_channel(d.train.inputs, b, t) == argmax_channel(d.train.inputs, b, t - 1);
  // Runs of 4 keep the symbol on 3 of 4 transitions, plus chance agreement at boundaries.
  EXPECT_NEAR(static_cast<double>(same) / total, 0.75 + 0.25 * 0.25, 0.05);
}

TEST(Tasks, LagAtLeastLengthIsRejected) {
  EXPECT_THROW(gen_lagged_copy(lagged(48)), std::invalid_argument);
}

TEST(Tasks, ZeroLagIsSolvedByPointwiseNetwork) {
  const TaskData d = gen_lagged_copy(lagged(0));
  NetworkSpec spec;
  spec.input_channels = 4;
  spec.output_channels = 4;
  spec.kernel_sizes = {1};
  spec.widths = {8};
  spec.residual = false;
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.adam.learning_rate = 0.05;
  const auto r = make_network_trainer(spec, d, cfg)(DilationGenome{}, 10, 1);
  EXPECT_EQ(r.fitness, 1.0);
}

TEST(Tasks, MultiscaleLabelsAreWindowSums) {
  TaskSpec t = lagged(0);
  t.kind = TaskKind::MultiscaleSum;
  t.windows = {1, 4, 9};
  const TaskData d = gen_multiscale_sum(t);
  EXPECT_EQ(d.train.num_classes, 8u);
  for (std::size_t b = 0; b < 5; ++b) {
    for (std::size_t tt = 0; tt < 48; ++tt) {
      int label = 0;
      for (std::size_t j = 0; j < 3; ++j) {
        double s = 0;
        for (std::size_t k = 0; k < t.windows[j] && k <= tt; ++k) s += d.train.inputs.at(b, 0, tt - k);
        if (s > 0) label |= 1 << j;
      }
      EXPECT_EQ(d.train.labels.label(b, tt), label);
    }
  }
}

TEST(Tasks, NoisyEventSpanLabels) {
  TaskSpec t = lagged(0);
  t.kind = TaskKind::NoisyEventSpan;
  t.span = 6;
  t.noise = 0.0;
  t.event_rate = 0.1;
  const TaskData d = gen_noisy_event_span(t);
  for (std::size_t b = 0; b < d.train.size(); ++b) {
    int last_type = -1;
    std::ptrdiff_t last_time = -1000;
    for (std::size_t tt = 0; tt < 48; ++tt) {
      for (std::size_t c = 0; c < 3; ++c) {
        if (d.train.inputs.at(b, c, tt) > 0.5) {
          last_type = static_cast<int>(c);
          last_time = static_cast<std::ptrdiff_t>(tt);
        }
      }
      const bool recent = static_cast<std::ptrdiff_t>(tt) - last_time < 6;
      EXPECT_EQ(d.train.labels.label(b, tt), recent ? last_type + 1 : 0);
    }
  }
}

TEST(Tasks, SolvabilityCertificateForLaggedCopy) {
  // conv tap at t-12 copies the one-hot input, ReLU keeps it, a scaled 1x1 head reads it out.
  TaskSpec t = lagged(12);
  t.sequence_length = 64;
  const TaskData d = generate_task(t);
  ConvKernel k(4, 4, 2);
  for (std::size_t c = 0; c < 4; ++c) k.w(c, c, 0) = 1.0;
  ConvKernel head(4, 4, 1);
  for (std::size_t c = 0; c < 4; ++c) head.w(c, c, 0) = 10.0;
  const SeqBatch hidden = relu_forward(dilated_conv1d_forward(d.val.inputs, k, 12));
  const SeqBatch logits = dilated_conv1d_forward(hidden, head, 1);
  EXPECT_GT(framewise_accuracy(logits, d.val.labels), 0.99);
}

TEST(Tasks, ShortReceptiveFieldStaysNearChance) {
  TaskSpec t = lagged(12);
  t.sequence_length = 64;
  t.train_size = 150;
  t.val_size = 60;
  NetworkSpec spec;
  spec.input_channels = 4;
  spec.output_channels = 4;
  spec.kernel_sizes = {2, 2};
  spec.widths = {8, 8};
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.adam.learning_rate = 0.02;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    t.seed = 50 + seed;
    const TaskData d = generate_task(t);
    // receptive field 1 + 4 + 6 = 11 < 13
    const double acc = make_network_trainer(spec, d, cfg)(DilationGenome({4, 6}), 4, seed).fitness;
    EXPECT_LE(acc, 0.25 + 0.05);
  }
}

TEST(Tasks, DatasetCacheRoundTripAndHashCheck) {
  const auto dir = std::filesystem::temp_directory_path() / "rfsearch_cache_test";
  std::filesystem::remove_all(dir);
  TaskSpec t = lagged(4);
  const TaskData a = generate_task_cached(t, dir);
  const TaskData b = generate_task_cached(t, dir);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, generate_task(t).val);
  EXPECT_THROW(load_dataset(dir, "x", 1), std::runtime_error);
  const auto stem = "check";
  save_dataset(dir, stem, a.val, 77);
  EXPECT_EQ(load_dataset(dir, stem, 77), a.val);
  EXPECT_THROW(load_dataset(dir, stem, 78), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(Tasks, IdxPermutedPixels) {
  const auto dir = std::filesystem::temp_directory_path() / "rfsearch_idx_test";
  std::filesystem::create_directories(dir);
  auto be32 = [](std::ofstream& out, std::uint32_t v) {
    const char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
    out.write(b, 4);
  };
  {
    std::ofstream img(dir / "img.idx", std::ios::binary);
    be32(img, 0x00000803);
    be32(img, 4);
    be32(img, 2);
    be32(img, 2);
    for (int i = 0; i < 16; ++i) img.put(static_cast<char>(i * 16));
    std::ofstream lab(dir / "lab.idx", std::ios::binary);
    be32(lab, 0x00000801);
    be32(lab, 4);
    for (int i = 0; i < 4; ++i) lab.put(static_cast<char>(i % 3));
  }
  EXPECT_EQ(read_idx(dir / "img.idx").dims, (std::vector<std::size_t>{4, 2, 2}));
  const TaskData d = load_permuted_pixels(dir / "img.idx", dir / "lab.idx", 1, 4, 0.25);
  EXPECT_EQ(d.train.size() + d.val.size(), 4u);
  EXPECT_EQ(d.train.inputs.length(), 4u);
  EXPECT_EQ(d.train.labels.active_count(), d.train.size());
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace rfs
