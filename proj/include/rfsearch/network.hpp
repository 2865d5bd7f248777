#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "rfsearch/adam.hpp"
#include "rfsearch/conv.hpp"
#include "rfsearch/genome.hpp"
#include "rfsearch/multi_dilated.hpp"
#include "rfsearch/tensor.hpp"

namespace rfs {

enum class HeadKind { Classifier, Regressor };

HeadKind parse_head_kind(std::string_view name);  // "classifier" | "regressor"
std::string_view to_string(HeadKind kind);

/// Layer topology of the dilated convnet: L conv+ReLU layers (residual when the channel
/// count is preserved) followed by a 1x1 head.
struct NetworkSpec {
  std::size_t input_channels = 1;
  std::size_t output_channels = 2;  // classes for a classifier head
  std::vector<int> kernel_sizes;
  std::vector<int> widths;
  bool residual = true;
  HeadKind head = HeadKind::Classifier;
  PaddingMode padding = PaddingMode::Causal;

  std::size_t num_layers() const { return kernel_sizes.size(); }
  void validate() const;
  /// Indices of layers with kernel_size > 1; these are the layers a genome binds to.
  std::vector<std::size_t> searched_layers() const;
  /// Kernel sizes of the searched layers, in genome order.
  std::vector<int> searched_kernel_sizes() const;
};

/// Branch set of one searched layer in a finalized parallel structure.
struct ParallelLayer {
  std::vector<int> dilations;
  std::vector<double> alphas;
};

/// Local-search output that keeps every T_l branch and its learned mass.
struct ParallelStructure {
  std::vector<ParallelLayer> layers;
  std::vector<int> kernel_sizes;
};

/// Extra trainable parameters of a parallel structure relative to the single-branch
/// network with identical kernels: sum over layers of |T_l|.
std::size_t parallel_param_count(const ParallelStructure& structure);

struct NetworkTape;
struct NetworkGrads;

/// Trainable dilated convnet. Each searched layer is either a single-dilation conv or a
/// multi-dilated layer with branch coefficients.
class Network {
 public:
  Network(NetworkSpec spec, const DilationGenome& genome, std::uint64_t seed);
  Network(NetworkSpec spec, const ParallelStructure& structure, PmfKind kind, std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }
  std::size_t num_searched() const { return searched_.size(); }
  PmfKind pmf_kind() const { return pmf_kind_; }
  void set_pmf_kind(PmfKind kind);

  /// Turns searched layer `s` into a multi-dilated layer over `dilations` with every
  /// coefficient set to `w_init`. The existing kernel is kept (cloned per branch when
  /// `separate_kernels`).
  void set_branches(std::size_t s, std::vector<int> dilations, double w_init,
                    bool separate_kernels = false);
  void set_coefficients(std::size_t s, std::vector<double> coefficients);
  /// Collapses searched layer `s` to a single dilation, keeping the first kernel.
  void set_single(std::size_t s, int dilation);

  bool is_multi(std::size_t s) const;
  const std::vector<int>& dilations(std::size_t s) const;
  const std::vector<double>& coefficients(std::size_t s) const;
  std::vector<double> alphas(std::size_t s) const;
  DilationGenome genome() const;  // first dilation of each searched layer

  std::size_t parameter_count() const;

  SeqBatch forward(const SeqBatch& x, NetworkTape* tape = nullptr) const;
  NetworkGrads backward(const NetworkTape& tape, const SeqBatch& grad_out) const;

  /// Optimizer view over all parameters, paired with `grads`. Branch coefficients get
  /// `coefficient_lr_scale` times the base learning rate.
  std::vector<ParamSlot> param_slots(const NetworkGrads& grads, double coefficient_lr_scale = 1.0);

 private:
  struct Layer {
    MultiDilatedLayerState state;  // single-branch layers hold one dilation, W unused
    bool multi = false;
  };

  void build(std::uint64_t seed);
  std::size_t layer_in_channels(std::size_t l) const;

  NetworkSpec spec_;
  std::vector<std::size_t> searched_;
  std::vector<Layer> layers_;
  ConvKernel head_;
  PmfKind pmf_kind_ = PmfKind::AbsNormalize;
};

struct NetworkTape {
  struct LayerTape {
    ConvTape conv;
    MultiDilatedTape multi;
    bool multi_branch = false;
    SeqBatch pre_activation;
    bool residual = false;
  };
  std::vector<LayerTape> layers;
  ConvTape head;
};

struct NetworkGrads {
  struct LayerGrads {
    std::vector<ConvKernel> kernels;
    std::vector<double> coefficients;
  };
  std::vector<LayerGrads> layers;
  ConvKernel head;
  SeqBatch input;
};

}  // namespace rfs
