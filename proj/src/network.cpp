#include "rfsearch/network.hpp"

#include <stdexcept>
#include <string>

#include "rfsearch/layers.hpp"

namespace rfs {

HeadKind parse_head_kind(std::string_view name) {
  if (name == "classifier") return HeadKind::Classifier;
  if (name == "regressor") return HeadKind::Regressor;
  throw std::invalid_argument("unknown head kind: " + std::string(name));
}

std::string_view to_string(HeadKind kind) {
  return kind == HeadKind::Classifier ? "classifier" : "regressor";
}

void NetworkSpec::validate() const {
  if (kernel_sizes.empty()) throw std::invalid_argument("network: at least one layer required");
  if (widths.size() != kernel_sizes.size()) {
    throw std::invalid_argument("network: widths and kernel_sizes differ in length");
  }
  if (input_channels < 1 || output_channels < 1) {
    throw std::invalid_argument("network: channel counts must be positive");
  }
  for (std::size_t l = 0; l < kernel_sizes.size(); ++l) {
    if (kernel_sizes[l] < 1) throw std::invalid_argument("network: kernel size < 1");
    if (widths[l] < 1) throw std::invalid_argument("network: width < 1");
    if (padding == PaddingMode::Centered && kernel_sizes[l] % 2 == 0) {
      throw std::invalid_argument("network: centered padding needs odd kernel sizes");
    }
  }
}

std::vector<std::size_t> NetworkSpec::searched_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < kernel_sizes.size(); ++l) {
    if (kernel_sizes[l] > 1) out.push_back(l);
  }
  return out;
}

std::vector<int> NetworkSpec::searched_kernel_sizes() const {
  std::vector<int> out;
  for (int k : kernel_sizes) {
    if (k > 1) out.push_back(k);
  }
  return out;
}

std::size_t parallel_param_count(const ParallelStructure& structure) {
  std::size_t extra = 0;
  for (const auto& layer : structure.layers) extra += layer.dilations.size();
  return extra;
}

Network::Network(NetworkSpec spec, const DilationGenome& genome, std::uint64_t seed)
    : spec_(std::move(spec)) {
  spec_.validate();
  searched_ = spec_.searched_layers();
  if (genome.size() != searched_.size()) {
    throw std::invalid_argument("network: genome has " + std::to_string(genome.size()) +
                                " genes but the network has " + std::to_string(searched_.size()) +
                                " searchable layers");
  }
  build(seed);
  for (std::size_t s = 0; s < searched_.size(); ++s) {
    if (genome[s] < 1) throw std::invalid_argument("network: dilation < 1");
    layers_[searched_[s]].state.dilations = {genome[s]};
  }
}

Network::Network(NetworkSpec spec, const ParallelStructure& structure, PmfKind kind,
                 std::uint64_t seed)
    : spec_(std::move(spec)), pmf_kind_(kind) {
  spec_.validate();
  searched_ = spec_.searched_layers();
  if (structure.layers.size() != searched_.size()) {
    throw std::invalid_argument("network: parallel structure does not match searchable layers");
  }
  build(seed);
  for (std::size_t s = 0; s < searched_.size(); ++s) {
    const auto& pl = structure.layers[s];
    if (pl.dilations.empty() || pl.alphas.size() != pl.dilations.size()) {
      throw std::invalid_argument("network: malformed parallel layer");
    }
    set_branches(s, pl.dilations, 1.0);
    set_coefficients(s, coefficients_for_pmf(pl.alphas, kind));
  }
}

void Network::build(std::uint64_t seed) {
  Rng rng(seed);
  layers_.clear();
  for (std::size_t l = 0; l < spec_.num_layers(); ++l) {
    Layer layer;
    layer.state.kernels.push_back(ConvKernel::uniform_init(
        static_cast<std::size_t>(spec_.widths[l]), layer_in_channels(l),
        static_cast<std::size_t>(spec_.kernel_sizes[l]), rng));
    layer.state.dilations = {1};
    layer.state.coefficients = {1.0};
    layer.state.pmf_kind = pmf_kind_;
    layers_.push_back(std::move(layer));
  }
  head_ = ConvKernel::uniform_init(spec_.output_channels,
                                   static_cast<std::size_t>(spec_.widths.back()), 1, rng);
}

std::size_t Network::layer_in_channels(std::size_t l) const {
  return l == 0 ? spec_.input_channels : static_cast<std::size_t>(spec_.widths[l - 1]);
}

void Network::set_pmf_kind(PmfKind kind) {
  pmf_kind_ = kind;
  for (auto& layer : layers_) layer.state.pmf_kind = kind;
}

void Network::set_branches(std::size_t s, std::vector<int> dilations, double w_init,
                           bool separate_kernels) {
  Layer& layer = layers_.at(searched_.at(s));
  MultiDilatedLayerState next;
  next.dilations = std::move(dilations);
  next.coefficients.assign(next.dilations.size(), w_init);
  next.pmf_kind = pmf_kind_;
  next.kernels.push_back(layer.state.kernels.front());
  if (separate_kernels) {
    while (next.kernels.size() < next.dilations.size()) next.kernels.push_back(next.kernels.front());
  }
  next.validate();
  layer.state = std::move(next);
  layer.multi = true;
}

void Network::set_coefficients(std::size_t s, std::vector<double> coefficients) {
  Layer& layer = layers_.at(searched_.at(s));
  if (!layer.multi) throw std::logic_error("network: layer is single-branch");
  if (coefficients.size() != layer.state.dilations.size()) {
    throw std::invalid_argument("network: coefficient count mismatch");
  }
  layer.state.coefficients = std::move(coefficients);
}

void Network::set_single(std::size_t s, int dilation) {
  if (dilation < 1) throw std::invalid_argument("network: dilation < 1");
  Layer& layer = layers_.at(searched_.at(s));
  layer.state.kernels.resize(1);
  layer.state.dilations = {dilation};
  layer.state.coefficients = {1.0};
  layer.multi = false;
}

bool Network::is_multi(std::size_t s) const { return layers_.at(searched_.at(s)).multi; }

const std::vector<int>& Network::dilations(std::size_t s) const {
  return layers_.at(searched_.at(s)).state.dilations;
}

const std::vector<double>& Network::coefficients(std::size_t s) const {
  return layers_.at(searched_.at(s)).state.coefficients;
}

std::vector<double> Network::alphas(std::size_t s) const {
  const Layer& layer = layers_.at(searched_.at(s));
  if (!layer.multi) return {1.0};
  return pmf(layer.state.coefficients, layer.state.pmf_kind);
}

DilationGenome Network::genome() const {
  DilationGenome g;
  for (std::size_t s = 0; s < searched_.size(); ++s) g.dilations.push_back(dilations(s).front());
  g.layer_map = searched_;
  return g;
}

std::size_t Network::parameter_count() const {
  std::size_t total = head_.parameter_count();
  for (const auto& layer : layers_) {
    for (const auto& k : layer.state.kernels) total += k.parameter_count();
    if (layer.multi) total += layer.state.coefficients.size();
  }
  return total;
}

SeqBatch Network::forward(const SeqBatch& x, NetworkTape* tape) const {
  if (x.channels() != spec_.input_channels) {
    throw std::invalid_argument("network: input has " + std::to_string(x.channels()) +
                                " channels, expected " + std::to_string(spec_.input_channels));
  }
  if (tape != nullptr) tape->layers.assign(layers_.size(), {});
  SeqBatch h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    SeqBatch z;
    if (layer.multi) {
      z = multi_dilated_forward(h, layer.state, spec_.padding,
                                tape != nullptr ? &tape->layers[l].multi : nullptr);
    } else if (tape != nullptr) {
      z = dilated_conv1d_forward(h, layer.state.kernels.front(),
                                 static_cast<std::size_t>(layer.state.dilations.front()),
                                 spec_.padding, tape->layers[l].conv);
    } else {
      z = dilated_conv1d_forward(h, layer.state.kernels.front(),
                                 static_cast<std::size_t>(layer.state.dilations.front()),
                                 spec_.padding);
    }
    SeqBatch a = relu_forward(z);
    const bool residual = spec_.residual && a.channels() == h.channels();
    if (tape != nullptr) {
      tape->layers[l].multi_branch = layer.multi;
      tape->layers[l].pre_activation = std::move(z);
      tape->layers[l].residual = residual;
    }
    h = residual ? residual_add(a, h) : std::move(a);
  }
  if (tape != nullptr) return dilated_conv1d_forward(h, head_, 1, spec_.padding, tape->head);
  return dilated_conv1d_forward(h, head_, 1, spec_.padding);
}

NetworkGrads Network::backward(const NetworkTape& tape, const SeqBatch& grad_out) const {
  if (tape.layers.size() != layers_.size()) {
    throw std::invalid_argument("network backward: tape does not match network");
  }
  NetworkGrads grads;
  grads.layers.resize(layers_.size());
  ConvGrads head = dilated_conv1d_backward(tape.head, grad_out);
  grads.head = std::move(head.grad_kernel);
  SeqBatch g = std::move(head.grad_input);

  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& lt = tape.layers[l];
    SeqBatch gz = relu_backward(lt.pre_activation, g);
    SeqBatch g_in;
    if (lt.multi_branch) {
      MultiDilatedGrads mg = multi_dilated_backward(lt.multi, gz);
      grads.layers[l].kernels = std::move(mg.grad_kernels);
      grads.layers[l].coefficients = std::move(mg.grad_coefficients);
      g_in = std::move(mg.grad_input);
    } else {
      ConvGrads cg = dilated_conv1d_backward(lt.conv, gz);
      grads.layers[l].kernels.push_back(std::move(cg.grad_kernel));
      g_in = std::move(cg.grad_input);
    }
    g = lt.residual ? residual_add(g_in, g) : std::move(g_in);
  }
  grads.input = std::move(g);
  return grads;
}

std::vector<ParamSlot> Network::param_slots(const NetworkGrads& grads,
                                            double coefficient_lr_scale) {
  if (grads.layers.size() != layers_.size()) {
    throw std::invalid_argument("network: gradient layout does not match");
  }
  std::vector<ParamSlot> slots;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Layer& layer = layers_[l];
    const auto& gl = grads.layers[l];
    if (gl.kernels.size() != layer.state.kernels.size()) {
      throw std::invalid_argument("network: gradient kernel count does not match");
    }
    for (std::size_t n = 0; n < layer.state.kernels.size(); ++n) {
      slots.push_back({layer.state.kernels[n].weights, gl.kernels[n].weights, 1.0});
      slots.push_back({layer.state.kernels[n].bias, gl.kernels[n].bias, 1.0});
    }
    if (layer.multi) {
      slots.push_back({layer.state.coefficients, gl.coefficients, coefficient_lr_scale});
    }
  }
  slots.push_back({head_.weights, grads.head.weights, 1.0});
  slots.push_back({head_.bias, grads.head.bias, 1.0});
  return slots;
}

}  // namespace rfs
