#include "rfsearch/local_search.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rfs {

ExpectationRounding parse_rounding(std::string_view name) {
  if (name == "floor") return ExpectationRounding::Floor;
  if (name == "nearest") return ExpectationRounding::Nearest;
  throw std::invalid_argument("unknown expectation rounding: " + std::string(name));
}

std::string_view to_string(ExpectationRounding rounding) {
  return rounding == ExpectationRounding::Floor ? "floor" : "nearest";
}

void LocalConfig::validate() const {
  if (!(delta_fraction > 0.0 && delta_fraction <= 1.0)) {
    throw std::invalid_argument("local: delta_fraction must lie in (0, 1]");
  }
  if (samples < 2) throw std::invalid_argument("local: S must be >= 2");
  if (iterations < 1) throw std::invalid_argument("local: iterations must be >= 1");
  if (epochs_per_iteration < 1) throw std::invalid_argument("local: epochs_per_iteration must be >= 1");
  if (!std::isfinite(w_init)) throw std::invalid_argument("local: w_init must be finite");
  if (pmf == PmfKind::AbsNormalize && w_init == 0.0) {
    throw std::invalid_argument("local: w_init = 0 leaves abs normalization undefined");
  }
  if (max_dilation_cap < 1) throw std::invalid_argument("local: max_dilation_cap must be >= 1");
}

std::vector<int> sample_dilation_set(int dilation, double delta_fraction, std::size_t samples,
                                     int max_dilation_cap) {
  if (samples < 2) throw std::invalid_argument("sample_dilation_set: S must be >= 2");
  if (dilation < 1) throw std::invalid_argument("sample_dilation_set: dilation must be >= 1");
  if (max_dilation_cap < 1) throw std::invalid_argument("sample_dilation_set: cap must be >= 1");
  const double delta =
      std::max(1.0, static_cast<double>(std::lround(delta_fraction * dilation)));
  const double step = 2.0 * delta / static_cast<double>(samples - 1);
  std::vector<int> out;
  for (std::size_t i = 0; i < samples; ++i) {
    const double raw = dilation - delta + static_cast<double>(i) * step;
    const long rounded = std::lround(raw);
    const int value = static_cast<int>(std::clamp<long>(rounded, 1, max_dilation_cap));
    if (out.empty() || out.back() != value) out.push_back(value);
  }
  return out;
}

int expected_dilation(std::span<const int> dilations, std::span<const double> alpha,
                      ExpectationRounding rounding) {
  if (dilations.size() != alpha.size() || dilations.empty()) {
    throw std::invalid_argument("expected_dilation: size mismatch");
  }
  double expectation = 0.0;
  for (std::size_t i = 0; i < dilations.size(); ++i) expectation += alpha[i] * dilations[i];
  double value = 0.0;
  if (rounding == ExpectationRounding::Floor) {
    value = std::floor(expectation + 1e-9 * std::max(1.0, std::abs(expectation)));
  } else {
    value = std::round(expectation);
  }
  return static_cast<int>(std::max(1.0, value));
}

NetworkSupernet::NetworkSupernet(NetworkSpec spec, const DilationGenome& initial,
                                 const TaskData& data, TrainConfig train, PmfKind kind,
                                 bool separate_kernels, std::uint64_t seed)
    : net_(std::move(spec), initial, derive_seed(seed, "init")), data_(data),
      train_(std::move(train)), separate_kernels_(separate_kernels),
      rng_(derive_seed(seed, "shuffle")) {
  net_.set_pmf_kind(kind);
}

void NetworkSupernet::configure_layer(std::size_t layer, std::span<const int> dilations,
                                      double w_init) {
  net_.set_branches(layer, std::vector<int>(dilations.begin(), dilations.end()), w_init,
                    separate_kernels_);
}

void NetworkSupernet::fix_layer(std::size_t layer, int dilation) { net_.set_single(layer, dilation); }

void NetworkSupernet::train(int epochs) { train_epochs(net_, data_.train, train_, epochs, rng_); }

std::vector<double> NetworkSupernet::layer_pmf(std::size_t layer) const { return net_.alphas(layer); }

LocalSearchResult run_local_search(const DilationGenome& initial, const LocalConfig& cfg,
                                   SupernetModel& model, std::span<const int> kernel_sizes) {
  cfg.validate();
  if (initial.size() != model.num_searched_layers()) {
    throw std::invalid_argument("local search: genome has " + std::to_string(initial.size()) +
                                " genes, model has " +
                                std::to_string(model.num_searched_layers()) + " searched layers");
  }
  if (!genome_valid(initial, cfg.max_dilation_cap)) {
    throw std::invalid_argument("local search: initial genome outside [1, cap]");
  }

  LocalSearchResult result;
  std::vector<int> current = initial.dilations;
  std::vector<std::vector<int>> sets(current.size());
  std::vector<std::vector<double>> alphas(current.size());

  for (int it = 1; it <= cfg.iterations; ++it) {
    for (std::size_t l = 0; l < current.size(); ++l) {
      sets[l] = sample_dilation_set(current[l], cfg.delta_fraction, cfg.samples,
                                    cfg.max_dilation_cap);
      if (sets[l].size() < 2) {
        model.fix_layer(l, current[l]);
      } else {
        model.configure_layer(l, sets[l], cfg.w_init);
      }
    }
    model.train(cfg.epochs_per_iteration);

    for (std::size_t l = 0; l < current.size(); ++l) {
      LocalIterationRow row;
      row.iteration = it;
      row.layer = l;
      row.dilation_set = sets[l];
      if (sets[l].size() < 2) {
        row.alpha = {1.0};
        row.new_dilation = current[l];
        row.skipped = true;
      } else {
        row.alpha = model.layer_pmf(l);
        row.new_dilation =
            std::min(expected_dilation(sets[l], row.alpha, cfg.rounding), cfg.max_dilation_cap);
      }
      alphas[l] = row.alpha;
      result.trajectory.push_back(row);
    }
    for (std::size_t l = 0; l < current.size(); ++l) {
      current[l] = result.trajectory[result.trajectory.size() - current.size() + l].new_dilation;
    }
  }

  result.genome = DilationGenome(current, initial.layer_map);
  if (cfg.finalize_parallel) {
    ParallelStructure structure;
    structure.kernel_sizes.assign(kernel_sizes.begin(), kernel_sizes.end());
    for (std::size_t l = 0; l < current.size(); ++l) {
      structure.layers.push_back({sets[l], alphas[l]});
    }
    result.parallel = std::move(structure);
  }
  return result;
}

}  // namespace rfs
