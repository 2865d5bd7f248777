#include "rfsearch/tasks.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "rfsearch/rng.hpp"

namespace rfs {

TaskKind parse_task_kind(std::string_view name) {
  if (name == "lagged_copy") return TaskKind::LaggedCopy;
  if (name == "multiscale_sum") return TaskKind::MultiscaleSum;
  if (name == "noisy_event_span") return TaskKind::NoisyEventSpan;
  throw std::invalid_argument("unknown task kind: " + std::string(name));
}

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::LaggedCopy: return "lagged_copy";
    case TaskKind::MultiscaleSum: return "multiscale_sum";
    case TaskKind::NoisyEventSpan: return "noisy_event_span";
  }
  return "lagged_copy";
}

void TaskSpec::validate() const {
  if (sequence_length < 1) throw std::invalid_argument("task: sequence_length must be >= 1");
  if (train_size < 1 || val_size < 1) throw std::invalid_argument("task: empty split");
  switch (kind) {
    case TaskKind::LaggedCopy:
      if (lag >= sequence_length) {
        throw std::invalid_argument("lagged_copy: lag " + std::to_string(lag) +
                                    " must be smaller than sequence_length " +
                                    std::to_string(sequence_length));
      }
      if (vocab < 2) throw std::invalid_argument("lagged_copy: vocab must be >= 2");
      if (symbol_hold < 1) throw std::invalid_argument("lagged_copy: symbol_hold must be >= 1");
      break;
    case TaskKind::MultiscaleSum:
      if (windows.empty()) throw std::invalid_argument("multiscale_sum: no windows");
      if (windows.size() > 8) throw std::invalid_argument("multiscale_sum: at most 8 windows");
      for (std::size_t j = 0; j < windows.size(); ++j) {
        if (windows[j] < 1) throw std::invalid_argument("multiscale_sum: window < 1");
        if (j > 0 && windows[j] <= windows[j - 1]) {
          throw std::invalid_argument("multiscale_sum: windows must be strictly increasing");
        }
      }
      if (windows.back() > sequence_length) {
        throw std::invalid_argument("multiscale_sum: window longer than the sequence");
      }
      break;
    case TaskKind::NoisyEventSpan:
      if (span < 1 || span > sequence_length) {
        throw std::invalid_argument("noisy_event_span: span must lie in [1, sequence_length]");
      }
      if (event_types < 1) throw std::invalid_argument("noisy_event_span: event_types < 1");
      if (!(event_rate > 0.0 && event_rate <= 1.0)) {
        throw std::invalid_argument("noisy_event_span: event_rate must lie in (0, 1]");
      }
      if (!(noise >= 0.0)) throw std::invalid_argument("noisy_event_span: negative noise");
      break;
  }
}

std::size_t TaskSpec::input_channels() const {
  switch (kind) {
    case TaskKind::LaggedCopy: return vocab;
    case TaskKind::MultiscaleSum: return 1;
    case TaskKind::NoisyEventSpan: return event_types;
  }
  return 1;
}

std::size_t TaskSpec::num_classes() const {
  switch (kind) {
    case TaskKind::LaggedCopy: return vocab;
    case TaskKind::MultiscaleSum: return std::size_t{1} << windows.size();
    case TaskKind::NoisyEventSpan: return event_types + 1;
  }
  return 2;
}

std::size_t TaskSpec::minimal_receptive_field() const {
  switch (kind) {
    case TaskKind::LaggedCopy: return lag + 1;
    case TaskKind::MultiscaleSum: return windows.back();
    case TaskKind::NoisyEventSpan: return span;
  }
  return 1;
}

std::uint64_t TaskSpec::hash() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(kind) << '|' << sequence_length << '|' << train_size << '|' << val_size << '|'
     << seed << '|' << lag << '|' << vocab << '|' << symbol_hold << '|';
  for (auto w : windows) os << w << ',';
  os << '|' << span << '|' << event_types << '|' << event_rate << '|' << noise;
  return fnv1a(os.str());
}

namespace {

Dataset lagged_copy_split(const TaskSpec& spec, std::size_t count, Rng& rng) {
  const std::size_t len = spec.sequence_length;
  Dataset data{SeqBatch(count, spec.vocab, len), LabelBatch(count, len), spec.vocab};
  std::uniform_int_distribution<std::size_t> symbol(0, spec.vocab - 1);
  std::uniform_int_distribution<std::size_t> phase(0, spec.symbol_hold - 1);
  std::vector<std::size_t> seq(len);
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t shift = phase(rng);
    std::size_t current = symbol(rng);
    for (std::size_t t = 0; t < len; ++t) {
      if (t > 0 && (t + shift) % spec.symbol_hold == 0) current = symbol(rng);
      seq[t] = current;
      data.inputs.at(b, current, t) = 1.0;
    }
    for (std::size_t t = 0; t < len; ++t) {
      if (t < spec.lag) {
        data.labels.mask[b * len + t] = 0;
      } else {
        data.labels.label(b, t) = static_cast<int>(seq[t - spec.lag]);
      }
    }
  }
  return data;
}

Dataset multiscale_split(const TaskSpec& spec, std::size_t count, Rng& rng) {
  const std::size_t len = spec.sequence_length;
  Dataset data{SeqBatch(count, 1, len), LabelBatch(count, len), spec.num_classes()};
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> prefix(len + 1);
  for (std::size_t b = 0; b < count; ++b) {
    auto row = data.inputs.row(b, 0);
    for (std::size_t t = 0; t < len; ++t) row[t] = gauss(rng);
    prefix[0] = 0.0;
    for (std::size_t t = 0; t < len; ++t) prefix[t + 1] = prefix[t] + row[t];
    for (std::size_t t = 0; t < len; ++t) {
      int label = 0;
      for (std::size_t j = 0; j < spec.windows.size(); ++j) {
        const std::size_t start = t + 1 >= spec.windows[j] ? t + 1 - spec.windows[j] : 0;
        if (prefix[t + 1] - prefix[start] > 0.0) label |= 1 << j;
      }
      data.labels.label(b, t) = label;
    }
  }
  return data;
}

Dataset event_span_split(const TaskSpec& spec, std::size_t count, Rng& rng) {
  const std::size_t len = spec.sequence_length;
  Dataset data{SeqBatch(count, spec.event_types, len), LabelBatch(count, len), spec.num_classes()};
  std::bernoulli_distribution fires(spec.event_rate);
  std::uniform_int_distribution<std::size_t> type(0, spec.event_types - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t b = 0; b < count; ++b) {
    std::ptrdiff_t last_time = -1;
    std::size_t last_type = 0;
    for (std::size_t t = 0; t < len; ++t) {
      if (fires(rng)) {
        last_time = static_cast<std::ptrdiff_t>(t);
        last_type = type(rng);
        data.inputs.at(b, last_type, t) += 1.0;
      }
      const bool live = last_time >= 0 &&
                        static_cast<std::size_t>(static_cast<std::ptrdiff_t>(t) - last_time) < spec.span;
      data.labels.label(b, t) = live ? static_cast<int>(last_type) + 1 : 0;
    }
    if (spec.noise > 0.0) {
      for (std::size_t c = 0; c < spec.event_types; ++c) {
        for (double& v : data.inputs.row(b, c)) v += spec.noise * gauss(rng);
      }
    }
  }
  return data;
}

template <typename SplitFn>
TaskData generate_splits(const TaskSpec& spec, SplitFn&& split) {
  spec.validate();
  Rng train_rng(derive_seed(spec.seed, "task-train"));
  Rng val_rng(derive_seed(spec.seed, "task-val"));
  TaskData data;
  data.train = split(spec, spec.train_size, train_rng);
  data.val = split(spec, spec.val_size, val_rng);
  return data;
}

}  // namespace

TaskData gen_lagged_copy(const TaskSpec& spec) {
  if (spec.kind != TaskKind::LaggedCopy) throw std::invalid_argument("spec is not lagged_copy");
  return generate_splits(spec, lagged_copy_split);
}

TaskData gen_multiscale_sum(const TaskSpec& spec) {
  if (spec.kind != TaskKind::MultiscaleSum) throw std::invalid_argument("spec is not multiscale_sum");
  return generate_splits(spec, multiscale_split);
}

TaskData gen_noisy_event_span(const TaskSpec& spec) {
  if (spec.kind != TaskKind::NoisyEventSpan) {
    throw std::invalid_argument("spec is not noisy_event_span");
  }
  return generate_splits(spec, event_span_split);
}

TaskData generate_task(const TaskSpec& spec) {
  switch (spec.kind) {
    case TaskKind::LaggedCopy: return gen_lagged_copy(spec);
    case TaskKind::MultiscaleSum: return gen_multiscale_sum(spec);
    case TaskKind::NoisyEventSpan: return gen_noisy_event_span(spec);
  }
  throw std::invalid_argument("unknown task kind");
}

// ---------------------------------------------------------------------------
// On-disk cache

namespace {

static_assert(std::endian::native == std::endian::little,
              "dataset cache files are written in native little-endian order");

void write_doubles(const std::filesystem::path& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

std::vector<double> read_doubles(const std::filesystem::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<double> values(count);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in || in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("unexpected size of " + path.string());
  }
  return values;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const std::string& stem, const Dataset& data,
                  std::uint64_t spec_hash) {
  std::filesystem::create_directories(dir);
  write_doubles(dir / (stem + ".inputs.f64"), data.inputs.data());
  std::vector<double> labels(data.labels.labels.begin(), data.labels.labels.end());
  std::vector<double> mask(data.labels.mask.begin(), data.labels.mask.end());
  write_doubles(dir / (stem + ".labels.f64"), labels);
  write_doubles(dir / (stem + ".mask.f64"), mask);

  nlohmann::json side = {
      {"inputs_shape", {data.inputs.batch(), data.inputs.channels(), data.inputs.length()}},
      {"labels_shape", {data.labels.batch, data.labels.length}},
      {"num_classes", data.num_classes},
      {"dtype", "float64-le"},
      {"spec_hash", spec_hash},
  };
  std::ofstream out(dir / (stem + ".json"));
  out << side.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir, const std::string& stem,
                     std::uint64_t spec_hash) {
  std::ifstream in(dir / (stem + ".json"));
  if (!in) throw std::runtime_error("missing dataset sidecar " + (dir / (stem + ".json")).string());
  const nlohmann::json side = nlohmann::json::parse(in);
  if (side.at("spec_hash").get<std::uint64_t>() != spec_hash) {
    throw std::runtime_error("dataset cache " + stem + " was built from a different task spec");
  }
  const auto shape = side.at("inputs_shape").get<std::vector<std::size_t>>();
  const auto lshape = side.at("labels_shape").get<std::vector<std::size_t>>();
  if (shape.size() != 3 || lshape.size() != 2 || lshape[0] != shape[0] || lshape[1] != shape[2]) {
    throw std::runtime_error("dataset cache " + stem + " has inconsistent shapes");
  }
  Dataset data;
  data.inputs = SeqBatch(shape[0], shape[1], shape[2],
                         read_doubles(dir / (stem + ".inputs.f64"), shape[0] * shape[1] * shape[2]));
  data.labels = LabelBatch(lshape[0], lshape[1]);
  const auto labels = read_doubles(dir / (stem + ".labels.f64"), lshape[0] * lshape[1]);
  const auto mask = read_doubles(dir / (stem + ".mask.f64"), lshape[0] * lshape[1]);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    data.labels.labels[n] = static_cast<int>(labels[n]);
    data.labels.mask[n] = mask[n] != 0.0 ? 1 : 0;
  }
  data.num_classes = side.at("num_classes").get<std::size_t>();
  return data;
}

TaskData generate_task_cached(const TaskSpec& spec, const std::filesystem::path& dir) {
  const std::uint64_t h = spec.hash();
  std::ostringstream stem;
  stem << to_string(spec.kind) << '-' << std::hex << h;
  const std::string base = stem.str();
  if (std::filesystem::exists(dir / (base + "-train.json")) &&
      std::filesystem::exists(dir / (base + "-val.json"))) {
    return {load_dataset(dir, base + "-train", h), load_dataset(dir, base + "-val", h)};
  }
  TaskData data = generate_task(spec);
  save_dataset(dir, base + "-train", data.train, h);
  save_dataset(dir, base + "-val", data.val, h);
  return data;
}

// ---------------------------------------------------------------------------
// IDX

IdxArray read_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open IDX file " + path.string());
  unsigned char magic[4];
  if (!in.read(reinterpret_cast<char*>(magic), 4)) throw std::runtime_error("truncated IDX header");
  if (magic[0] != 0 || magic[1] != 0 || magic[2] != 0x08) {
    throw std::runtime_error("IDX file " + path.string() + " is not an unsigned-byte array");
  }
  IdxArray arr;
  std::size_t total = 1;
  for (int d = 0; d < magic[3]; ++d) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("truncated IDX dims");
    const std::size_t dim = (std::size_t{b[0]} << 24) | (std::size_t{b[1]} << 16) |
                            (std::size_t{b[2]} << 8) | std::size_t{b[3]};
    arr.dims.push_back(dim);
    total *= dim;
  }
  arr.bytes.resize(total);
  if (!in.read(reinterpret_cast<char*>(arr.bytes.data()), static_cast<std::streamsize>(total))) {
    throw std::runtime_error("truncated IDX payload in " + path.string());
  }
  return arr;
}

TaskData load_permuted_pixels(const std::filesystem::path& images,
                              const std::filesystem::path& labels, std::uint64_t perm_seed,
                              std::size_t max_items, double val_fraction) {
  const IdxArray img = read_idx(images);
  const IdxArray lab = read_idx(labels);
  if (img.dims.empty() || lab.dims.size() != 1 || img.dims[0] != lab.dims[0]) {
    throw std::runtime_error("IDX images and labels disagree on item count");
  }
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("val_fraction must lie in (0, 1)");
  }
  const std::size_t items = std::min(img.dims[0], max_items);
  const std::size_t pixels = img.dims[0] == 0 ? 0 : img.bytes.size() / img.dims[0];
  const std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(items * val_fraction));
  if (items < 2 || n_val >= items || pixels == 0) {
    throw std::invalid_argument("not enough IDX items for a train/val split");
  }
  std::vector<std::size_t> perm(pixels);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(perm_seed, "pixel-permutation"));
  std::shuffle(perm.begin(), perm.end(), rng);

  const int classes = 1 + *std::max_element(lab.bytes.begin(), lab.bytes.begin() + static_cast<std::ptrdiff_t>(items));
  auto fill = [&](std::size_t first, std::size_t count) {
    Dataset d{SeqBatch(count, 1, pixels), LabelBatch(count, pixels), static_cast<std::size_t>(classes)};
    std::fill(d.labels.mask.begin(), d.labels.mask.end(), 0);
    for (std::size_t n = 0; n < count; ++n) {
      const std::uint8_t* src = img.bytes.data() + (first + n) * pixels;
      auto row = d.inputs.row(n, 0);
      for (std::size_t p = 0; p < pixels; ++p) row[p] = src[perm[p]] / 255.0;
      d.labels.label(n, pixels - 1) = lab.bytes[first + n];
      d.labels.mask[n * pixels + pixels - 1] = 1;
    }
    return d;
  };
  return {fill(0, items - n_val), fill(items - n_val, n_val)};
}

}  // namespace rfs
