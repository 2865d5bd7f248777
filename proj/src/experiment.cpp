#include "rfsearch/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <climits>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "rfsearch/errors.hpp"
#include "rfsearch/stats.hpp"

namespace rfs {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kTrajectoryHeader = "budget,running_best_fitness,seed,method";

void check_keys(const Json& j, const std::string& where,
                std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

template <class T>
bool type_matches(const Json& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v.is_boolean();
  } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
    return v.is_number_unsigned();
  } else if constexpr (std::is_integral_v<T>) {
    return v.is_number_integer();
  } else if constexpr (std::is_floating_point_v<T>) {
    return v.is_number();
  } else if constexpr (std::is_same_v<T, std::string>) {
    return v.is_string();
  } else {
    return true;
  }
}

template <class T>
void read(const Json& j, const std::string& where, const char* key, T& out) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  if (!type_matches<T>(v)) {
    throw ConfigError(where + "." + key + " has the wrong type (" + v.dump() + ")");
  }
  out = v.get<T>();
}

template <class T>
void read_vector(const Json& j, const std::string& where, const char* key, std::vector<T>& out) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + " must be an array");
  std::vector<T> values;
  for (const auto& e : v) {
    if (!type_matches<T>(e)) throw ConfigError(where + "." + key + " has an element of the wrong type");
    values.push_back(e.get<T>());
  }
  out = std::move(values);
}

template <class Parse>
auto read_enum(const Json& j, const std::string& where, const char* key, Parse parse)
    -> std::optional<decltype(parse(std::string_view{}))> {
  if (!j.contains(key)) return std::nullopt;
  if (!j.at(key).is_string()) throw ConfigError(where + "." + key + " must be a string");
  try {
    return parse(j.at(key).get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

TaskSpec parse_task(const Json& j, std::uint64_t master_seed) {
  const std::string w = "task";
  check_keys(j, w, {"kind", "sequence_length", "train_size", "val_size", "seed", "lag", "vocab",
                    "symbol_hold", "windows", "span", "event_types", "event_rate", "noise"});
  TaskSpec t;
  t.seed = master_seed;
  if (auto k = read_enum(j, w, "kind", parse_task_kind)) t.kind = *k;
  read(j, w, "sequence_length", t.sequence_length);
  read(j, w, "train_size", t.train_size);
  read(j, w, "val_size", t.val_size);
  read(j, w, "seed", t.seed);
  read(j, w, "lag", t.lag);
  read(j, w, "vocab", t.vocab);
  read(j, w, "symbol_hold", t.symbol_hold);
  read_vector(j, w, "windows", t.windows);
  read(j, w, "span", t.span);
  read(j, w, "event_types", t.event_types);
  read(j, w, "event_rate", t.event_rate);
  read(j, w, "noise", t.noise);
  return t;
}

NetworkConfig parse_network(const Json& j) {
  const std::string w = "network";
  check_keys(j, w, {"kernel_sizes", "widths", "residual", "head", "padding", "dilations"});
  NetworkConfig n;
  read_vector(j, w, "kernel_sizes", n.kernel_sizes);
  read_vector(j, w, "widths", n.widths);
  read(j, w, "residual", n.residual);
  if (auto h = read_enum(j, w, "head", parse_head_kind)) n.head = *h;
  if (auto p = read_enum(j, w, "padding", parse_padding)) n.padding = *p;
  read_vector(j, w, "dilations", n.dilations);
  return n;
}

TrainConfig parse_train(const Json& j) {
  const std::string w = "train";
  check_keys(j, w, {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon",
                    "coefficient_learning_rate"});
  TrainConfig t;
  read(j, w, "epochs", t.epochs);
  read(j, w, "batch_size", t.batch_size);
  read(j, w, "learning_rate", t.adam.learning_rate);
  read(j, w, "beta1", t.adam.beta1);
  read(j, w, "beta2", t.adam.beta2);
  read(j, w, "epsilon", t.adam.epsilon);
  read(j, w, "coefficient_learning_rate", t.coefficient_learning_rate);
  return t;
}

SurrogateConfig parse_surrogate(const Json& j) {
  const std::string w = "surrogate";
  check_keys(j, w, {"target", "decoy", "decoy_gap"});
  SurrogateConfig s;
  if (j.contains("target") && !j.at("target").is_null()) {
    std::vector<int> t;
    read_vector(j, w, "target", t);
    s.target = t;
  }
  if (j.contains("decoy") && !j.at("decoy").is_null()) {
    std::vector<int> d;
    read_vector(j, w, "decoy", d);
    s.decoy = d;
  }
  read(j, w, "decoy_gap", s.decoy_gap);
  return s;
}

GlobalSettings parse_global(const Json& j) {
  const std::string w = "global";
  check_keys(j, w, {"iterations", "population", "p_m", "p_s", "epochs", "k", "T",
                    "max_dilation_cap", "mutation_mode"});
  GlobalSettings g;
  read(j, w, "iterations", g.iterations);
  read(j, w, "population", g.population);
  read(j, w, "p_m", g.p_m);
  read(j, w, "p_s", g.p_s);
  read(j, w, "epochs", g.epochs);
  read(j, w, "k", g.k);
  read(j, w, "T", g.T);
  read(j, w, "max_dilation_cap", g.max_dilation_cap);
  if (auto m = read_enum(j, w, "mutation_mode", parse_mutation_mode)) g.mutation_mode = *m;
  return g;
}

LocalConfig parse_local(const Json& j, const TaskSpec& task) {
  const std::string w = "local";
  check_keys(j, w, {"delta_fraction", "samples", "iterations", "epochs_per_iteration", "w_init",
                    "finalize_parallel", "pmf", "separate_kernels", "max_dilation_cap",
                    "rounding"});
  LocalConfig l;
  l.max_dilation_cap = static_cast<int>(std::max<std::size_t>(1, task.sequence_length - 1));
  read(j, w, "delta_fraction", l.delta_fraction);
  read(j, w, "samples", l.samples);
  read(j, w, "iterations", l.iterations);
  read(j, w, "epochs_per_iteration", l.epochs_per_iteration);
  read(j, w, "w_init", l.w_init);
  read(j, w, "finalize_parallel", l.finalize_parallel);
  if (auto p = read_enum(j, w, "pmf", parse_pmf_kind)) l.pmf = *p;
  read(j, w, "separate_kernels", l.separate_kernels);
  read(j, w, "max_dilation_cap", l.max_dilation_cap);
  if (auto r = read_enum(j, w, "rounding", parse_rounding)) l.rounding = *r;
  return l;
}

IdxSource parse_idx(const Json& j) {
  const std::string w = "idx";
  check_keys(j, w, {"images", "labels", "max_items", "val_fraction", "classes"});
  IdxSource src;
  std::string path;
  read(j, w, "images", path);
  src.images = path;
  path.clear();
  read(j, w, "labels", path);
  src.labels = path;
  read(j, w, "max_items", src.max_items);
  read(j, w, "val_fraction", src.val_fraction);
  read(j, w, "classes", src.classes);
  for (const auto* p : {&src.images, &src.labels}) {
    if (p->empty()) throw ConfigError("idx.images and idx.labels are both required");
    if (!fs::exists(*p)) throw ConfigError("idx file not found: " + p->string());
  }
  if (!(src.val_fraction > 0.0 && src.val_fraction < 1.0)) {
    throw ConfigError("idx.val_fraction must lie in (0, 1)");
  }
  if (src.classes < 2) throw ConfigError("idx.classes must be >= 2");
  return src;
}

OracleSettings parse_oracle(const Json& j) {
  const std::string w = "oracle";
  check_keys(j, w, {"seeds", "budget"});
  OracleSettings o;
  read(j, w, "seeds", o.seeds);
  read(j, w, "budget", o.budget);
  return o;
}

std::size_t searched_count(const NetworkConfig& n) {
  return static_cast<std::size_t>(
      std::count_if(n.kernel_sizes.begin(), n.kernel_sizes.end(), [](int k) { return k > 1; }));
}

int saturating_power(int k, int T) {
  long long v = 1;
  for (int i = 0; i < T; ++i) {
    v *= k;
    if (v >= INT_MAX) return INT_MAX;
  }
  return static_cast<int>(v);
}

void prepare_output(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  write_json_file(cfg.output_dir / "config.json", to_json(cfg));
}

std::ofstream open_csv(const fs::path& path, std::string_view header) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << header << '\n';
  return out;
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) {
      s += format_double(values[i]);
    } else {
      s += std::to_string(values[i]);
    }
  }
  return s;
}

std::string format_fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

void ExperimentConfig::resolve() {
  try {
    task.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("task: ") + e.what());
  }
  const std::size_t L = searched_count(network);
  if (network.dilations.empty()) network.dilations.assign(L, 1);
  if (network.dilations.size() != L) {
    throw ConfigError("network.dilations has " + std::to_string(network.dilations.size()) +
                      " entries but the network has " + std::to_string(L) + " searched layers");
  }
  for (int d : network.dilations) {
    if (d < 1) throw ConfigError("network.dilations entries must be >= 1");
  }
  try {
    network_spec(*this).validate();
    train.validate();
    if (local) local->validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (L == 0 && (global || local)) throw ConfigError("network has no searched (kernel > 1) layers");
  if (surrogate) {
    for (const auto* g : {&surrogate->target, &surrogate->decoy}) {
      if (!*g) continue;
      if ((*g)->size() != L) {
        throw ConfigError("surrogate genome length must equal the number of searched layers (" +
                          std::to_string(L) + ")");
      }
      for (int d : **g) {
        if (d < 1) throw ConfigError("surrogate genome entries must be >= 1");
      }
    }
  }
  if (global) {
    if (global->max_dilation_cap == 0) {
      global->max_dilation_cap =
          surrogate ? saturating_power(global->k, global->T)
                    : static_cast<int>(std::max<std::size_t>(1, task.sequence_length - 1));
    }
    try {
      global_config(*this).validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("global: ") + e.what());
    }
  }
  if (oracle.seeds < 1) throw ConfigError("oracle.seeds must be >= 1");
  if (oracle.budget == 0) {
    const GlobalSettings g = global.value_or(GlobalSettings{});
    oracle.budget = g.population * static_cast<std::size_t>(g.iterations + 1);
  }
}

ExperimentConfig parse_experiment_config(const Json& j) {
  try {
    check_keys(j, "config", {"master_seed", "output_dir", "data_cache_dir", "task", "network",
                             "train", "surrogate", "global", "local", "oracle", "idx"});
    ExperimentConfig cfg;
    read(j, "config", "master_seed", cfg.master_seed);
    std::string path;
    read(j, "config", "output_dir", path);
    if (!path.empty()) cfg.output_dir = path;
    path.clear();
    read(j, "config", "data_cache_dir", path);
    cfg.data_cache_dir = path;
    cfg.task = parse_task(j.value("task", Json::object()), cfg.master_seed);
    if (j.contains("idx") && !j.at("idx").is_null()) {
      cfg.idx = parse_idx(j.at("idx"));
      // Caps default from the pixel count, so it has to be known before the search blocks.
      std::size_t pixels = 1;
      try {
        const IdxArray header = read_idx(cfg.idx->images);
        if (header.dims.size() < 2) throw ConfigError("idx.images must hold at least 2 dimensions");
        for (std::size_t i = 1; i < header.dims.size(); ++i) pixels *= header.dims[i];
      } catch (const std::runtime_error& e) {
        throw ConfigError(std::string("idx: ") + e.what());
      }
      cfg.task.sequence_length = pixels;
    }
    cfg.network = parse_network(j.value("network", Json::object()));
    cfg.train = parse_train(j.value("train", Json::object()));
    if (j.contains("surrogate") && !j.at("surrogate").is_null()) {
      cfg.surrogate = parse_surrogate(j.at("surrogate"));
    }
    if (j.contains("global") && !j.at("global").is_null()) cfg.global = parse_global(j.at("global"));
    if (j.contains("local") && !j.at("local").is_null()) {
      cfg.local = parse_local(j.at("local"), cfg.task);
    }
    cfg.oracle = parse_oracle(j.value("oracle", Json::object()));
    cfg.resolve();
    return cfg;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  return parse_experiment_config(read_json_file(path));
}

Json to_json(const ExperimentConfig& cfg) {
  Json j;
  j["master_seed"] = cfg.master_seed;
  j["output_dir"] = cfg.output_dir.string();
  j["data_cache_dir"] = cfg.data_cache_dir.string();
  const TaskSpec& t = cfg.task;
  j["task"] = {{"kind", to_string(t.kind)},
               {"sequence_length", t.sequence_length},
               {"train_size", t.train_size},
               {"val_size", t.val_size},
               {"seed", t.seed},
               {"lag", t.lag},
               {"vocab", t.vocab},
               {"symbol_hold", t.symbol_hold},
               {"windows", t.windows},
               {"span", t.span},
               {"event_types", t.event_types},
               {"event_rate", t.event_rate},
               {"noise", t.noise}};
  const NetworkConfig& n = cfg.network;
  j["network"] = {{"kernel_sizes", n.kernel_sizes}, {"widths", n.widths},
                  {"residual", n.residual},         {"head", to_string(n.head)},
                  {"padding", to_string(n.padding)}, {"dilations", n.dilations}};
  const TrainConfig& tr = cfg.train;
  j["train"] = {{"epochs", tr.epochs},
                {"batch_size", tr.batch_size},
                {"learning_rate", tr.adam.learning_rate},
                {"beta1", tr.adam.beta1},
                {"beta2", tr.adam.beta2},
                {"epsilon", tr.adam.epsilon},
                {"coefficient_learning_rate", tr.coefficient_learning_rate}};
  if (cfg.surrogate) {
    const auto& s = *cfg.surrogate;
    j["surrogate"] = {{"target", s.target ? Json(*s.target) : Json(nullptr)},
                      {"decoy", s.decoy ? Json(*s.decoy) : Json(nullptr)},
                      {"decoy_gap", s.decoy_gap}};
  }
  if (cfg.global) {
    const auto& g = *cfg.global;
    j["global"] = {{"iterations", g.iterations}, {"population", g.population},
                   {"p_m", g.p_m},               {"p_s", g.p_s},
                   {"epochs", g.epochs},         {"k", g.k},
                   {"T", g.T},                   {"max_dilation_cap", g.max_dilation_cap},
                   {"mutation_mode", to_string(g.mutation_mode)}};
  }
  if (cfg.local) {
    const auto& l = *cfg.local;
    j["local"] = {{"delta_fraction", l.delta_fraction},
                  {"samples", l.samples},
                  {"iterations", l.iterations},
                  {"epochs_per_iteration", l.epochs_per_iteration},
                  {"w_init", l.w_init},
                  {"finalize_parallel", l.finalize_parallel},
                  {"pmf", to_string(l.pmf)},
                  {"separate_kernels", l.separate_kernels},
                  {"max_dilation_cap", l.max_dilation_cap},
                  {"rounding", to_string(l.rounding)}};
  }
  j["oracle"] = {{"seeds", cfg.oracle.seeds}, {"budget", cfg.oracle.budget}};
  if (cfg.idx) {
    j["idx"] = {{"images", cfg.idx->images.string()},
                {"labels", cfg.idx->labels.string()},
                {"max_items", cfg.idx->max_items},
                {"val_fraction", cfg.idx->val_fraction},
                {"classes", cfg.idx->classes}};
  }
  return j;
}

NetworkSpec network_spec(const ExperimentConfig& cfg) {
  NetworkSpec spec;
  spec.input_channels = cfg.idx ? 1 : cfg.task.input_channels();
  spec.output_channels = cfg.idx ? cfg.idx->classes : cfg.task.num_classes();
  spec.kernel_sizes = cfg.network.kernel_sizes;
  spec.widths = cfg.network.widths;
  spec.residual = cfg.network.residual;
  spec.head = cfg.network.head;
  spec.padding = cfg.network.padding;
  return spec;
}

TaskData load_data(const ExperimentConfig& cfg) {
  if (cfg.idx) {
    const IdxSource& src = *cfg.idx;
    TaskData d = load_permuted_pixels(
        src.images, src.labels, cfg.task.seed,
        src.max_items == 0 ? std::numeric_limits<std::size_t>::max() : src.max_items,
        src.val_fraction);
    if (d.train.num_classes > src.classes || d.val.num_classes > src.classes) {
      throw ConfigError("idx labels exceed idx.classes = " + std::to_string(src.classes));
    }
    d.train.num_classes = d.val.num_classes = src.classes;
    return d;
  }
  if (cfg.data_cache_dir.empty()) return generate_task(cfg.task);
  return generate_task_cached(cfg.task, cfg.data_cache_dir);
}

GlobalConfig global_config(const ExperimentConfig& cfg) {
  const GlobalSettings g = cfg.global.value_or(GlobalSettings{});
  int cap = g.max_dilation_cap;
  if (cap == 0) cap = saturating_power(g.k, g.T);
  GlobalConfig gc;
  gc.iterations = g.iterations;
  gc.population = g.population;
  gc.p_m = g.p_m;
  gc.p_s = g.p_s;
  gc.epochs = g.epochs;
  try {
    gc.space = build_space(g.k, g.T, cap);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("global: ") + e.what());
  }
  gc.num_layers = searched_count(cfg.network);
  gc.master_seed = cfg.master_seed;
  gc.mutation_mode = g.mutation_mode;
  return gc;
}

SurrogateFitness surrogate_for_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  const SurrogateConfig s = cfg.surrogate.value_or(SurrogateConfig{});
  SurrogateFitness f;
  if (s.target) {
    f.hidden_target = DilationGenome(*s.target);
  } else {
    const GlobalConfig gc = global_config(cfg);
    Rng rng(derive_seed(seed, "hidden-target"));
    f.hidden_target = random_genome(gc.space, gc.num_layers, rng);
  }
  if (s.decoy) f.decoy = DilationGenome(*s.decoy);
  f.decoy_gap = s.decoy_gap;
  return f;
}

OracleMode parse_oracle_mode(std::string_view name) {
  if (name == "exhaustive") return OracleMode::Exhaustive;
  if (name == "random") return OracleMode::Random;
  if (name == "compare") return OracleMode::Compare;
  throw std::invalid_argument("unknown oracle mode: " + std::string(name));
}

DilationGenome resolve_initial_genome(const ExperimentConfig& cfg,
                                      const std::optional<std::string>& init) {
  const std::size_t L = searched_count(cfg.network);
  DilationGenome genome;
  if (!init) {
    genome = DilationGenome(cfg.network.dilations);
  } else if (*init == "baseline") {
    genome = DilationGenome(std::vector<int>(L, 1));
  } else if (fs::exists(*init)) {
    const Json j = read_json_file(*init);
    if (is_parallel_structure(j)) {
      throw ConfigError(*init + " holds a parallel structure, not a genome");
    }
    GenomeFile file = genome_file_from_json(j);
    if (!file.kernel_sizes.empty()) {
      const auto expected = network_spec(cfg).searched_kernel_sizes();
      if (file.kernel_sizes != expected) {
        throw ConfigError(*init + ": kernel_sizes do not match the network");
      }
    }
    genome = std::move(file.genome);
  } else {
    try {
      genome = parse_genome_string(*init);
    } catch (const std::invalid_argument&) {
      throw ConfigError("--init: no such file and not a genome string: " + *init);
    }
  }
  if (genome.size() != L) {
    throw ConfigError("initial genome has " + std::to_string(genome.size()) +
                      " genes but the network has " + std::to_string(L) + " searched layers");
  }
  return genome;
}

void cmd_global(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out) {
  if (!cfg.global) throw ConfigError("config has no \"global\" block");
  const GlobalConfig gc = global_config(cfg);
  const NetworkSpec spec = network_spec(cfg);
  const std::vector<int> kernels = spec.searched_kernel_sizes();
  prepare_output(cfg);

  std::optional<TaskData> data;
  Trainer trainer;
  if (cfg.surrogate) {
    trainer = surrogate_for_seed(cfg, cfg.master_seed).as_trainer();
  } else {
    data = load_data(cfg);
    trainer = make_network_trainer(spec, *data, cfg.train);
  }

  std::ofstream population =
      open_csv(cfg.output_dir / "population.csv",
               "generation,candidate_id,genome,fitness,epochs,seed,wall_time_s");
  std::ofstream trajectory = open_csv(cfg.output_dir / "trajectory.csv", kTrajectoryHeader);

  GlobalSearchOptions options;
  options.jobs = opts.jobs;
  options.on_generation = [&](const GenerationReport& r) {
    for (std::size_t i = 0; i < r.created.size(); ++i) {
      const EvalRecord& rec = r.created[i].record;
      population << r.generation << ',' << r.created[i].candidate_id << ','
                 << csv_field(to_genome_string(rec.genome)) << ',' << format_double(rec.fitness)
                 << ',' << rec.epochs_trained << ',' << rec.seed << ','
                 << format_fixed(r.wall_time_s[i], 6) << '\n';
    }
    population.flush();
    const EvalRecord& best = r.population->members.front().record;
    write_json_file(cfg.output_dir / "best.json",
                    to_json(GenomeFile{best.genome, kernels, best.fitness, best.seed}));
    trajectory << r.created_total << ',' << format_double(best.fitness) << ',' << cfg.master_seed
               << ",ga\n";
    trajectory.flush();
  };
  const GlobalSearchResult result = run_global_search(gc, trainer, options);
  const EvalRecord& best = result.population.members.front().record;
  out << "best genome " << to_genome_string(best.genome) << " fitness "
      << format_double(best.fitness) << " after " << result.evaluations << " evaluations\n";
}

void cmd_local(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out) {
  if (!cfg.local) throw ConfigError("config has no \"local\" block");
  const LocalConfig& lc = *cfg.local;
  const NetworkSpec spec = network_spec(cfg);
  const DilationGenome initial = resolve_initial_genome(cfg, opts.init);
  const std::vector<int> kernels = spec.searched_kernel_sizes();
  prepare_output(cfg);
  const TaskData data = load_data(cfg);

  NetworkSupernet model(spec, initial, data, cfg.train, lc.pmf, lc.separate_kernels,
                        derive_seed(cfg.master_seed, "local"));
  const LocalSearchResult result = run_local_search(initial, lc, model, kernels);

  std::ofstream trajectory = open_csv(cfg.output_dir / "local_trajectory.csv",
                                      "iteration,layer_index,T_l,alpha,new_dilation");
  for (const auto& row : result.trajectory) {
    trajectory << row.iteration << ',' << row.layer << ',' << csv_field(join(row.dilation_set))
               << ',' << csv_field(join(row.alpha)) << ',' << row.new_dilation << '\n';
  }
  trajectory.close();

  const std::uint64_t seed = derive_seed(cfg.master_seed, "final");
  Json final_json;
  TrainerResult final_result;
  if (result.parallel) {
    final_result = train_parallel_structure(spec, *result.parallel, lc.pmf, data, cfg.train,
                                            cfg.train.epochs, seed);
    final_json = to_json(*result.parallel);
    final_json["fitness"] = final_result.fitness;
    final_json["seed"] = seed;
    out << "parallel structure with " << parallel_param_count(*result.parallel)
        << " extra parameters";
  } else {
    final_result = make_network_trainer(spec, data, cfg.train)(result.genome, cfg.train.epochs, seed);
    final_json = to_json(GenomeFile{result.genome, kernels, final_result.fitness, seed});
    out << "final genome " << to_genome_string(result.genome);
  }
  write_json_file(cfg.output_dir / "final.json", final_json);
  out << " fitness " << format_double(final_result.fitness) << '\n';
}

void cmd_train(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out) {
  const NetworkSpec spec = network_spec(cfg);
  const PmfKind kind = cfg.local ? cfg.local->pmf : PmfKind::AbsNormalize;
  std::optional<ParallelStructure> structure;
  DilationGenome genome;
  if (opts.init && *opts.init != "baseline" && fs::exists(*opts.init)) {
    const Json j = read_json_file(*opts.init);
    if (is_parallel_structure(j)) {
      structure = parallel_structure_from_json(j);
      if (structure->layers.size() != spec.searched_layers().size()) {
        throw ConfigError("parallel structure does not match the network's searched layers");
      }
    }
  }
  if (!structure) genome = resolve_initial_genome(cfg, opts.init);
  prepare_output(cfg);
  const TaskData data = load_data(cfg);
  const std::uint64_t seed = derive_seed(cfg.master_seed, "train");

  Json j;
  TrainerResult result;
  std::size_t params = 0;
  if (structure) {
    result = train_parallel_structure(spec, *structure, kind, data, cfg.train, cfg.train.epochs, seed);
    params = Network(spec, *structure, kind, 0).parameter_count();
    j["structure"] = to_json(*structure);
  } else {
    result = make_network_trainer(spec, data, cfg.train)(genome, cfg.train.epochs, seed);
    params = Network(spec, genome, 0).parameter_count();
    j["dilations"] = genome.dilations;
    j["receptive_field"] = receptive_field(genome, spec.searched_kernel_sizes());
  }
  j["fitness"] = result.fitness;
  j["metrics"] = result.metrics;
  j["epochs"] = cfg.train.epochs;
  j["seed"] = seed;
  j["parameter_count"] = params;
  write_json_file(cfg.output_dir / "metrics.json", j);
  out << "validation accuracy " << format_double(result.fitness) << " with " << params
      << " parameters\n";
}

void cmd_oracle(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out) {
  if (!cfg.surrogate) throw ConfigError("oracle runs need a \"surrogate\" block");
  const GlobalConfig base = global_config(cfg);
  prepare_output(cfg);

  if (opts.oracle_mode == OracleMode::Exhaustive) {
    const SurrogateFitness fitness = surrogate_for_seed(cfg, cfg.master_seed);
    std::vector<RankedGenome> ranked;
    try {
      ranked = exhaustive_rank(base.space, base.num_layers, fitness);
    } catch (const std::length_error& e) {
      throw ConfigError(e.what());
    }
    std::ofstream csv = open_csv(cfg.output_dir / "exhaustive.csv", "rank,genome,fitness");
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      csv << i + 1 << ',' << csv_field(to_genome_string(ranked[i].genome)) << ','
          << format_double(ranked[i].fitness) << '\n';
    }
    out << ranked.size() << " genomes ranked; optimum " << to_genome_string(ranked.front().genome)
        << " fitness " << format_double(ranked.front().fitness) << '\n';
    return;
  }

  std::ofstream csv = open_csv(cfg.output_dir / "trajectory.csv", kTrajectoryHeader);
  for (std::size_t i = 0; i < cfg.oracle.seeds; ++i) {
    const std::uint64_t seed = cfg.master_seed + i;
    const SurrogateFitness fitness = surrogate_for_seed(cfg, seed);
    if (opts.oracle_mode == OracleMode::Random) {
      const auto rs = random_search(base.space, base.num_layers, cfg.oracle.budget, fitness, seed);
      for (std::size_t b = 0; b < rs.running_best.size(); ++b) {
        csv << b + 1 << ',' << format_double(rs.running_best[b]) << ',' << seed << ",random\n";
      }
      continue;
    }
    GlobalConfig gc = base;
    gc.master_seed = seed;
    GlobalSearchOptions options;
    options.jobs = opts.jobs;
    const GlobalSearchResult ga = run_global_search(gc, fitness.as_trainer(), options);
    const auto rs = random_search(base.space, base.num_layers, ga.created_by_generation.back(),
                                  fitness, seed);
    for (std::size_t g = 0; g < ga.best_by_generation.size(); ++g) {
      csv << ga.created_by_generation[g] << ',' << format_double(ga.best_by_generation[g]) << ','
          << seed << ",ga\n";
    }
    for (std::size_t budget : ga.created_by_generation) {
      csv << budget << ',' << format_double(rs.running_best[budget - 1]) << ',' << seed
          << ",random\n";
    }
  }
  out << "wrote " << cfg.oracle.seeds << " seed trajectories to "
      << (cfg.output_dir / "trajectory.csv").string() << '\n';
}

int cmd_report(const fs::path& run_dir, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(run_dir)) {
    err << "error: not a directory: " << run_dir.string() << '\n';
    return kExitUsage;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::map<std::pair<std::string, std::size_t>, std::vector<double>> groups;
  std::vector<std::string> fields;
  for (const auto& file : files) {
    std::ifstream in(file);
    std::string line;
    if (!std::getline(in, line)) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTrajectoryHeader) continue;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      bool ok = split_csv_line(line, fields) && fields.size() == 4 && !fields[3].empty();
      std::size_t budget = 0;
      double value = 0.0;
      std::uint64_t seed = 0;
      if (ok) {
        auto parse = [](const std::string& s, auto& v) {
          const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
          return ec == std::errc{} && p == s.data() + s.size();
        };
        ok = parse(fields[0], budget) && parse(fields[1], value) && parse(fields[2], seed);
      }
      if (!ok) {
        err << "warning: " << file.string() << ':' << line_no << ": malformed row skipped\n";
        continue;
      }
      groups[{fields[3], budget}].push_back(value);
    }
  }
  if (groups.empty()) {
    err << "error: no trajectory rows under " << run_dir.string() << '\n';
    return kExitUsage;
  }

  std::ofstream report = open_csv(run_dir / "report.csv", "method,budget,mean,std,n");
  std::map<std::string, std::pair<std::size_t, std::vector<double>>> last;
  for (const auto& [key, values] : groups) {
    report << csv_field(key.first) << ',' << key.second << ',' << format_double(mean(values)) << ','
           << format_double(sample_stddev(values)) << ',' << values.size() << '\n';
    last[key.first] = {key.second, values};
  }
  std::ostringstream summary;
  summary << std::left << std::setw(12) << "method" << std::right << std::setw(10) << "budget"
          << std::setw(14) << "mean" << std::setw(14) << "std" << std::setw(6) << "n" << '\n';
  for (const auto& [method, entry] : last) {
    summary << std::left << std::setw(12) << method << std::right << std::setw(10) << entry.first
            << std::setw(14) << format_fixed(mean(entry.second), 6) << std::setw(14)
            << format_fixed(sample_stddev(entry.second), 6) << std::setw(6) << entry.second.size()
            << '\n';
  }
  std::ofstream(run_dir / "summary.txt", std::ios::trunc) << summary.str();
  out << summary.str();
  return kExitOk;
}

}  // namespace rfs
