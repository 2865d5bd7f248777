#include "rfsearch/serialize.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

#include "rfsearch/errors.hpp"

namespace rfs {

Json to_json(const GenomeFile& file) {
  Json j;
  j["dilations"] = file.genome.dilations;
  j["kernel_sizes"] = file.kernel_sizes;
  j["fitness"] = file.fitness;
  j["seed"] = file.seed;
  return j;
}

GenomeFile genome_file_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("dilations")) {
    throw ConfigError("genome JSON must be an object with a \"dilations\" array");
  }
  GenomeFile file;
  file.genome.dilations = j.at("dilations").get<std::vector<int>>();
  if (j.contains("kernel_sizes")) file.kernel_sizes = j.at("kernel_sizes").get<std::vector<int>>();
  if (j.contains("fitness") && !j.at("fitness").is_null()) file.fitness = j.at("fitness").get<double>();
  if (j.contains("seed")) file.seed = j.at("seed").get<std::uint64_t>();
  for (int d : file.genome.dilations) {
    if (d < 1) throw ConfigError("genome JSON contains a dilation < 1");
  }
  return file;
}

Json to_json(const ParallelStructure& structure) {
  Json layers = Json::array();
  for (std::size_t l = 0; l < structure.layers.size(); ++l) {
    layers.push_back({{"layer", l},
                      {"dilations", structure.layers[l].dilations},
                      {"alphas", structure.layers[l].alphas}});
  }
  return {{"kind", "parallel"}, {"kernel_sizes", structure.kernel_sizes}, {"layers", layers}};
}

bool is_parallel_structure(const Json& j) {
  return j.is_object() && j.contains("kind") && j.at("kind") == "parallel";
}

ParallelStructure parallel_structure_from_json(const Json& j) {
  if (!is_parallel_structure(j)) throw ConfigError("not a parallel structure JSON");
  ParallelStructure s;
  if (j.contains("kernel_sizes")) s.kernel_sizes = j.at("kernel_sizes").get<std::vector<int>>();
  for (const auto& layer : j.at("layers")) {
    ParallelLayer pl;
    pl.dilations = layer.at("dilations").get<std::vector<int>>();
    pl.alphas = layer.at("alphas").get<std::vector<double>>();
    if (pl.dilations.empty() || pl.dilations.size() != pl.alphas.size()) {
      throw ConfigError("parallel layer needs matching non-empty dilations and alphas");
    }
    s.layers.push_back(std::move(pl));
  }
  return s;
}

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, end);
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

bool split_csv_line(std::string_view line, std::vector<std::string>& fields) {
  fields.clear();
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current += c;
    }
  }
  if (quoted) return false;
  fields.push_back(std::move(current));
  return true;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace rfs
