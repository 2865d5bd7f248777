#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rfsearch/genome.hpp"
#include "rfsearch/network.hpp"

namespace rfs {

using Json = nlohmann::json;

/// {"dilations":[...], "kernel_sizes":[...], "fitness":..., "seed":...}
Json to_json(const GenomeFile& file);
GenomeFile genome_file_from_json(const Json& j);

/// {"kind":"parallel", "kernel_sizes":[...], "layers":[{"layer":i,"dilations":[...],"alphas":[...]}]}
Json to_json(const ParallelStructure& structure);
ParallelStructure parallel_structure_from_json(const Json& j);
bool is_parallel_structure(const Json& j);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// CSV field, quoted when it contains a comma, quote or newline.
std::string csv_field(std::string_view text);
/// Splits one CSV line honoring double quotes. Returns false on an unterminated quote.
bool split_csv_line(std::string_view line, std::vector<std::string>& fields);

Json read_json_file(const std::filesystem::path& path);
/// Writes `j` with 2-space indentation and a trailing newline (atomic via rename).
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace rfs
