#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"

#include "rrg/graph.hpp"

namespace rrg {

// {"n": int, "d": int, "edges": [[u, v], ...]} with u < v, edges sorted.
nlohmann::json to_json(const RegularGraph& g);
RegularGraph regular_graph_from_json(const nlohmann::json& j);

// Plain-text variant: header "# n d", then one "u v" per line.
void write_edge_list(std::ostream& os, const RegularGraph& g);
RegularGraph read_edge_list(std::istream& is);

// Dispatch on extension: ".json" uses the JSON format, anything else the edge list.
void save_graph(const std::filesystem::path& path, const RegularGraph& g);
RegularGraph load_graph(const std::filesystem::path& path);

// Writes `contents` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace rrg
