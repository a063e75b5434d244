#include "rrg/graph_io.hpp"

#include <fstream>
#include <sstream>

#include "rrg/error.hpp"

namespace rrg {

nlohmann::json to_json(const RegularGraph& g) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [u, v] : g.graph().edges()) edges.push_back({u, v});
    return {{"n", g.n()}, {"d", g.d()}, {"edges", std::move(edges)}};
}

RegularGraph regular_graph_from_json(const nlohmann::json& j) {
    try {
        const int n = j.at("n").get<int>();
        const int d = j.at("d").get<int>();
        std::vector<Edge> edges;
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 2) fail_input("graph JSON: each edge must be a pair");
            edges.emplace_back(e[0].get<int>(), e[1].get<int>());
        }
        return RegularGraph(Graph::from_edges(n, edges), d);
    } catch (const nlohmann::json::exception& ex) {
        fail_input(std::string("graph JSON: ") + ex.what());
    }
}

void write_edge_list(std::ostream& os, const RegularGraph& g) {
    os << "# " << g.n() << ' ' << g.d() << '\n';
    for (const auto& [u, v] : g.graph().edges()) os << u << ' ' << v << '\n';
}

RegularGraph read_edge_list(std::istream& is) {
    std::string line;
    int n = -1;
    int d = -1;
    std::vector<Edge> edges;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (line[0] == '#') {
            char hash = 0;
            if (n == -1 && (ls >> hash >> n >> d)) continue;
            if (n == -1) fail_input("edge list: malformed header '" + line + "'");
            continue;
        }
        int u = 0;
        int v = 0;
        if (!(ls >> u >> v)) fail_input("edge list: malformed line '" + line + "'");
        edges.emplace_back(u, v);
    }
    if (n < 0) fail_input("edge list: missing '# n d' header");
    return RegularGraph(Graph::from_edges(n, edges), d);
}

void save_graph(const std::filesystem::path& path, const RegularGraph& g) {
    std::ostringstream os;
    if (path.extension() == ".json")
        os << to_json(g).dump() << '\n';
    else
        write_edge_list(os, g);
    write_file_atomic(path, os.str());
}

RegularGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail_input("cannot open graph file " + path.string());
    if (path.extension() == ".json") {
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& ex) {
            fail_input("graph JSON parse error: " + std::string(ex.what()));
        }
        return regular_graph_from_json(j);
    }
    return read_edge_list(in);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail_input("cannot write " + tmp.string());
        out << contents;
        if (!out) fail_input("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace rrg
