#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rrg/rng.hpp"

namespace rrg {

using Vertex = int;
using Edge = std::pair<Vertex, Vertex>;

inline constexpr int kInfiniteDistance = std::numeric_limits<int>::max();

// Simple undirected graph on vertices 0..n-1 with sorted adjacency lists.
class Graph {
public:
    Graph() = default;
    explicit Graph(int n);

    // Throws on self-loops, repeated edges, or out-of-range endpoints.
    static Graph from_edges(int n, std::span<const Edge> edges);

    int size() const noexcept { return static_cast<int>(adj_.size()); }
    int degree(Vertex v) const { return static_cast<int>(neighbors(v).size()); }
    std::span<const Vertex> neighbors(Vertex v) const;
    bool has_edge(Vertex u, Vertex v) const;
    std::size_t edge_count() const noexcept { return edge_count_; }

    // Edges (u, v) with u < v, sorted lexicographically.
    std::vector<Edge> edges() const;

    void add_edge(Vertex u, Vertex v);
    void remove_edge(Vertex u, Vertex v);

    // Subgraph induced on `vertices`; local id k corresponds to vertices[k].
    Graph induced(std::span<const Vertex> vertices) const;

    bool operator==(const Graph&) const = default;

private:
    void check_vertex(Vertex v) const;

    std::vector<std::vector<Vertex>> adj_;
    std::size_t edge_count_ = 0;
};

// Simple d-regular graph. The invariants are checked on construction.
class RegularGraph {
public:
    RegularGraph(Graph graph, int d);

    int n() const noexcept { return graph_.size(); }
    int d() const noexcept { return d_; }
    const Graph& graph() const noexcept { return graph_; }
    std::span<const Vertex> neighbors(Vertex v) const { return graph_.neighbors(v); }

    bool operator==(const RegularGraph&) const = default;

private:
    Graph graph_;
    int d_;
};

// Uniform sample from the simple d-regular graphs on n labeled vertices: the
// pairing model, restarted on any loop or multi-edge.
RegularGraph generate_regular(int n, int d, Rng& rng, long max_attempts = 1'000'000);
RegularGraph generate_regular(int n, int d, std::uint64_t seed, long max_attempts = 1'000'000);

// Graph with degrees bounded by d - deficit(v). `global_id` maps local vertex
// ids back to the ids of the graph this one was cut out of.
class DeficitGraph {
public:
    DeficitGraph(Graph graph, int d, std::vector<int> deficit, std::vector<Vertex> global_id = {});

    static DeficitGraph from_regular(const RegularGraph& g);
    static DeficitGraph zero_deficit(Graph graph, int d);

    const Graph& graph() const noexcept { return graph_; }
    int size() const noexcept { return graph_.size(); }
    int d() const noexcept { return d_; }
    int deficit(Vertex v) const { return deficit_.at(v); }
    const std::vector<int>& deficits() const noexcept { return deficit_; }
    Vertex global_id(Vertex v) const { return global_id_.at(v); }
    const std::vector<Vertex>& global_ids() const noexcept { return global_id_; }
    std::optional<Vertex> local_id(Vertex global) const;

    // d - g(v) - deg(v): number of (d-1)-ary trees the tree extension attaches at v.
    int open_slots(Vertex v) const { return d_ - deficit_.at(v) - graph_.degree(v); }
    bool extensible(Vertex v) const { return open_slots(v) > 0; }

private:
    Graph graph_;
    int d_;
    std::vector<int> deficit_;
    std::vector<Vertex> global_id_;
};

// Induced graph on the complement of `removed` (local ids), with
// g'(v) = g(v) + deg_G(v) - deg_{G^(T)}(v). Kept vertices retain their order.
DeficitGraph remove_vertices(const DeficitGraph& g, std::span<const Vertex> removed);

struct Neighborhood {
    std::vector<Vertex> centers;  // ids in the parent graph
    int radius = 0;
    // Induced subgraph; local vertices ordered by (distance, parent id). The
    // deficit is the restriction of the parent's, global ids are the parent's.
    DeficitGraph subgraph{Graph(0), 3, {}};
    std::vector<Vertex> parent_id;  // local id -> parent id
    std::vector<int> distance;      // local id -> distance to the centers
};

Neighborhood ball(const DeficitGraph& g, std::span<const Vertex> centers, int r);
Neighborhood ball(const RegularGraph& g, std::span<const Vertex> centers, int r);

// Vertices within distance r of `sources`, in BFS order, together with their
// distances. Vertices for which `blocked` returns true are never entered.
struct BfsResult {
    std::vector<Vertex> vertices;
    std::vector<int> distance;
};
BfsResult bounded_bfs(const Graph& g, std::span<const Vertex> sources, int r,
                      const std::function<bool(Vertex)>& blocked = {});

// #edges - #vertices + #components.
long excess(const Graph& g);

// Excess of the subgraph induced on `vertices`.
long induced_excess(const Graph& g, std::span<const Vertex> vertices);

// Min over a in A, b in B of the BFS distance; kInfiniteDistance if unreachable.
int graph_distance(const Graph& g, std::span<const Vertex> a, std::span<const Vertex> b);

struct TreeLikeConfig {
    int radius = 1;         // R
    long omega = 1;         // excess cap for radius-R balls
    double c = 0.99;        // exponent in the N^c cycle-vertex cap
    long c_q = 10;          // excess cap for radius-R/2 balls in the relaxed set
};

struct TreeLikeReport {
    long max_excess = 0;            // over radius-R balls
    long cycle_vertex_count = 0;    // vertices whose radius-R ball has a cycle
    long max_excess_eighth = 0;     // over radius-floor(R/8) balls
    long max_excess_half = 0;       // over radius-floor(R/2) balls
    bool tree_like = false;         // excess <= omega and cycle count <= N^c
    bool tree_like_relaxed = false; // R/8: <= omega, R/2: <= C_q, count <= 2 N^c
};

TreeLikeReport classify_tree_like(const RegularGraph& g, const TreeLikeConfig& config);

// Canonical byte string, equal for two graphs iff they are isomorphic. Exhaustive
// search over vertex orders compatible with the color-refined degree partition.
inline constexpr int kCanonicalFormCap = 12;
std::string canonical_form(const Graph& g, int cap = kCanonicalFormCap);

// Calls `visit` once for every simple d-regular graph on vertices 0..n-1.
void enumerate_regular_graphs(int n, int d, const std::function<void(const Graph&)>& visit);

}  // namespace rrg
