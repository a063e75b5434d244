#include "rrg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>

#include "rrg/error.hpp"

namespace rrg {

Graph::Graph(int n) {
    if (n < 0) fail_input("graph size must be nonnegative");
    adj_.resize(static_cast<std::size_t>(n));
}

Graph Graph::from_edges(int n, std::span<const Edge> edges) {
    Graph g(n);
    for (const auto& [u, v] : edges) g.add_edge(u, v);
    return g;
}

void Graph::check_vertex(Vertex v) const {
    if (v < 0 || v >= size()) fail_input("vertex id " + std::to_string(v) + " out of range");
}

std::span<const Vertex> Graph::neighbors(Vertex v) const {
    check_vertex(v);
    return adj_[static_cast<std::size_t>(v)];
}

bool Graph::has_edge(Vertex u, Vertex v) const {
    const auto nb = neighbors(u);
    check_vertex(v);
    return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> Graph::edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (Vertex u = 0; u < size(); ++u)
        for (Vertex v : adj_[static_cast<std::size_t>(u)])
            if (u < v) out.emplace_back(u, v);
    return out;
}

void Graph::add_edge(Vertex u, Vertex v) {
    check_vertex(u);
    check_vertex(v);
    if (u == v) fail_input("self-loop at vertex " + std::to_string(u));
    auto& au = adj_[static_cast<std::size_t>(u)];
    auto it = std::lower_bound(au.begin(), au.end(), v);
    if (it != au.end() && *it == v)
        fail_input("repeated edge {" + std::to_string(u) + "," + std::to_string(v) + "}");
    au.insert(it, v);
    auto& av = adj_[static_cast<std::size_t>(v)];
    av.insert(std::lower_bound(av.begin(), av.end(), u), u);
    ++edge_count_;
}

void Graph::remove_edge(Vertex u, Vertex v) {
    check_vertex(u);
    check_vertex(v);
    auto& au = adj_[static_cast<std::size_t>(u)];
    auto it = std::lower_bound(au.begin(), au.end(), v);
    if (it == au.end() || *it != v)
        fail_input("missing edge {" + std::to_string(u) + "," + std::to_string(v) + "}");
    au.erase(it);
    auto& av = adj_[static_cast<std::size_t>(v)];
    av.erase(std::lower_bound(av.begin(), av.end(), u));
    --edge_count_;
}

Graph Graph::induced(std::span<const Vertex> vertices) const {
    std::vector<int> local(static_cast<std::size_t>(size()), -1);
    for (std::size_t k = 0; k < vertices.size(); ++k) {
        check_vertex(vertices[k]);
        if (local[static_cast<std::size_t>(vertices[k])] != -1) fail_input("repeated vertex in induced set");
        local[static_cast<std::size_t>(vertices[k])] = static_cast<int>(k);
    }
    Graph sub(static_cast<int>(vertices.size()));
    for (std::size_t k = 0; k < vertices.size(); ++k) {
        for (Vertex w : adj_[static_cast<std::size_t>(vertices[k])]) {
            const int lw = local[static_cast<std::size_t>(w)];
            if (lw > static_cast<int>(k)) sub.add_edge(static_cast<Vertex>(k), lw);
        }
    }
    return sub;
}

RegularGraph::RegularGraph(Graph graph, int d) : graph_(std::move(graph)), d_(d) {
    if (d < 0) fail_input("degree must be nonnegative");
    for (Vertex v = 0; v < graph_.size(); ++v)
        if (graph_.degree(v) != d)
            fail_input("vertex " + std::to_string(v) + " has degree " + std::to_string(graph_.degree(v)) +
                       ", expected " + std::to_string(d));
}

RegularGraph generate_regular(int n, int d, Rng& rng, long max_attempts) {
    if (d < 1 || n <= d) fail_input("need n > d >= 1 for a simple d-regular graph");
    if ((static_cast<long>(n) * d) % 2 != 0) fail_input("n*d must be even");

    const std::size_t points = static_cast<std::size_t>(n) * static_cast<std::size_t>(d);
    std::vector<int> slot(points);
    std::vector<std::vector<Vertex>> adj(static_cast<std::size_t>(n));
    for (auto& a : adj) a.reserve(static_cast<std::size_t>(d));

    for (long attempt = 0; attempt < max_attempts; ++attempt) {
        std::iota(slot.begin(), slot.end(), 0);
        for (auto& a : adj) a.clear();
        bool simple = true;
        // Sequential Fisher-Yates pairing: point i is matched with a uniform
        // remaining point. Stopping early at the first loop or repeated edge
        // rejects exactly the pairings that are not simple.
        for (std::size_t i = 0; i + 1 < points && simple; i += 2) {
            const std::size_t j = i + 1 + uniform_index(rng, points - i - 1);
            std::swap(slot[i + 1], slot[j]);
            const Vertex u = slot[i] / d;
            const Vertex v = slot[i + 1] / d;
            auto& au = adj[static_cast<std::size_t>(u)];
            if (u == v || std::find(au.begin(), au.end(), v) != au.end()) {
                simple = false;
                break;
            }
            au.push_back(v);
            adj[static_cast<std::size_t>(v)].push_back(u);
        }
        if (!simple) continue;
        Graph g(n);
        for (Vertex u = 0; u < n; ++u)
            for (Vertex v : adj[static_cast<std::size_t>(u)])
                if (u < v) g.add_edge(u, v);
        return RegularGraph(std::move(g), d);
    }
    fail_numeric("pairing model exceeded " + std::to_string(max_attempts) + " attempts for n=" +
                 std::to_string(n) + ", d=" + std::to_string(d));
}

RegularGraph generate_regular(int n, int d, std::uint64_t seed, long max_attempts) {
    Rng rng = make_rng(seed);
    return generate_regular(n, d, rng, max_attempts);
}

DeficitGraph::DeficitGraph(Graph graph, int d, std::vector<int> deficit, std::vector<Vertex> global_id)
    : graph_(std::move(graph)), d_(d), deficit_(std::move(deficit)), global_id_(std::move(global_id)) {
    const auto n = static_cast<std::size_t>(graph_.size());
    if (deficit_.size() != n) fail_input("deficit vector size mismatch");
    if (global_id_.empty()) {
        global_id_.resize(n);
        std::iota(global_id_.begin(), global_id_.end(), 0);
    }
    if (global_id_.size() != n) fail_input("global id map size mismatch");
    for (Vertex v = 0; v < graph_.size(); ++v) {
        const int g = deficit_[static_cast<std::size_t>(v)];
        if (g < 0 || g > d_) fail_input("deficit out of [0, d] at vertex " + std::to_string(v));
        if (graph_.degree(v) > d_ - g)
            fail_input("deg(v) > d - g(v) at vertex " + std::to_string(v));
    }
}

DeficitGraph DeficitGraph::from_regular(const RegularGraph& g) {
    return DeficitGraph(g.graph(), g.d(), std::vector<int>(static_cast<std::size_t>(g.n()), 0));
}

DeficitGraph DeficitGraph::zero_deficit(Graph graph, int d) {
    const auto n = static_cast<std::size_t>(graph.size());
    return DeficitGraph(std::move(graph), d, std::vector<int>(n, 0));
}

std::optional<Vertex> DeficitGraph::local_id(Vertex global) const {
    auto it = std::find(global_id_.begin(), global_id_.end(), global);
    if (it == global_id_.end()) return std::nullopt;
    return static_cast<Vertex>(it - global_id_.begin());
}

DeficitGraph remove_vertices(const DeficitGraph& g, std::span<const Vertex> removed) {
    std::vector<char> gone(static_cast<std::size_t>(g.size()), 0);
    for (Vertex v : removed) {
        if (v < 0 || v >= g.size()) fail_input("removed vertex out of range");
        gone[static_cast<std::size_t>(v)] = 1;
    }
    std::vector<Vertex> kept;
    for (Vertex v = 0; v < g.size(); ++v)
        if (!gone[static_cast<std::size_t>(v)]) kept.push_back(v);

    Graph sub = g.graph().induced(kept);
    std::vector<int> deficit(kept.size());
    std::vector<Vertex> global(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const Vertex v = kept[k];
        deficit[k] = g.deficit(v) + g.graph().degree(v) - sub.degree(static_cast<Vertex>(k));
        global[k] = g.global_id(v);
    }
    return DeficitGraph(std::move(sub), g.d(), std::move(deficit), std::move(global));
}

BfsResult bounded_bfs(const Graph& g, std::span<const Vertex> sources, int r,
                      const std::function<bool(Vertex)>& blocked) {
    BfsResult out;
    if (r < 0) return out;
    std::vector<int> dist(static_cast<std::size_t>(g.size()), -1);
    std::queue<Vertex> queue;
    for (Vertex s : sources) {
        if (s < 0 || s >= g.size()) fail_input("BFS source out of range");
        if (dist[static_cast<std::size_t>(s)] != -1 || (blocked && blocked(s))) continue;
        dist[static_cast<std::size_t>(s)] = 0;
        queue.push(s);
    }
    while (!queue.empty()) {
        const Vertex v = queue.front();
        queue.pop();
        const int dv = dist[static_cast<std::size_t>(v)];
        out.vertices.push_back(v);
        out.distance.push_back(dv);
        if (dv == r) continue;
        for (Vertex w : g.neighbors(v)) {
            if (dist[static_cast<std::size_t>(w)] != -1 || (blocked && blocked(w))) continue;
            dist[static_cast<std::size_t>(w)] = dv + 1;
            queue.push(w);
        }
    }
    return out;
}

Neighborhood ball(const DeficitGraph& g, std::span<const Vertex> centers, int r) {
    if (centers.empty()) fail_input("ball needs at least one center");
    if (r < 0) fail_input("ball radius must be nonnegative");
    BfsResult bfs = bounded_bfs(g.graph(), centers, r);

    std::vector<std::size_t> order(bfs.vertices.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::pair(bfs.distance[a], bfs.vertices[a]) < std::pair(bfs.distance[b], bfs.vertices[b]);
    });

    Neighborhood nb;
    nb.centers.assign(centers.begin(), centers.end());
    nb.radius = r;
    std::vector<int> deficit;
    std::vector<Vertex> global;
    for (std::size_t k : order) {
        nb.parent_id.push_back(bfs.vertices[k]);
        nb.distance.push_back(bfs.distance[k]);
        deficit.push_back(g.deficit(bfs.vertices[k]));
        global.push_back(g.global_id(bfs.vertices[k]));
    }
    nb.subgraph = DeficitGraph(g.graph().induced(nb.parent_id), g.d(), std::move(deficit), std::move(global));
    return nb;
}

Neighborhood ball(const RegularGraph& g, std::span<const Vertex> centers, int r) {
    return ball(DeficitGraph::from_regular(g), centers, r);
}

long excess(const Graph& g) {
    std::vector<Vertex> all(static_cast<std::size_t>(g.size()));
    std::iota(all.begin(), all.end(), 0);
    return induced_excess(g, all);
}

long induced_excess(const Graph& g, std::span<const Vertex> vertices) {
    std::vector<char> in(static_cast<std::size_t>(g.size()), 0);
    for (Vertex v : vertices) in.at(static_cast<std::size_t>(v)) = 1;

    long edges = 0;
    for (Vertex v : vertices)
        for (Vertex w : g.neighbors(v))
            if (in[static_cast<std::size_t>(w)] && v < w) ++edges;

    long components = 0;
    std::vector<char> seen(static_cast<std::size_t>(g.size()), 0);
    std::vector<Vertex> stack;
    for (Vertex s : vertices) {
        if (seen[static_cast<std::size_t>(s)]) continue;
        ++components;
        seen[static_cast<std::size_t>(s)] = 1;
        stack.push_back(s);
        while (!stack.empty()) {
            const Vertex v = stack.back();
            stack.pop_back();
            for (Vertex w : g.neighbors(v)) {
                if (in[static_cast<std::size_t>(w)] && !seen[static_cast<std::size_t>(w)]) {
                    seen[static_cast<std::size_t>(w)] = 1;
                    stack.push_back(w);
                }
            }
        }
    }
    return edges - static_cast<long>(vertices.size()) + components;
}

int graph_distance(const Graph& g, std::span<const Vertex> a, std::span<const Vertex> b) {
    if (a.empty() || b.empty()) fail_input("graph_distance needs nonempty vertex sets");
    std::vector<char> target(static_cast<std::size_t>(g.size()), 0);
    for (Vertex v : b) {
        if (v < 0 || v >= g.size()) fail_input("vertex out of range");
        target[static_cast<std::size_t>(v)] = 1;
    }
    std::vector<int> dist(static_cast<std::size_t>(g.size()), -1);
    std::queue<Vertex> queue;
    for (Vertex s : a) {
        if (s < 0 || s >= g.size()) fail_input("vertex out of range");
        if (target[static_cast<std::size_t>(s)]) return 0;
        if (dist[static_cast<std::size_t>(s)] == -1) {
            dist[static_cast<std::size_t>(s)] = 0;
            queue.push(s);
        }
    }
    while (!queue.empty()) {
        const Vertex v = queue.front();
        queue.pop();
        for (Vertex w : g.neighbors(v)) {
            if (dist[static_cast<std::size_t>(w)] != -1) continue;
            dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
            if (target[static_cast<std::size_t>(w)]) return dist[static_cast<std::size_t>(w)];
            queue.push(w);
        }
    }
    return kInfiniteDistance;
}

TreeLikeReport classify_tree_like(const RegularGraph& g, const TreeLikeConfig& config) {
    if (config.radius < 1) fail_input("tree-like radius must be >= 1");
    const Graph& graph = g.graph();
    TreeLikeReport report;
    auto ball_excess = [&](Vertex v, int r) {
        const Vertex src[] = {v};
        return induced_excess(graph, bounded_bfs(graph, src, r).vertices);
    };
    for (Vertex v = 0; v < g.n(); ++v) {
        const long e = ball_excess(v, config.radius);
        report.max_excess = std::max(report.max_excess, e);
        if (e > 0) ++report.cycle_vertex_count;
        report.max_excess_eighth = std::max(report.max_excess_eighth, ball_excess(v, config.radius / 8));
        report.max_excess_half = std::max(report.max_excess_half, ball_excess(v, config.radius / 2));
    }
    const double cap = std::pow(static_cast<double>(g.n()), config.c);
    report.tree_like = report.max_excess <= config.omega && static_cast<double>(report.cycle_vertex_count) <= cap;
    report.tree_like_relaxed = report.max_excess_eighth <= config.omega && report.max_excess_half <= config.c_q &&
                               static_cast<double>(report.cycle_vertex_count) <= 2.0 * cap;
    return report;
}

namespace {

// Color refinement started from degrees. Colors are ranks of sorted
// signatures, so they are invariant under relabeling.
std::vector<int> refine_colors(const Graph& g) {
    const int n = g.size();
    std::vector<int> color(static_cast<std::size_t>(n));
    for (Vertex v = 0; v < n; ++v) color[static_cast<std::size_t>(v)] = g.degree(v);
    int classes = -1;
    while (true) {
        std::vector<std::vector<int>> signature(static_cast<std::size_t>(n));
        for (Vertex v = 0; v < n; ++v) {
            auto& s = signature[static_cast<std::size_t>(v)];
            s.push_back(color[static_cast<std::size_t>(v)]);
            std::vector<int> nb;
            for (Vertex w : g.neighbors(v)) nb.push_back(color[static_cast<std::size_t>(w)]);
            std::sort(nb.begin(), nb.end());
            s.insert(s.end(), nb.begin(), nb.end());
        }
        std::map<std::vector<int>, int> rank;
        for (const auto& s : signature) rank.emplace(s, 0);
        int next = 0;
        for (auto& [s, id] : rank) id = next++;
        for (Vertex v = 0; v < n; ++v) color[static_cast<std::size_t>(v)] = rank[signature[static_cast<std::size_t>(v)]];
        if (next == classes) break;
        classes = next;
    }
    return color;
}

class CanonicalSearch {
public:
    CanonicalSearch(const Graph& g, std::vector<int> color) : g_(g), color_(std::move(color)) {
        const int n = g.size();
        target_ = color_;
        std::sort(target_.begin(), target_.end());
        used_.assign(static_cast<std::size_t>(n), 0);
        perm_.reserve(static_cast<std::size_t>(n));
    }

    std::vector<char> run() {
        search(0);
        return best_;
    }

private:
    void search(int k) {
        const int n = g_.size();
        if (k == n) {
            if (best_.empty() || bits_ < best_) best_ = bits_;
            return;
        }
        for (Vertex v = 0; v < n; ++v) {
            if (used_[static_cast<std::size_t>(v)] || color_[static_cast<std::size_t>(v)] != target_[static_cast<std::size_t>(k)])
                continue;
            const std::size_t mark = bits_.size();
            for (Vertex u : perm_) bits_.push_back(g_.has_edge(u, v) ? 1 : 0);
            if (best_.empty() || !std::lexicographical_compare(best_.begin(), best_.begin() + static_cast<long>(bits_.size()),
                                                               bits_.begin(), bits_.end())) {
                used_[static_cast<std::size_t>(v)] = 1;
                perm_.push_back(v);
                search(k + 1);
                perm_.pop_back();
                used_[static_cast<std::size_t>(v)] = 0;
            }
            bits_.resize(mark);
        }
    }

    const Graph& g_;
    std::vector<int> color_;
    std::vector<int> target_;
    std::vector<char> used_;
    std::vector<Vertex> perm_;
    std::vector<char> bits_;
    std::vector<char> best_;
};

}  // namespace

std::string canonical_form(const Graph& g, int cap) {
    const int n = g.size();
    if (n > cap) fail_input("canonical_form: n = " + std::to_string(n) + " exceeds cap " + std::to_string(cap));
    if (n > 255) fail_input("canonical_form: n must fit in one byte");
    std::vector<char> bits = CanonicalSearch(g, refine_colors(g)).run();

    std::string out(1, static_cast<char>(n));
    for (std::size_t i = 0; i < bits.size(); i += 8) {
        unsigned char byte = 0;
        for (std::size_t b = 0; b < 8 && i + b < bits.size(); ++b)
            if (bits[i + b]) byte = static_cast<unsigned char>(byte | (1u << b));
        out.push_back(static_cast<char>(byte));
    }
    return out;
}

void enumerate_regular_graphs(int n, int d, const std::function<void(const Graph&)>& visit) {
    if (n < 0 || d < 0) fail_input("enumerate_regular_graphs: negative parameter");
    if ((static_cast<long>(n) * d) % 2 != 0) return;
    std::vector<int> remaining(static_cast<std::size_t>(n), d);
    Graph g(n);

    // Vertices are completed in increasing order; vertex v takes its missing
    // edges from higher vertices only, so every graph is produced once.
    std::function<void(Vertex)> fill = [&](Vertex v) {
        while (v < n && remaining[static_cast<std::size_t>(v)] == 0) ++v;
        if (v == n) {
            visit(g);
            return;
        }
        std::vector<Vertex> candidates;
        for (Vertex w = v + 1; w < n; ++w)
            if (remaining[static_cast<std::size_t>(w)] > 0) candidates.push_back(w);
        const int need = remaining[static_cast<std::size_t>(v)];
        if (static_cast<int>(candidates.size()) < need) return;

        std::vector<int> pick(static_cast<std::size_t>(need));
        std::iota(pick.begin(), pick.end(), 0);
        while (true) {
            for (int idx : pick) {
                const Vertex w = candidates[static_cast<std::size_t>(idx)];
                g.add_edge(v, w);
                --remaining[static_cast<std::size_t>(w)];
            }
            remaining[static_cast<std::size_t>(v)] = 0;
            fill(v + 1);
            remaining[static_cast<std::size_t>(v)] = need;
            for (int idx : pick) {
                const Vertex w = candidates[static_cast<std::size_t>(idx)];
                g.remove_edge(v, w);
                ++remaining[static_cast<std::size_t>(w)];
            }
            // Next combination in lexicographic order.
            int i = need - 1;
            const int m = static_cast<int>(candidates.size());
            while (i >= 0 && pick[static_cast<std::size_t>(i)] == m - need + i) --i;
            if (i < 0) break;
            ++pick[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < need; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
        }
    };
    fill(0);
}

}  // namespace rrg
