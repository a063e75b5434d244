#include "rrg/resample.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <unordered_map>

#include <boost/math/distributions/chi_squared.hpp>

#include "rrg/error.hpp"

namespace rrg {

namespace {

nlohmann::json edges_json(const std::vector<Edge>& edges) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [u, v] : edges) out.push_back({u, v});
    return out;
}

std::vector<Edge> edges_from_json(const nlohmann::json& j) {
    std::vector<Edge> out;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2) fail_input("resampling JSON: each edge must be a pair");
        out.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return out;
}

std::vector<char> membership(int n, const std::vector<Vertex>& vertices) {
    std::vector<char> in(static_cast<std::size_t>(n), 0);
    for (Vertex v : vertices) in[static_cast<std::size_t>(v)] = 1;
    return in;
}

}  // namespace

nlohmann::json to_json(const ResamplingData& data) {
    return {{"o", data.o}, {"ell", data.ell}, {"boundary", edges_json(data.boundary)}, {"draws", edges_json(data.draws)}};
}

ResamplingData resampling_data_from_json(const nlohmann::json& j) {
    try {
        ResamplingData data;
        data.o = j.at("o").get<int>();
        data.ell = j.at("ell").get<int>();
        data.boundary = edges_from_json(j.at("boundary"));
        data.draws = edges_from_json(j.at("draws"));
        if (data.boundary.size() != data.draws.size()) fail_input("resampling JSON: boundary and draws differ in length");
        return data;
    } catch (const nlohmann::json::exception& ex) {
        fail_input(std::string("resampling JSON: ") + ex.what());
    }
}

std::vector<Vertex> ball_vertices(const Graph& g, Vertex o, int ell) {
    const Vertex src[] = {o};
    std::vector<Vertex> out = bounded_bfs(g, src, ell).vertices;
    std::sort(out.begin(), out.end());
    return out;
}

ResamplingData sample_resampling_data(const RegularGraph& g, Vertex o, int ell, Rng& rng) {
    if (o < 0 || o >= g.n()) fail_input("resampling center out of range");
    if (ell < 0) fail_input("resampling radius must be nonnegative");
    const std::vector<Vertex> ball = ball_vertices(g.graph(), o, ell);
    if (static_cast<int>(ball.size()) == g.n()) fail_input("the radius-ell ball covers the whole graph");
    const std::vector<char> in = membership(g.n(), ball);

    ResamplingData data;
    data.o = o;
    data.ell = ell;
    for (Vertex l : ball)
        for (Vertex a : g.neighbors(l))
            if (!in[static_cast<std::size_t>(a)]) data.boundary.emplace_back(l, a);

    std::vector<Edge> outside;
    for (Vertex b = 0; b < g.n(); ++b) {
        if (in[static_cast<std::size_t>(b)]) continue;
        for (Vertex c : g.neighbors(b))
            if (!in[static_cast<std::size_t>(c)]) outside.emplace_back(b, c);
    }
    if (outside.empty()) fail_input("no oriented edges outside the ball");
    for (int k = 0; k < data.mu(); ++k) data.draws.push_back(outside[uniform_index(rng, outside.size())]);
    return data;
}

void simple_switch(Graph& g, Vertex v1, Vertex v2, Vertex v3, Vertex v4) {
    const std::vector<Vertex> vs{v1, v2, v3, v4};
    for (std::size_t i = 0; i < vs.size(); ++i)
        for (std::size_t j = i + 1; j < vs.size(); ++j)
            if (vs[i] == vs[j]) fail_input("switch vertices must be distinct");
    if (!g.has_edge(v1, v2) || !g.has_edge(v3, v4)) fail_input("switch: {v1,v2} and {v3,v4} must be edges");
    if (g.has_edge(v1, v4) || g.has_edge(v2, v3)) fail_input("switch would create a repeated edge");
    g.remove_edge(v1, v2);
    g.remove_edge(v3, v4);
    g.add_edge(v1, v4);
    g.add_edge(v2, v3);
}

RegularGraph simple_switch(const RegularGraph& g, Vertex v1, Vertex v2, Vertex v3, Vertex v4) {
    Graph h = g.graph();
    simple_switch(h, v1, v2, v3, v4);
    return RegularGraph(std::move(h), g.d());
}

namespace {

void check_data(const RegularGraph& g, const ResamplingData& data, const std::vector<char>& in) {
    if (data.boundary.size() != data.draws.size()) fail_input("resampling data: boundary and draws differ in length");
    for (int k = 0; k < data.mu(); ++k) {
        const auto [l, a] = data.boundary[static_cast<std::size_t>(k)];
        const auto [b, c] = data.draws[static_cast<std::size_t>(k)];
        for (Vertex v : {l, a, b, c})
            if (v < 0 || v >= g.n()) fail_input("resampling data: vertex out of range");
        if (!in[static_cast<std::size_t>(l)] || in[static_cast<std::size_t>(a)] || !g.graph().has_edge(l, a))
            fail_input("resampling data: boundary edge does not leave the ball");
        if (in[static_cast<std::size_t>(b)] || in[static_cast<std::size_t>(c)] || !g.graph().has_edge(b, c))
            fail_input("resampling data: draw is not an edge outside the ball");
    }
}

bool tree_condition(const Graph& g, const std::function<bool(Vertex)>& blocked, Vertex a, Vertex b, Vertex c,
                    int radius) {
    if (a == b || a == c || g.has_edge(a, b)) return false;
    const Vertex src[] = {a, b, c};
    const BfsResult bfs = bounded_bfs(g, src, radius, blocked);
    Graph sub = g.induced(bfs.vertices);
    const auto local = [&](Vertex v) {
        return static_cast<Vertex>(std::find(bfs.vertices.begin(), bfs.vertices.end(), v) - bfs.vertices.begin());
    };
    sub.add_edge(local(a), local(b));
    return sub.edge_count() + 1 == bfs.vertices.size() && excess(sub) == 0;
}

}  // namespace

Indicators indicators(const RegularGraph& g, const ResamplingData& data, int R) {
    if (R < 1) fail_input("indicators need R >= 1");
    const std::vector<Vertex> ball = ball_vertices(g.graph(), data.o, data.ell);
    const std::vector<char> in = membership(g.n(), ball);
    check_data(g, data, in);
    const auto blocked = [&](Vertex v) { return in[static_cast<std::size_t>(v)] != 0; };

    const int mu = data.mu();
    Indicators ind;
    ind.tree.assign(static_cast<std::size_t>(mu), 0);
    ind.isolated.assign(static_cast<std::size_t>(mu), 1);

    const auto triple = [&](int k) {
        const auto [l, a] = data.boundary[static_cast<std::size_t>(k)];
        const auto [b, c] = data.draws[static_cast<std::size_t>(k)];
        return std::array<Vertex, 3>{a, b, c};
    };

    for (int k = 0; k < mu; ++k) {
        const auto t = triple(k);
        ind.tree[static_cast<std::size_t>(k)] = tree_condition(g.graph(), blocked, t[0], t[1], t[2], R / 4);
    }

    // Another triple within distance floor(R/4) clears J_a.
    const int reach = R / 4;
    std::unordered_map<Vertex, std::vector<int>> owners;
    for (int k = 0; k < mu; ++k)
        for (Vertex v : triple(k)) owners[v].push_back(k);
    for (int k = 0; k < mu; ++k) {
        const auto t = triple(k);
        const BfsResult bfs = bounded_bfs(g.graph(), t, reach, blocked);
        for (Vertex v : bfs.vertices) {
            const auto it = owners.find(v);
            if (it == owners.end()) continue;
            for (int other : it->second)
                if (other != k) ind.isolated[static_cast<std::size_t>(k)] = 0;
        }
    }
    return ind;
}

namespace {

bool switch_is_simple(const Graph& g, Vertex l, Vertex a, Vertex b, Vertex c) {
    if (l == a || l == b || l == c || a == b || a == c || b == c) return false;
    return g.has_edge(l, a) && g.has_edge(b, c) && !g.has_edge(l, c) && !g.has_edge(a, b);
}

Graph switch_in_order(Graph h, const ResamplingData& data, const std::vector<int>& order) {
    for (int k : order) {
        const auto [l, a] = data.boundary[static_cast<std::size_t>(k)];
        const auto [b, c] = data.draws[static_cast<std::size_t>(k)];
        simple_switch(h, l, a, b, c);
    }
    return h;
}

}  // namespace

SwitchResult apply_resampling(const RegularGraph& g, const ResamplingData& data, int R, SwitchPolicy policy) {
    Indicators ind = indicators(g, data, R);
    std::vector<int> switched;
    Graph h = g.graph();
    if (policy == SwitchPolicy::admissible) {
        for (int k = 0; k < data.mu(); ++k)
            if (ind.tree[static_cast<std::size_t>(k)] && ind.isolated[static_cast<std::size_t>(k)]) switched.push_back(k);
        try {
            h = switch_in_order(std::move(h), data, switched);
#ifndef NDEBUG
            std::vector<int> reversed(switched.rbegin(), switched.rend());
            if (!(switch_in_order(g.graph(), data, reversed) == h)) fail_internal("switch order changed the result");
#endif
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::internal) throw;
            fail_internal(std::string("admissible switch failed: ") + e.what());
        }
    } else {
        for (int k = 0; k < data.mu(); ++k) {
            if (!ind.tree[static_cast<std::size_t>(k)]) continue;
            const auto [l, a] = data.boundary[static_cast<std::size_t>(k)];
            const auto [b, c] = data.draws[static_cast<std::size_t>(k)];
            if (!switch_is_simple(h, l, a, b, c)) continue;
            simple_switch(h, l, a, b, c);
            switched.push_back(k);
        }
    }

    ResamplingData out = data;
    for (int k : switched)
        std::swap(out.boundary[static_cast<std::size_t>(k)].second, out.draws[static_cast<std::size_t>(k)].second);
    try {
        return {RegularGraph(std::move(h), g.d()), std::move(switched), std::move(ind), std::move(out)};
    } catch (const Error& e) {
        fail_internal(std::string("switched graph is not simple d-regular: ") + e.what());
    }
}

int ClassDistribution::index_of(const std::string& form) const {
    const auto it = std::lower_bound(forms.begin(), forms.end(), form);
    if (it == forms.end() || *it != form) return -1;
    return static_cast<int>(it - forms.begin());
}

ClassDistribution class_distribution(int n, int d) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, ClassDistribution> cache;
    std::lock_guard lock(mutex);
    if (auto it = cache.find({n, d}); it != cache.end()) return it->second;

    std::map<std::string, long> counts;
    long total = 0;
    enumerate_regular_graphs(n, d, [&](const Graph& g) {
        ++counts[canonical_form(g)];
        ++total;
    });
    if (total == 0) fail_input("no simple d-regular graphs with these parameters");
    ClassDistribution cd;
    cd.labeled_count = total;
    for (const auto& [form, count] : counts) {
        cd.forms.push_back(form);
        cd.probability.push_back(static_cast<double>(count) / static_cast<double>(total));
    }
    cache.emplace(std::pair(n, d), cd);
    return cd;
}

double chi_square_p_value(double statistic, int dof) {
    if (dof <= 0) return 1.0;
    if (!(statistic >= 0)) fail_numeric("chi-square statistic must be nonnegative");
    boost::math::chi_squared_distribution<double> dist(dof);
    return boost::math::cdf(boost::math::complement(dist, statistic));
}

namespace {

// Class index of a labeled graph, memoized on its edge bitmask.
class Classifier {
public:
    explicit Classifier(const ClassDistribution& cd) : cd_(cd) {}

    int operator()(const Graph& g) {
        if (g.size() > 11) fail_input("class statistics need n <= 11");
        std::uint64_t key = 0;
        for (const auto& [u, v] : g.edges()) key |= std::uint64_t{1} << (u * g.size() + v);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        const int idx = cd_.index_of(canonical_form(g));
        if (idx < 0) fail_internal("graph outside the enumerated classes");
        memo_.emplace(key, idx);
        return idx;
    }

private:
    const ClassDistribution& cd_;
    std::unordered_map<std::uint64_t, int> memo_;
};

// Runs the trials and returns the (class(G), class(T_S(G))) counts.
std::vector<std::vector<long>> joint_counts(const ResamplingTestConfig& cfg, const ClassDistribution& cd,
                                            long& nonempty) {
    const std::size_t k = cd.forms.size();
    std::vector<std::vector<long>> joint(k, std::vector<long>(k, 0));
    Classifier classify(cd);
    Rng rng = make_rng(cfg.seed);
    nonempty = 0;
    for (long t = 0; t < cfg.trials; ++t) {
        const RegularGraph g = generate_regular(cfg.n, cfg.d, rng);
        const int before = classify(g.graph());
        int after = before;
        if (!cfg.identity) {
            const ResamplingData data = sample_resampling_data(g, 0, cfg.ell, rng);
            const SwitchResult res = apply_resampling(g, data, cfg.R, cfg.policy);
            if (!res.admissible.empty()) ++nonempty;
            after = classify(res.graph.graph());
        }
        ++joint[static_cast<std::size_t>(before)][static_cast<std::size_t>(after)];
    }
    return joint;
}

}  // namespace

ChiSquareReport measure_preservation_test(const ResamplingTestConfig& cfg) {
    if (cfg.trials <= 0) fail_input("trials must be positive");
    const ClassDistribution cd = class_distribution(cfg.n, cfg.d);
    long nonempty = 0;
    const auto joint = joint_counts(cfg, cd, nonempty);

    ChiSquareReport rep;
    rep.trials = cfg.trials;
    rep.nonempty_fraction = static_cast<double>(nonempty) / static_cast<double>(cfg.trials);
    const std::size_t k = cd.forms.size();
    rep.observed.assign(k, 0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) rep.observed[j] += joint[i][j];
    for (std::size_t j = 0; j < k; ++j) {
        const double e = cd.probability[j] * static_cast<double>(cfg.trials);
        rep.expected.push_back(e);
        const double diff = static_cast<double>(rep.observed[j]) - e;
        rep.statistic += diff * diff / e;
    }
    rep.dof = static_cast<int>(k) - 1;
    rep.p_value = chi_square_p_value(rep.statistic, rep.dof);
    return rep;
}

ChiSquareReport exchangeability_test(const ResamplingTestConfig& cfg) {
    if (cfg.trials <= 0) fail_input("trials must be positive");
    const ClassDistribution cd = class_distribution(cfg.n, cfg.d);
    long nonempty = 0;
    const auto joint = joint_counts(cfg, cd, nonempty);

    ChiSquareReport rep;
    rep.trials = cfg.trials;
    rep.nonempty_fraction = static_cast<double>(nonempty) / static_cast<double>(cfg.trials);
    const std::size_t k = cd.forms.size();
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const long a = joint[i][j];
            const long b = joint[j][i];
            rep.observed.push_back(a);
            rep.observed.push_back(b);
            rep.expected.push_back(0.5 * static_cast<double>(a + b));
            if (a + b == 0) continue;
            const double diff = static_cast<double>(a - b);
            rep.statistic += diff * diff / static_cast<double>(a + b);
            ++rep.dof;
        }
    }
    rep.p_value = chi_square_p_value(rep.statistic, rep.dof);
    return rep;
}

}  // namespace rrg
