#include <algorithm>
#include <map>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "rrg/error.hpp"
#include "rrg/graph.hpp"
#include "rrg/graph_io.hpp"
#include "rrg/scalar.hpp"

using namespace rrg;

namespace {

Graph cycle(int n) {
    Graph g(n);
    for (int v = 0; v < n; ++v) g.add_edge(v, (v + 1) % n);
    return g;
}

Graph k4() {
    Graph g(4);
    for (int u = 0; u < 4; ++u)
        for (int v = u + 1; v < 4; ++v) g.add_edge(u, v);
    return g;
}

Graph relabel(const Graph& g, const std::vector<int>& p) {
    Graph h(g.size());
    for (const auto& [u, v] : g.edges()) h.add_edge(p[static_cast<std::size_t>(u)], p[static_cast<std::size_t>(v)]);
    return h;
}

std::vector<int> random_permutation(int n, Rng& rng) {
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(p[static_cast<std::size_t>(i)], p[uniform_index(rng, static_cast<std::uint64_t>(i + 1))]);
    return p;
}

bool is_simple_regular(const Graph& g, int d) {
    for (int v = 0; v < g.size(); ++v) {
        if (g.degree(v) != d) return false;
        auto nb = g.neighbors(v);
        for (std::size_t k = 0; k < nb.size(); ++k) {
            if (nb[k] == v) return false;
            if (k > 0 && nb[k] == nb[k - 1]) return false;
            if (!g.has_edge(nb[k], v)) return false;
        }
    }
    return true;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("generate_regular on 4 vertices gives K4") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK(generate_regular(4, 3, seed).graph() == k4());
}

TEST_CASE("generated graphs are simple and regular") {
    Rng rng = make_rng(3);
    for (int n : {8, 20, 101 * 2}) {
        for (int d : {3, 4, 5}) {
            if (n * d % 2) continue;
            const RegularGraph g = generate_regular(n, d, rng);
            CHECK(is_simple_regular(g.graph(), d));
            CHECK(g.graph().edge_count() == static_cast<std::size_t>(n * d / 2));
        }
    }
}

TEST_CASE("generate_regular rejects bad parameters") {
    CHECK_THROWS_AS(generate_regular(7, 3, 1), Error);
    CHECK_THROWS_AS(generate_regular(3, 3, 1), Error);
    try {
        generate_regular(7, 3, 1);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::input);
    }
}

TEST_CASE("generation is reproducible from the seed") {
    CHECK(generate_regular(50, 3, 11) == generate_regular(50, 3, 11));
    CHECK_FALSE(generate_regular(50, 3, 11) == generate_regular(50, 3, 12));
}

TEST_CASE("enumeration matches the brute-force oracle at n = 8, d = 3") {
    const auto masks = oracle::brute_force_regular(8, 3);
    CHECK(masks.size() == 19355);
    std::vector<oracle::Mask> enumerated;
    enumerate_regular_graphs(8, 3, [&](const Graph& g) { enumerated.push_back(oracle::mask_of(g)); });
    std::sort(enumerated.begin(), enumerated.end());
    CHECK(std::adjacent_find(enumerated.begin(), enumerated.end()) == enumerated.end());
    CHECK(enumerated == masks);

    const auto orbits = oracle::orbits(8, masks);
    CHECK(orbits.representative.size() == 6);
    long total = 0;
    for (std::size_t k = 0; k < orbits.size.size(); ++k) {
        CHECK(orbits.size[k] * oracle::automorphisms(8, orbits.representative[k]) == 40320);
        total += orbits.size[k];
    }
    CHECK(total == 19355);
}

TEST_CASE("canonical form separates exactly the isomorphism classes") {
    const auto masks = oracle::brute_force_regular(8, 3);
    const auto orbits = oracle::orbits(8, masks);
    std::map<std::string, int> form_class;
    for (oracle::Mask m : masks) {
        const std::string f = canonical_form(oracle::graph_of(8, m));
        const int cls = orbits.class_of.at(m);
        auto [it, fresh] = form_class.emplace(f, cls);
        CHECK(it->second == cls);
    }
    CHECK(form_class.size() == 6);
}

TEST_CASE("canonical form is invariant under relabeling") {
    Rng rng = make_rng(5);
    std::vector<Graph> samples{k4(), cycle(6), generate_regular(10, 3, rng).graph(), generate_regular(12, 4, rng).graph()};
    for (const Graph& g : samples) {
        const std::string f = canonical_form(g);
        for (int t = 0; t < 100; ++t) CHECK(canonical_form(relabel(g, random_permutation(g.size(), rng))) == f);
    }
    Graph triangles(6);
    for (int base : {0, 3})
        for (int k = 0; k < 3; ++k) triangles.add_edge(base + k, base + (k + 1) % 3);
    CHECK(canonical_form(triangles) != canonical_form(cycle(6)));
    CHECK_THROWS_AS(canonical_form(cycle(13)), Error);
}

TEST_CASE("uniform generation matches the exhaustive class distribution") {
    const auto masks = oracle::brute_force_regular(8, 3);
    const auto orbits = oracle::orbits(8, masks);
    const long samples = 100000;
    std::vector<long> counts(orbits.size.size(), 0);
    Rng rng = make_rng(2024);
    for (long s = 0; s < samples; ++s)
        ++counts[static_cast<std::size_t>(orbits.class_of.at(oracle::mask_of(generate_regular(8, 3, rng).graph())))];
    double stat = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const double e = samples * static_cast<double>(orbits.size[k]) / 19355.0;
        stat += (counts[k] - e) * (counts[k] - e) / e;
    }
    const double p = oracle::chi_square_upper(stat, static_cast<int>(counts.size()) - 1);
    INFO("chi2 = " << stat << ", p = " << p);
    CHECK(p > 1e-3);
}

TEST_CASE("ball") {
    const RegularGraph g(k4(), 3);
    const Vertex zero[] = {0};
    CHECK(ball(g, zero, 1).subgraph.size() == 4);
    const Neighborhood b0 = ball(g, zero, 0);
    CHECK(b0.subgraph.size() == 1);
    CHECK(b0.subgraph.graph().edge_count() == 0);

    const DeficitGraph c6 = DeficitGraph::zero_deficit(cycle(6), 3);
    const Neighborhood b = ball(c6, zero, 2);
    std::vector<Vertex> ids = b.parent_id;
    CHECK(ids == std::vector<Vertex>{0, 1, 5, 2, 4});
    CHECK(b.distance == std::vector<int>{0, 1, 1, 2, 2});
    CHECK(b.subgraph.graph().edge_count() == 4);
    CHECK(excess(b.subgraph.graph()) == 0);

    const Vertex bad[] = {9};
    CHECK_THROWS_AS(ball(g, bad, 1), Error);
}

TEST_CASE("ball agrees with all-pairs BFS") {
    Rng rng = make_rng(8);
    for (int t = 0; t < 5; ++t) {
        const RegularGraph g = generate_regular(200, 3, rng);
        const auto dist = oracle::all_pairs_distance(g.graph());
        for (int i : {0, 17, 199}) {
            for (int r = 0; r <= 5; ++r) {
                const Vertex c[] = {i};
                const Neighborhood b = ball(g, c, r);
                std::vector<Vertex> got = b.parent_id;
                std::sort(got.begin(), got.end());
                std::vector<Vertex> want;
                for (int j = 0; j < 200; ++j)
                    if (dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] <= r) want.push_back(j);
                CHECK(got == want);
                for (std::size_t k = 0; k < b.parent_id.size(); ++k) {
                    CHECK(b.distance[k] == dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(b.parent_id[k])]);
                    for (std::size_t m = 0; m < b.parent_id.size(); ++m)
                        CHECK(b.subgraph.graph().has_edge(static_cast<Vertex>(k), static_cast<Vertex>(m)) ==
                              g.graph().has_edge(b.parent_id[k], b.parent_id[m]));
                }
            }
        }
    }
}

TEST_CASE("excess") {
    Graph path(5);
    for (int v = 0; v + 1 < 5; ++v) path.add_edge(v, v + 1);
    CHECK(excess(path) == 0);
    CHECK(excess(cycle(7)) == 1);
    Graph two(6);
    for (int base : {0, 3})
        for (int k = 0; k < 3; ++k) two.add_edge(base + k, base + (k + 1) % 3);
    CHECK(excess(two) == 2);
    CHECK(excess(k4()) == 3);
    CHECK(excess(Graph(3)) == 0);
}

TEST_CASE("excess is additive and monotone under edge deletion") {
    Rng rng = make_rng(4);
    const RegularGraph a = generate_regular(20, 3, rng);
    const RegularGraph b = generate_regular(14, 3, rng);
    Graph both(34);
    for (const auto& [u, v] : a.graph().edges()) both.add_edge(u, v);
    for (const auto& [u, v] : b.graph().edges()) both.add_edge(u + 20, v + 20);
    CHECK(excess(both) == excess(a.graph()) + excess(b.graph()));
    Graph h = a.graph();
    long prev = excess(h);
    for (const auto& [u, v] : a.graph().edges()) {
        h.remove_edge(u, v);
        const long e = excess(h);
        CHECK(e <= prev);
        CHECK(e >= 0);
        prev = e;
    }
}

TEST_CASE("remove_vertices updates the deficit") {
    const DeficitGraph g = DeficitGraph::zero_deficit(k4(), 3);
    const Vertex three[] = {3};
    const DeficitGraph t = remove_vertices(g, three);
    CHECK(t.size() == 3);
    CHECK(t.graph().edge_count() == 3);
    CHECK(t.deficits() == std::vector<int>{1, 1, 1});
    CHECK(t.global_ids() == std::vector<Vertex>{0, 1, 2});

    const DeficitGraph same = remove_vertices(g, {});
    CHECK(same.graph() == g.graph());
    CHECK(same.deficits() == g.deficits());

    Graph p3(3);
    p3.add_edge(0, 1);
    p3.add_edge(1, 2);
    const Vertex mid[] = {1};
    const DeficitGraph split = remove_vertices(DeficitGraph::zero_deficit(p3, 3), mid);
    CHECK(split.graph().edge_count() == 0);
    CHECK(split.deficits() == std::vector<int>{1, 1});
    CHECK(split.global_ids() == std::vector<Vertex>{0, 2});
}

TEST_CASE("deficit change counts removed neighbors") {
    Rng rng = make_rng(6);
    const RegularGraph g = generate_regular(60, 4, rng);
    const DeficitGraph full = DeficitGraph::from_regular(g);
    std::vector<Vertex> removed{3, 10, 11, 40};
    const DeficitGraph t = remove_vertices(full, removed);
    for (Vertex k = 0; k < t.size(); ++k) {
        const Vertex v = t.global_id(k);
        int lost = 0;
        for (Vertex w : g.neighbors(v)) lost += std::count(removed.begin(), removed.end(), w) > 0;
        CHECK(t.deficit(k) - full.deficit(v) == lost);
        CHECK(t.open_slots(k) == 0);
    }
    const Vertex more[] = {0, 1};
    const DeficitGraph t2 = remove_vertices(t, more);
    CHECK(t2.global_id(0) == t.global_id(2));
}

TEST_CASE("graph_distance") {
    const Graph c = cycle(8);
    const Vertex a[] = {0, 1};
    const Vertex b[] = {1, 5};
    CHECK(graph_distance(c, a, b) == 0);
    const Vertex x[] = {2};
    const Vertex y[] = {3};
    CHECK(graph_distance(c, x, y) == 1);
    const Vertex far[] = {6};
    CHECK(graph_distance(c, x, far) == 4);
    Graph two(6);
    for (int base : {0, 3})
        for (int k = 0; k < 3; ++k) two.add_edge(base + k, base + (k + 1) % 3);
    const Vertex p[] = {0};
    const Vertex q[] = {4};
    CHECK(graph_distance(two, p, q) == kInfiniteDistance);
}

TEST_CASE("classify_tree_like") {
    const RegularGraph g(k4(), 3);
    const TreeLikeReport r = classify_tree_like(g, {1, 3, 0.99, 10});
    CHECK(r.max_excess == 3);
    CHECK(r.cycle_vertex_count == 4);
    CHECK_FALSE(r.tree_like);
    CHECK_THROWS_AS(classify_tree_like(g, {0, 1, 0.99, 10}), Error);

    // Petersen graph: girth 5, so radius-1 balls are trees; radius 2 covers the graph.
    Graph pet(10);
    for (int k = 0; k < 5; ++k) {
        pet.add_edge(k, (k + 1) % 5);
        pet.add_edge(k, k + 5);
        pet.add_edge(5 + k, 5 + (k + 2) % 5);
    }
    const TreeLikeReport p = classify_tree_like(RegularGraph(pet, 3), {1, 1, 0.99, 10});
    CHECK(p.max_excess == 0);
    CHECK(p.cycle_vertex_count == 0);
    CHECK(p.tree_like);
    CHECK(p.tree_like_relaxed);
    const TreeLikeReport whole = classify_tree_like(RegularGraph(pet, 3), {2, 1, 0.99, 10});
    CHECK(whole.max_excess == 6);
    CHECK(whole.cycle_vertex_count == 10);
}

TEST_CASE("graph JSON and edge-list round trip") {
    const RegularGraph g = generate_regular(12, 3, 9);
    CHECK(regular_graph_from_json(to_json(g)) == g);
    std::stringstream ss;
    write_edge_list(ss, g);
    CHECK(read_edge_list(ss) == g);
    const auto j = to_json(g);
    CHECK(j.at("edges")[0][0].get<int>() < j.at("edges")[0][1].get<int>());
    CHECK_THROWS_AS(regular_graph_from_json(nlohmann::json{{"n", 4}, {"d", 3}, {"edges", {{0, 1}}}}), Error);
}

}  // TEST_SUITE

TEST_SUITE("graph_mc") {

TEST_CASE("tree-like verdict rate at N = 1000 with the schedule radius") {
    const ParameterSet p = make_parameters(1000, 3);
    REQUIRE(p.R() == 2);
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const RegularGraph g = generate_regular(1000, 3, seed);
        ok += classify_tree_like(g, {p.R(), 1, p.choice.c, p.choice.c_q}).tree_like;
    }
    MESSAGE("tree-like verdicts: " << ok << " / 100");
    CHECK(ok >= 90);
}

}  // TEST_SUITE
