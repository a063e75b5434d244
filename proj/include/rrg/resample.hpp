#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "rrg/graph.hpp"

namespace rrg {

// Boundary edges (l_a, a_a) of the ball T = B_ell(o) with l_a in T, and the
// oriented edges (b_a, c_a) drawn from G^(T). Index a runs over 0..mu-1.
struct ResamplingData {
    Vertex o = 0;
    int ell = 0;
    std::vector<Edge> boundary;
    std::vector<Edge> draws;

    int mu() const { return static_cast<int>(boundary.size()); }
    bool operator==(const ResamplingData&) const = default;
};

nlohmann::json to_json(const ResamplingData& data);
ResamplingData resampling_data_from_json(const nlohmann::json& j);

// Sorted vertex set of B_ell(o, g).
std::vector<Vertex> ball_vertices(const Graph& g, Vertex o, int ell);

// Boundary sorted by (l, a); mu independent uniform draws from the oriented
// edges of G^(T), listed in lexicographic order.
ResamplingData sample_resampling_data(const RegularGraph& g, Vertex o, int ell, Rng& rng);

// Replaces {v1, v2}, {v3, v4} by {v1, v4}, {v2, v3}.
void simple_switch(Graph& g, Vertex v1, Vertex v2, Vertex v3, Vertex v4);
RegularGraph simple_switch(const RegularGraph& g, Vertex v1, Vertex v2, Vertex v3, Vertex v4);

struct Indicators {
    std::vector<char> tree;       // I_a
    std::vector<char> isolated;   // J_a
};

// I_a: a_a not in {b_a, c_a}, and the radius-floor(R/4) ball around
// {a_a, b_a, c_a} in G^(T) plus the edge {a_a, b_a} is a tree.
// J_a: dist in G^(T) from {a_a, b_a, c_a} to every other triple exceeds
// floor(R/4), so no other triple lies inside the ball used for I_a.
// Requires R >= 1.
Indicators indicators(const RegularGraph& g, const ResamplingData& data, int R);

struct SwitchResult {
    RegularGraph graph;
    std::vector<int> admissible;  // W, ascending
    Indicators ind;
    // Switched data: for a in W the boundary edge becomes (l_a, c_a) and the
    // draw becomes (b_a, a_a); other indices are unchanged.
    ResamplingData data;
};

enum class SwitchPolicy {
    admissible,        // switch a iff I_a J_a = 1
    ignore_isolation,  // negative control: switch whenever I_a = 1 and the switch stays simple
};

SwitchResult apply_resampling(const RegularGraph& g, const ResamplingData& data, int R,
                              SwitchPolicy policy = SwitchPolicy::admissible);

// Isomorphism classes of the simple d-regular graphs on n vertices, with
// their probabilities under the uniform measure on labeled graphs.
struct ClassDistribution {
    std::vector<std::string> forms;   // canonical forms, sorted
    std::vector<double> probability;
    long labeled_count = 0;

    int index_of(const std::string& form) const;  // -1 if unknown
};

ClassDistribution class_distribution(int n, int d);

struct ResamplingTestConfig {
    int n = 8;
    int d = 3;
    int ell = 0;
    int R = 1;
    long trials = 100000;
    std::uint64_t seed = 1;
    SwitchPolicy policy = SwitchPolicy::admissible;
    bool identity = false;  // baseline: skip the switching entirely
};

struct ChiSquareReport {
    double statistic = 0;
    int dof = 0;
    double p_value = 1;
    long trials = 0;
    double nonempty_fraction = 0;   // trials with W nonempty
    std::vector<long> observed;
    std::vector<double> expected;
};

// Class counts of T_S(G) for uniform G and S, centered at o = 0, against the
// exhaustive class distribution.
ChiSquareReport measure_preservation_test(const ResamplingTestConfig& cfg);

// Bowker symmetry test on the joint class counts of (G, T_S(G)).
ChiSquareReport exchangeability_test(const ResamplingTestConfig& cfg);

// Upper tail of the chi-square distribution.
double chi_square_p_value(double statistic, int dof);

}  // namespace rrg
