#pragma once

// Test instances and checks shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rrg/green.hpp"
#include "rrg/rng.hpp"

namespace fixture {

using rrg::Complex;

inline std::vector<rrg::SpectralParam> z_grid(int ne, int neta, double emax, double eta_lo, double eta_hi) {
    std::vector<rrg::SpectralParam> out;
    for (int a = 0; a < ne; ++a)
        for (int b = 0; b < neta; ++b) {
            const double e = ne == 1 ? 0.0 : -emax + 2 * emax * a / (ne - 1);
            const double eta = neta == 1 ? eta_lo : eta_lo * std::pow(eta_hi / eta_lo, b / (neta - 1.0));
            out.emplace_back(e, eta);
        }
    return out;
}

// Max entrywise gap between green_ext on the depth-ell truncated tree with
// delta = m_sc and the infinite-tree formula m_d q^dist (times 1 - q^(2 anc + 2)
// on the (d-1)-ary tree), q = -m_sc / sqrt(d-1).
inline double truncated_tree_gap(rrg::TreeKind kind, int d, int ell, const rrg::SpectralParam& z) {
    const rrg::TruncatedTree t = rrg::truncated_tree(kind, d, ell);
    const Complex m = rrg::m_sc(z);
    const Complex q = -m / std::sqrt(d - 1.0);
    const Complex md = m / (1.0 - m * m / (d - 1.0));
    std::vector<Complex> qpow(static_cast<std::size_t>(2 * ell + 3), 1.0);
    for (std::size_t k = 1; k < qpow.size(); ++k) qpow[k] = qpow[k - 1] * q;
    const rrg::ExtensionSolver solver({t.graph, m, z});
    double gap = 0;
    for (int j = 0; j < solver.n(); ++j) {
        const rrg::ComplexVector col = solver.column(j);
        for (int i = 0; i < solver.n(); ++i) {
            const auto [dist, anc] = oracle::tree_dist_anc(t.parent, t.depth, i, j);
            Complex want = md * qpow[static_cast<std::size_t>(dist)];
            if (kind == rrg::TreeKind::ary) want *= 1.0 - qpow[static_cast<std::size_t>(2 * anc + 2)];
            gap = std::max(gap, std::abs(col(i) - want));
        }
    }
    return gap;
}

// Cycle of length `cycle` with a path of `tail` extra vertices hanging off
// vertex 0; zero deficit, so every vertex takes trees up to degree d.
inline rrg::DeficitGraph lollipop(int cycle, int tail, int d) {
    rrg::Graph g(cycle + tail);
    for (int v = 0; v < cycle; ++v) g.add_edge(v, (v + 1) % cycle);
    for (int k = 0; k < tail; ++k) g.add_edge(k == 0 ? 0 : cycle + k - 1, cycle + k);
    return rrg::DeficitGraph::zero_deficit(std::move(g), d);
}

// Random connected subtree of the depth-`depth` (d-1)-ary tree containing the
// root, each child kept with probability p; deficit 1 at the root.
inline rrg::DeficitGraph random_subtree(int d, int depth, double p, rrg::Rng& rng) {
    const rrg::TruncatedTree full = rrg::truncated_tree(rrg::TreeKind::ary, d, depth);
    std::vector<rrg::Vertex> keep{0};
    std::vector<int> local(full.parent.size(), -1);
    local[0] = 0;
    std::vector<rrg::Edge> edges;
    for (std::size_t v = 1; v < full.parent.size(); ++v) {
        const int par = local[static_cast<std::size_t>(full.parent[v])];
        if (par < 0 || rrg::uniform_real(rng) >= p) continue;
        local[v] = static_cast<int>(keep.size());
        keep.push_back(static_cast<rrg::Vertex>(v));
        edges.emplace_back(par, local[v]);
    }
    const int n = static_cast<int>(keep.size());
    std::vector<int> deficit(static_cast<std::size_t>(n), 0);
    deficit[0] = 1;
    return rrg::DeficitGraph(rrg::Graph::from_edges(n, edges), d, std::move(deficit));
}

inline int diameter(const rrg::Graph& g) {
    int best = 0;
    for (const auto& row : oracle::all_pairs_distance(g))
        for (int x : row) best = std::max(best, x);
    return best;
}

inline Complex random_phase(rrg::Rng& rng) { return std::polar(1.0, 2 * M_PI * rrg::uniform_real(rng)); }

}  // namespace fixture
