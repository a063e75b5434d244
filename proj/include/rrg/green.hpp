#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "rrg/graph.hpp"
#include "rrg/scalar.hpp"

namespace rrg {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// H = A / sqrt(d-1) as a dense real matrix.
Eigen::MatrixXd normalized_adjacency(const Graph& g, int d);

inline constexpr int kSpectralCap = 5000;

// Eigenvalues of H in descending order; eigenvectors[:, k] belongs to eigenvalues[k].
struct SpectralData {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;  // empty when only eigenvalues were requested

    int n() const { return static_cast<int>(eigenvalues.size()); }
    bool has_vectors() const { return eigenvectors.size() > 0; }
};

// Dense symmetric eigensolver (Householder tridiagonalization + implicit QL).
SpectralData spectral_decompose(const Eigen::MatrixXd& h, bool vectors = true);
SpectralData spectral_decompose(const RegularGraph& g, bool vectors = true, int cap = kSpectralCap);

// m_N(z) = (1/N) sum_k 1 / (lambda_k - z).
Complex stieltjes(const SpectralData& s, const SpectralParam& z);
Complex stieltjes(std::span<const double> eigenvalues, const SpectralParam& z);

// Single entries and the diagonal of G(z) = V diag(1 / (lambda - z)) V^T.
Complex green_entry(const SpectralData& s, const SpectralParam& z, int i, int j);
ComplexVector green_diagonal(const SpectralData& s, const SpectralParam& z);

class GreenMatrix {
public:
    GreenMatrix(SpectralParam z, ComplexMatrix entries) : z_(z), g_(std::move(entries)) {}

    const SpectralParam& z() const noexcept { return z_; }
    int n() const noexcept { return static_cast<int>(g_.rows()); }
    Complex operator()(int i, int j) const { return g_(i, j); }
    const ComplexMatrix& matrix() const noexcept { return g_; }
    Complex mean_trace() const { return g_.trace() / static_cast<double>(n()); }

private:
    SpectralParam z_;
    ComplexMatrix g_;
};

GreenMatrix green_full(const SpectralData& s, const SpectralParam& z);
GreenMatrix green_full(const RegularGraph& g, const SpectralParam& z);
// Dense complex solve of (H - z) G = I for a graph with degrees <= d.
GreenMatrix green_full(const Graph& g, int d, const SpectralParam& z);
// (m - z)^{-1} for an arbitrary real symmetric m.
GreenMatrix resolvent(const Eigen::MatrixXd& m, const SpectralParam& z);

// G_ij^{(k)} = G_ij - G_ik G_kj / G_kk.
Complex minor_entry(const GreenMatrix& g, int i, int j, int k);

// Resolvent of the subgraph induced on the complement of `removed`, indexed by
// the kept vertices in increasing order. One removed vertex: Schur formula on
// `full`; more: recomputed on the induced subgraph.
GreenMatrix green_minor(const GreenMatrix& full, const Graph& g, int d, std::span<const Vertex> removed);
GreenMatrix green_minor(const Graph& g, int d, const SpectralParam& z, std::span<const Vertex> removed);

struct WeightedExtension {
    DeficitGraph base;
    Complex delta;
    SpectralParam z;
};

// Diagonal weights ((d - g(v) - deg(v)) / (d - 1)) delta.
ComplexVector extension_weights(const WeightedExtension& ext);

// H - z - diag(weights), sparse.
Eigen::SparseMatrix<Complex> extension_operator(const WeightedExtension& ext);

// Dense inverse; meant for extensions of a few hundred vertices.
GreenMatrix green_ext(const WeightedExtension& ext);

// Sparse LU of the extension operator, for extensions too large to invert densely.
class ExtensionSolver {
public:
    explicit ExtensionSolver(const WeightedExtension& ext);

    int n() const noexcept { return n_; }
    ComplexVector column(int j) const;
    Complex entry(int i, int j) const { return column(j)(i); }

private:
    int n_;
    Eigen::SparseLU<Eigen::SparseMatrix<Complex>, Eigen::COLAMDOrdering<int>> lu_;
};

// Q(G, z) = (1/(N d)) sum over directed edges (i, j) of G_ii^{(j)}.
Complex Q_of_G(const RegularGraph& g, const GreenMatrix& green);
Complex Q_of_G(const RegularGraph& g, const SpectralData& s, const SpectralParam& z);

// Closed-form Green's functions of the infinite trees. For the (d-1)-ary tree
// `anc` is the depth of the common ancestor; it is ignored for the d-regular tree.
enum class TreeKind { regular, ary };
Complex green_closed_tree(int dist, int anc, const SpectralParam& z, int d, TreeKind kind);

// Depth-ell truncation of the d-regular tree (deficit 0) or of the (d-1)-ary
// tree (deficit 1 at the root). Vertex 0 is the root, vertices in BFS order.
struct TruncatedTree {
    DeficitGraph graph;
    std::vector<Vertex> parent;  // -1 for the root
    std::vector<int> depth;
};
TruncatedTree truncated_tree(TreeKind kind, int d, int ell);

struct OmegaProbeReport {
    double c_offdiag = 0;  // max |G_ij| / (|m_sc| / sqrt(d-1))^dist(i, j)
    double c_diag = 0;     // max over i of max(|G_ii|, 1 / |G_ii|)
    double constant = 0;   // max of the two
};

// Smallest C with |G_ij(Ext(g, m_sc))| <= C (|m_sc| / sqrt(d-1))^dist and
// 1/C <= |G_ii| <= C over the grid. Diagnostic only.
OmegaProbeReport omega_probe(const DeficitGraph& g, std::span<const SpectralParam> grid);

// Little-endian: u64 count, then count f64 values.
void write_eigenvalues_binary(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_eigenvalues_binary(const std::filesystem::path& path);

}  // namespace rrg
