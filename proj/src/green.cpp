#include "rrg/green.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <queue>

#include "rrg/error.hpp"

namespace rrg {

namespace {

double edge_weight(int d) { return 1.0 / std::sqrt(d - 1.0); }

ComplexMatrix shifted_operator(const Eigen::MatrixXd& m, Complex z) {
    ComplexMatrix out = m.cast<Complex>();
    out.diagonal().array() -= z;
    return out;
}

ComplexMatrix dense_inverse(const ComplexMatrix& m) {
    Eigen::PartialPivLU<ComplexMatrix> lu(m);
    ComplexMatrix inv = lu.solve(ComplexMatrix::Identity(m.rows(), m.cols()));
    if (!inv.allFinite()) fail_numeric("resolvent: non-finite entries");
    return inv;
}

}  // namespace

Eigen::MatrixXd normalized_adjacency(const Graph& g, int d) {
    if (d < 2) fail_input("normalized_adjacency needs d >= 2");
    const int n = g.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    const double w = edge_weight(d);
    for (Vertex v = 0; v < n; ++v)
        for (Vertex u : g.neighbors(v)) h(v, u) = w;
    return h;
}

SpectralData spectral_decompose(const Eigen::MatrixXd& h, bool vectors) {
    if (h.rows() != h.cols()) fail_input("spectral_decompose: matrix not square");
    SpectralData s;
    if (h.rows() == 0) return s;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) fail_numeric("symmetric eigensolver did not converge");
    s.eigenvalues = es.eigenvalues().reverse();
    if (vectors) s.eigenvectors = es.eigenvectors().rowwise().reverse();
    return s;
}

SpectralData spectral_decompose(const RegularGraph& g, bool vectors, int cap) {
    if (g.n() > cap) fail_input("spectral_decompose: n = " + std::to_string(g.n()) + " exceeds cap " + std::to_string(cap));
    return spectral_decompose(normalized_adjacency(g.graph(), g.d()), vectors);
}

Complex stieltjes(std::span<const double> eigenvalues, const SpectralParam& z) {
    if (eigenvalues.empty()) fail_input("stieltjes: no eigenvalues");
    Complex sum = 0.0;
    for (double l : eigenvalues) sum += 1.0 / (l - z.z());
    return sum / static_cast<double>(eigenvalues.size());
}

Complex stieltjes(const SpectralData& s, const SpectralParam& z) {
    return stieltjes(std::span<const double>(s.eigenvalues.data(), static_cast<std::size_t>(s.n())), z);
}

namespace {

void require_vectors(const SpectralData& s) {
    if (!s.has_vectors()) fail_input("spectral data has no eigenvectors");
}

// Real and imaginary parts of 1 / (lambda_k - z).
std::pair<Eigen::VectorXd, Eigen::VectorXd> resolvent_weights(const SpectralData& s, const SpectralParam& z) {
    Eigen::VectorXd re(s.n());
    Eigen::VectorXd im(s.n());
    for (int k = 0; k < s.n(); ++k) {
        const Complex r = 1.0 / (s.eigenvalues(k) - z.z());
        re(k) = r.real();
        im(k) = r.imag();
    }
    return {re, im};
}

}  // namespace

Complex green_entry(const SpectralData& s, const SpectralParam& z, int i, int j) {
    require_vectors(s);
    if (i < 0 || j < 0 || i >= s.n() || j >= s.n()) fail_input("green_entry: index out of range");
    Complex sum = 0.0;
    for (int k = 0; k < s.n(); ++k)
        sum += s.eigenvectors(i, k) * s.eigenvectors(j, k) / (s.eigenvalues(k) - z.z());
    return sum;
}

ComplexVector green_diagonal(const SpectralData& s, const SpectralParam& z) {
    require_vectors(s);
    const auto [re, im] = resolvent_weights(s, z);
    const Eigen::MatrixXd sq = s.eigenvectors.array().square().matrix();
    const Eigen::VectorXd dre = sq * re;
    const Eigen::VectorXd dim = sq * im;
    ComplexVector out(s.n());
    for (int i = 0; i < s.n(); ++i) out(i) = Complex(dre(i), dim(i));
    return out;
}

GreenMatrix green_full(const SpectralData& s, const SpectralParam& z) {
    require_vectors(s);
    const auto [re, im] = resolvent_weights(s, z);
    const Eigen::MatrixXd& v = s.eigenvectors;
    const Eigen::MatrixXd gre = v * re.asDiagonal() * v.transpose();
    const Eigen::MatrixXd gim = v * im.asDiagonal() * v.transpose();
    ComplexMatrix g(s.n(), s.n());
    g.real() = gre;
    g.imag() = gim;
    return GreenMatrix(z, std::move(g));
}

GreenMatrix green_full(const RegularGraph& g, const SpectralParam& z) { return green_full(spectral_decompose(g), z); }

GreenMatrix green_full(const Graph& g, int d, const SpectralParam& z) {
    return resolvent(normalized_adjacency(g, d), z);
}

GreenMatrix resolvent(const Eigen::MatrixXd& m, const SpectralParam& z) {
    return GreenMatrix(z, dense_inverse(shifted_operator(m, z.z())));
}

Complex minor_entry(const GreenMatrix& g, int i, int j, int k) {
    const Complex gkk = g(k, k);
    if (std::abs(gkk) < 1e-12) fail_numeric("degenerate pivot G_kk in Schur formula");
    return g(i, j) - g(i, k) * g(k, j) / gkk;
}

namespace {

std::vector<Vertex> complement(int n, std::span<const Vertex> removed) {
    std::vector<char> gone(static_cast<std::size_t>(n), 0);
    for (Vertex v : removed) {
        if (v < 0 || v >= n) fail_input("green_minor: vertex out of range");
        gone[static_cast<std::size_t>(v)] = 1;
    }
    std::vector<Vertex> kept;
    for (Vertex v = 0; v < n; ++v)
        if (!gone[static_cast<std::size_t>(v)]) kept.push_back(v);
    if (kept.empty()) fail_input("green_minor: removed set must be a proper subset");
    return kept;
}

}  // namespace

GreenMatrix green_minor(const GreenMatrix& full, const Graph& g, int d, std::span<const Vertex> removed) {
    if (full.n() != g.size()) fail_input("green_minor: size mismatch");
    const std::vector<Vertex> kept = complement(g.size(), removed);
    const int m = static_cast<int>(kept.size());
    if (removed.empty()) return full;
    if (m + 1 == g.size()) {
        const int k = removed[0];
        ComplexMatrix out(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) out(a, b) = minor_entry(full, kept[a], kept[b], k);
        return GreenMatrix(full.z(), std::move(out));
    }
    return green_full(g.induced(kept), d, full.z());
}

GreenMatrix green_minor(const Graph& g, int d, const SpectralParam& z, std::span<const Vertex> removed) {
    if (removed.size() == 1) return green_minor(green_full(g, d, z), g, d, removed);
    const std::vector<Vertex> kept = complement(g.size(), removed);
    return green_full(g.induced(kept), d, z);
}

ComplexVector extension_weights(const WeightedExtension& ext) {
    const DeficitGraph& b = ext.base;
    ComplexVector w(b.size());
    for (Vertex v = 0; v < b.size(); ++v) w(v) = static_cast<double>(b.open_slots(v)) / (b.d() - 1.0) * ext.delta;
    return w;
}

Eigen::SparseMatrix<Complex> extension_operator(const WeightedExtension& ext) {
    const DeficitGraph& b = ext.base;
    const int n = b.size();
    const ComplexVector w = extension_weights(ext);
    const double h = edge_weight(b.d());
    std::vector<Eigen::Triplet<Complex>> entries;
    entries.reserve(static_cast<std::size_t>(n) + 2 * b.graph().edge_count());
    for (Vertex v = 0; v < n; ++v) {
        entries.emplace_back(v, v, -ext.z.z() - w(v));
        for (Vertex u : b.graph().neighbors(v)) entries.emplace_back(v, u, h);
    }
    Eigen::SparseMatrix<Complex> m(n, n);
    m.setFromTriplets(entries.begin(), entries.end());
    return m;
}

GreenMatrix green_ext(const WeightedExtension& ext) {
    const ComplexMatrix m(extension_operator(ext));
    return GreenMatrix(ext.z, dense_inverse(m));
}

ExtensionSolver::ExtensionSolver(const WeightedExtension& ext) : n_(ext.base.size()) {
    Eigen::SparseMatrix<Complex> m = extension_operator(ext);
    m.makeCompressed();
    lu_.analyzePattern(m);
    lu_.factorize(m);
    if (lu_.info() != Eigen::Success) fail_numeric("extension solver: factorization failed");
}

ComplexVector ExtensionSolver::column(int j) const {
    if (j < 0 || j >= n_) fail_input("extension solver: column out of range");
    ComplexVector e = ComplexVector::Zero(n_);
    e(j) = 1.0;
    ComplexVector x = lu_.solve(e);
    if (!x.allFinite()) fail_numeric("extension solver: non-finite solution");
    return x;
}

Complex Q_of_G(const RegularGraph& g, const GreenMatrix& green) {
    if (green.n() != g.n()) fail_input("Q_of_G: size mismatch");
    Complex sum = 0.0;
    for (Vertex i = 0; i < g.n(); ++i)
        for (Vertex j : g.neighbors(i)) sum += minor_entry(green, i, i, j);
    return sum / (static_cast<double>(g.n()) * g.d());
}

Complex Q_of_G(const RegularGraph& g, const SpectralData& s, const SpectralParam& z) {
    require_vectors(s);
    if (s.n() != g.n()) fail_input("Q_of_G: size mismatch");
    const auto [re, im] = resolvent_weights(s, z);
    const ComplexVector diag = green_diagonal(s, z);
    const Eigen::MatrixXd vt = s.eigenvectors.transpose();
    Complex sum = 0.0;
    for (Vertex i = 0; i < g.n(); ++i) {
        for (Vertex j : g.neighbors(i)) {
            if (j < i) continue;
            const Eigen::VectorXd p = vt.col(i).cwiseProduct(vt.col(j));
            const Complex gij(p.dot(re), p.dot(im));
            const Complex gii = diag(i);
            const Complex gjj = diag(j);
            if (std::abs(gii) < 1e-12 || std::abs(gjj) < 1e-12) fail_numeric("degenerate pivot G_jj in Q");
            sum += gii - gij * gij / gjj;
            sum += gjj - gij * gij / gii;
        }
    }
    return sum / (static_cast<double>(g.n()) * g.d());
}

Complex green_closed_tree(int dist, int anc, const SpectralParam& z, int d, TreeKind kind) {
    if (dist < 0 || anc < 0) fail_input("green_closed_tree: negative distance");
    const Complex q = -m_sc(z) / std::sqrt(d - 1.0);
    const Complex md = m_d(z, d);
    if (kind == TreeKind::regular) return md * std::pow(q, dist);
    return md * (1.0 - std::pow(q, 2 * anc + 2)) * std::pow(q, dist);
}

TruncatedTree truncated_tree(TreeKind kind, int d, int ell) {
    if (d < 3) fail_input("truncated_tree: d must be >= 3");
    if (ell < 0) fail_input("truncated_tree: negative depth");
    std::vector<Vertex> parent{-1};
    std::vector<int> depth{0};
    std::vector<Edge> edges;
    for (std::size_t v = 0; v < parent.size(); ++v) {
        if (depth[v] == ell) continue;
        const int children = (v == 0 && kind == TreeKind::regular) ? d : d - 1;
        for (int c = 0; c < children; ++c) {
            const auto child = static_cast<Vertex>(parent.size());
            parent.push_back(static_cast<Vertex>(v));
            depth.push_back(depth[v] + 1);
            edges.emplace_back(static_cast<Vertex>(v), child);
        }
    }
    const int n = static_cast<int>(parent.size());
    std::vector<int> deficit(static_cast<std::size_t>(n), 0);
    if (kind == TreeKind::ary) deficit[0] = 1;
    return {DeficitGraph(Graph::from_edges(n, edges), d, std::move(deficit)), std::move(parent), std::move(depth)};
}

OmegaProbeReport omega_probe(const DeficitGraph& g, std::span<const SpectralParam> grid) {
    const int n = g.size();
    if (n == 0) fail_input("omega_probe: empty graph");
    std::vector<std::vector<int>> dist;
    dist.reserve(static_cast<std::size_t>(n));
    for (Vertex s = 0; s < n; ++s) {
        const Vertex src[] = {s};
        const BfsResult bfs = bounded_bfs(g.graph(), src, n);
        if (static_cast<int>(bfs.vertices.size()) != n) fail_input("omega_probe: graph must be connected");
        std::vector<int> row(static_cast<std::size_t>(n));
        for (std::size_t k = 0; k < bfs.vertices.size(); ++k) row[static_cast<std::size_t>(bfs.vertices[k])] = bfs.distance[k];
        dist.push_back(std::move(row));
    }
    OmegaProbeReport rep;
    for (const SpectralParam& z : grid) {
        const Complex m = m_sc(z);
        const GreenMatrix p = green_ext({g, m, z});
        const double decay = std::abs(m) / std::sqrt(g.d() - 1.0);
        for (Vertex i = 0; i < n; ++i) {
            const double gii = std::abs(p(i, i));
            rep.c_diag = std::max({rep.c_diag, gii, 1.0 / gii});
            for (Vertex j = 0; j < n; ++j) {
                if (i == j) continue;
                const int dij = dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                rep.c_offdiag = std::max(rep.c_offdiag, std::abs(p(i, j)) / std::pow(decay, dij));
            }
        }
    }
    rep.constant = std::max(rep.c_offdiag, rep.c_diag);
    return rep;
}

namespace {

void put_u64(std::ostream& os, std::uint64_t x) {
    char bytes[8];
    for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>((x >> (8 * k)) & 0xff);
    os.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char bytes[8];
    if (!is.read(reinterpret_cast<char*>(bytes), 8)) fail_input("eigenvalue dump truncated");
    std::uint64_t x = 0;
    for (int k = 7; k >= 0; --k) x = (x << 8) | bytes[k];
    return x;
}

}  // namespace

void write_eigenvalues_binary(const std::filesystem::path& path, std::span<const double> values) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_input("cannot write " + path.string());
    put_u64(out, values.size());
    for (double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
    if (!out) fail_input("write failed for " + path.string());
}

std::vector<double> read_eigenvalues_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_input("cannot open " + path.string());
    const std::uint64_t count = get_u64(in);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
    for (std::uint64_t k = 0; k < count; ++k) out.push_back(std::bit_cast<double>(get_u64(in)));
    return out;
}

}  // namespace rrg
