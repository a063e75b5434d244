#include "rrg/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "rrg/error.hpp"
#include "rrg/graph_io.hpp"
#include "rrg/resample.hpp"
#include "rrg/rng.hpp"

namespace rrg {

using nlohmann::json;

SpectralParam ZPoint::at(double n) const {
    const double e = eta_power ? std::pow(n, *eta_power) : eta;
    if (!(e > 0) || !std::isfinite(e) || !std::isfinite(energy)) fail_input("z point needs finite energy and eta > 0");
    return SpectralParam(energy, e);
}

std::vector<SpectralParam> ZGridSpec::points(double n) const {
    if (e_points < 0 || eta_points < 0) fail_input("z grid: negative point count");
    if (e_points > 0 && e_max < e_min) fail_input("z grid: e_max < e_min");
    std::vector<double> energies;
    for (int a = 0; a < e_points; ++a)
        energies.push_back(e_points == 1 ? e_min : e_min + (e_max - e_min) * a / (e_points - 1));
    std::vector<double> etas;
    const double lo = eta_floor / n;
    if (eta_points > 0 && !(lo > 0 && lo <= eta_max)) fail_input("z grid: need 0 < eta_floor / N <= eta_max");
    for (int b = 0; b < eta_points; ++b) {
        if (eta_points == 1) {
            etas.push_back(lo);
            continue;
        }
        const double t = b / (eta_points - 1.0);
        etas.push_back(log_spacing ? lo * std::pow(eta_max / lo, t) : lo + (eta_max - lo) * t);
    }
    for (double f : far_etas) {
        if (!(f > 0)) fail_input("z grid: far-field eta must be positive");
        etas.push_back(f);
    }
    std::vector<SpectralParam> out;
    for (double eta : etas)
        for (double e : energies) out.emplace_back(e, eta);
    return out;
}

// ---- config JSON ----

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
    if (!j.is_object()) fail_input(std::string(where) + ": expected a JSON object");
    for (const auto& [k, v] : j.items()) {
        (void)v;
        if (std::none_of(keys.begin(), keys.end(), [&](const char* s) { return k == s; }))
            fail_input(std::string(where) + ": unknown key '" + k + "'");
    }
}

template <class T>
void take(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail_input(std::string("config key '") + key + "': " + e.what());
    }
}

template <class T>
void take_opt(const json& j, const char* key, std::optional<T>& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    T v{};
    take(j, key, v);
    out = v;
}

json zpoint_json(const ZPoint& p) {
    json j{{"E", p.energy}};
    if (p.eta_power) j["eta_power"] = *p.eta_power;
    else j["eta"] = p.eta;
    return j;
}

ZPoint zpoint_from(const json& j) {
    reject_unknown(j, {"E", "eta", "eta_power"}, "z_points entry");
    ZPoint p;
    take(j, "E", p.energy);
    take(j, "eta", p.eta);
    take_opt(j, "eta_power", p.eta_power);
    return p;
}

}  // namespace

json to_json(const ExperimentConfig& cfg) {
    json grid{{"e_min", cfg.grid.e_min},           {"e_max", cfg.grid.e_max},
              {"e_points", cfg.grid.e_points},     {"eta_floor", cfg.grid.eta_floor},
              {"eta_max", cfg.grid.eta_max},       {"eta_points", cfg.grid.eta_points},
              {"log_spacing", cfg.grid.log_spacing}, {"far_etas", cfg.grid.far_etas}};
    json zs = json::array();
    for (const auto& p : cfg.z_points) zs.push_back(zpoint_json(p));
    const ParameterChoice& c = cfg.params;
    json params{{"c", c.c}, {"a", c.a}, {"b", c.b}, {"r_coef", c.r_coef}, {"omega", c.omega}, {"c_q", c.c_q}};
    json j{{"experiment", cfg.experiment},
           {"d", cfg.d},
           {"n_list", cfg.n_list},
           {"samples", cfg.samples},
           {"seed", cfg.seed},
           {"grid", grid},
           {"z_points", zs},
           {"params", params},
           {"R", cfg.R ? json(*cfg.R) : json(nullptr)},
           {"r", cfg.r ? json(*cfg.r) : json(nullptr)},
           {"ell", cfg.ell ? json(*cfg.ell) : json(nullptr)},
           {"pairs", cfg.pairs},
           {"eigenvalues_only", cfg.eigenvalues_only},
           {"practical_constant", cfg.practical_constant},
           {"thresholds", cfg.thresholds}};
    return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
    reject_unknown(j,
                   {"experiment", "d", "n_list", "samples", "seed", "grid", "z_points", "params", "R", "r", "ell",
                    "pairs", "eigenvalues_only", "practical_constant", "thresholds"},
                   "experiment config");
    ExperimentConfig cfg;
    take(j, "experiment", cfg.experiment);
    take(j, "d", cfg.d);
    take(j, "n_list", cfg.n_list);
    take(j, "samples", cfg.samples);
    take(j, "seed", cfg.seed);
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        reject_unknown(g, {"e_min", "e_max", "e_points", "eta_floor", "eta_max", "eta_points", "log_spacing", "far_etas"},
                       "grid");
        take(g, "e_min", cfg.grid.e_min);
        take(g, "e_max", cfg.grid.e_max);
        take(g, "e_points", cfg.grid.e_points);
        take(g, "eta_floor", cfg.grid.eta_floor);
        take(g, "eta_max", cfg.grid.eta_max);
        take(g, "eta_points", cfg.grid.eta_points);
        take(g, "log_spacing", cfg.grid.log_spacing);
        take(g, "far_etas", cfg.grid.far_etas);
    }
    if (j.contains("z_points")) {
        if (!j.at("z_points").is_array()) fail_input("z_points must be an array");
        for (const auto& p : j.at("z_points")) cfg.z_points.push_back(zpoint_from(p));
    }
    if (j.contains("params")) {
        const json& p = j.at("params");
        reject_unknown(p, {"c", "a", "b", "r_coef", "omega", "c_q"}, "params");
        take(p, "c", cfg.params.c);
        take(p, "a", cfg.params.a);
        take(p, "b", cfg.params.b);
        take(p, "r_coef", cfg.params.r_coef);
        take(p, "omega", cfg.params.omega);
        take(p, "c_q", cfg.params.c_q);
    }
    take_opt(j, "R", cfg.R);
    take_opt(j, "r", cfg.r);
    take_opt(j, "ell", cfg.ell);
    take(j, "pairs", cfg.pairs);
    take(j, "eigenvalues_only", cfg.eigenvalues_only);
    take(j, "practical_constant", cfg.practical_constant);
    take(j, "thresholds", cfg.thresholds);
    return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : to_json(cfg).dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"rigidity",        "extremal",           "delocalization", "local_law",
                                                "self_consistent", "improved_local_law", "km_fit",         "omega"};
    return names;
}

// ---- tables ----

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const Cell& c) {
    if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace

std::string Table::csv() const {
    std::string out;
    for (std::size_t k = 0; k < header.size(); ++k) out += (k ? "," : "") + header[k];
    out += '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size()) fail_internal("table " + name + ": row width does not match header");
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out += ',';
            out += csv_field(row[k]);
        }
        out += '\n';
    }
    return out;
}

std::vector<std::filesystem::path> write_result(const ExperimentResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> out;
    for (const auto& t : result.tables) {
        out.push_back(dir / (t.name + ".csv"));
        write_file_atomic(out.back(), t.csv());
    }
    out.push_back(dir / (result.experiment + "_summary.json"));
    write_file_atomic(out.back(), result.summary.dump(2) + "\n");
    return out;
}

// ---- small statistics ----

double delocalization_statistic(const Eigen::VectorXd& v) {
    const double norm = v.norm();
    if (norm == 0) fail_input("delocalization statistic of the zero vector");
    return std::sqrt(static_cast<double>(v.size())) * v.cwiseAbs().maxCoeff() / norm;
}

double ks_distance(std::vector<double> values, int d) {
    if (values.empty()) fail_input("KS distance of an empty sample");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double ks = 0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double f = std::clamp(1.0 - km_mass_above(values[k], d), 0.0, 1.0);
        ks = std::max({ks, std::abs((k + 1) / n - f), std::abs(f - k / n)});
    }
    return ks;
}

namespace {

double quantile(std::vector<double> v, double p) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const double pos = p * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

double median(const std::vector<double>& v) { return quantile(v, 0.5); }

double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? std::nan("") : s / v.size();
}

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 2) return std::nan("");
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < x.size(); ++k) {
        lx.push_back(std::log(x[k]));
        ly.push_back(std::log(y[k]));
    }
    const double mx = mean(lx), my = mean(ly);
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxy += (lx[k] - mx) * (ly[k] - my);
        sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    return sxx > 0 ? sxy / sxx : std::nan("");
}

json complex_stats(const std::vector<Complex>& xs) {
    const double n = static_cast<double>(xs.size());
    Complex m = 0;
    double mean_abs = 0;
    for (Complex x : xs) {
        m += x;
        mean_abs += std::abs(x);
    }
    m /= n;
    mean_abs /= n;
    double var = 0;
    for (Complex x : xs) var += std::norm(x - m);
    const double sd = xs.size() > 1 ? std::sqrt(var / (n - 1)) : std::nan("");
    const double se = sd / std::sqrt(n);
    return json{{"mean_re", m.real()}, {"mean_im", m.imag()}, {"abs_mean", std::abs(m)}, {"std", sd},
                {"stderr", se},        {"abs_mean_over_stderr", std::abs(m) / se},       {"mean_abs", mean_abs}};
}

// Runs fn(0..count-1) on up to `jobs` threads; results land by index.
template <class T>
std::vector<T> parallel_map(std::size_t count, int jobs, const std::function<T(std::size_t)>& fn) {
    std::vector<T> out(count);
    std::size_t next = 0;
    std::exception_ptr error;
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            std::size_t k;
            {
                std::lock_guard lock(mu);
                if (error || next == count) return;
                k = next++;
            }
            try {
                out[k] = fn(k);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
            }
        }
    };
    const int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), count));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return out;
}

struct Task {
    int n = 0;
    int sample = 0;
};

struct SampleOutput {
    std::vector<std::vector<std::vector<Cell>>> rows;  // per table
    json stats;
};

struct Context {
    const ExperimentConfig& cfg;
    std::string hash;
    Task task;
    ParameterSet params;
    RegularGraph graph;
    SpectralData spectrum;
    TreeLikeReport tree;

    int R() const { return std::max(1, cfg.R.value_or(params.R())); }
    int r() const { return cfg.r.value_or(std::max(params.r(), 2)); }
    int ell() const { return cfg.ell.value_or(params.ell()); }
    double n() const { return task.n; }

    std::vector<Cell> prefix() const {
        return {std::to_string(cfg.seed), hash, std::int64_t{task.n}, std::int64_t{task.sample},
                std::int64_t{tree.tree_like}, std::int64_t{tree.tree_like_relaxed}};
    }
    Rng pair_rng() const {
        return make_rng(cfg.seed, (1ull << 63) | (static_cast<std::uint64_t>(task.n) << 32) |
                                      static_cast<std::uint64_t>(task.sample));
    }
};

const std::vector<std::string> kPrefix{"seed", "config_hash", "n", "sample", "tree_like", "tree_like_relaxed"};

std::vector<std::string> with_prefix(std::initializer_list<const char*> cols) {
    std::vector<std::string> h = kPrefix;
    h.insert(h.end(), cols.begin(), cols.end());
    return h;
}

void append(std::vector<Cell>& row, std::initializer_list<Cell> cells) { row.insert(row.end(), cells); }

std::vector<SpectralParam> grid_and_points(const ExperimentConfig& cfg, double n) {
    std::vector<SpectralParam> zs = cfg.grid.points(n);
    for (const auto& p : cfg.z_points) zs.push_back(p.at(n));
    return zs;
}

std::vector<SpectralParam> points_or_default(const ExperimentConfig& cfg, double n) {
    std::vector<SpectralParam> zs;
    if (cfg.z_points.empty()) {
        ZPoint p;
        p.eta_power = -0.5;
        zs.push_back(p.at(n));
    }
    for (const auto& p : cfg.z_points) zs.push_back(p.at(n));
    return zs;
}

// Sampled (i, j): the first half with j in B_{r+1}(i), the rest with j uniform.
std::vector<std::pair<Vertex, Vertex>> sample_pairs(const RegularGraph& g, int count, int r, Rng& rng) {
    std::vector<std::pair<Vertex, Vertex>> out;
    const std::uint64_t n = static_cast<std::uint64_t>(g.n());
    for (int k = 0; k < count; ++k) {
        const Vertex i = static_cast<Vertex>(uniform_index(rng, n));
        Vertex j;
        if (k < (count + 1) / 2) {
            const std::vector<Vertex> near = ball_vertices(g.graph(), i, r + 1);
            j = near[uniform_index(rng, near.size())];
        } else {
            j = static_cast<Vertex>(uniform_index(rng, n));
        }
        out.emplace_back(i, j);
    }
    return out;
}

Vertex local_of(const Neighborhood& nb, Vertex v) {
    const auto it = std::find(nb.parent_id.begin(), nb.parent_id.end(), v);
    if (it == nb.parent_id.end()) fail_internal("vertex missing from its own ball");
    return static_cast<Vertex>(it - nb.parent_id.begin());
}

// G_ij of Ext(B_r(i, j), delta).
Complex ext_entry(const RegularGraph& g, Vertex i, Vertex j, int r, Complex delta, const SpectralParam& z) {
    const std::vector<Vertex> centers = i == j ? std::vector<Vertex>{i} : std::vector<Vertex>{i, j};
    const Neighborhood nb = ball(g, centers, r);
    const GreenMatrix ext = green_ext({nb.subgraph, delta, z});
    return ext(local_of(nb, i), local_of(nb, j));
}

// ---- experiments ----

struct Experiment {
    bool vectors;
    std::vector<Table> tables;
    std::function<SampleOutput(Context&)> sample;
    std::function<json(const ExperimentConfig&, const std::vector<Task>&, const std::vector<SampleOutput>&)> summarize;
};

// Indices into the task list grouped by N, in n_list order.
std::map<int, std::vector<std::size_t>> by_n(const std::vector<Task>& tasks) {
    std::map<int, std::vector<std::size_t>> out;
    for (std::size_t k = 0; k < tasks.size(); ++k) out[tasks[k].n].push_back(k);
    return out;
}

std::vector<double> stat_list(const std::vector<SampleOutput>& outs, const std::vector<std::size_t>& idx, const char* key) {
    std::vector<double> v;
    for (std::size_t k : idx) v.push_back(outs[k].stats.at(key).get<double>());
    return v;
}

Experiment rigidity() {
    Experiment e;
    e.vectors = false;
    e.tables = {{"rigidity_index", with_prefix({"i", "lambda", "gamma", "deviation", "bulk"}), {}},
                {"rigidity_samples",
                 with_prefix({"bulk_max", "edge_max", "trace_sum", "lambda_min", "lambda_min_in_range"}),
                 {}}};
    e.sample = [](Context& c) {
        SampleOutput out;
        out.rows.resize(2);
        const int n = c.task.n;
        const std::vector<double> gamma = classical_locations(n, c.cfg.d);
        double bulk = 0, edge = 0, trace = 0;
        for (int k = 0; k < n; ++k) trace += c.spectrum.eigenvalues(k);
        for (int i = 2; i <= n; ++i) {
            const double lam = c.spectrum.eigenvalues(i - 1);
            const double gam = gamma[static_cast<std::size_t>(i - 2)];
            const double dev = std::abs(lam - gam);
            const bool in_bulk = i >= 0.05 * n && i <= 0.95 * n;
            (in_bulk ? bulk : edge) = std::max(in_bulk ? bulk : edge, dev);
            auto row = c.prefix();
            append(row, {std::int64_t{i}, lam, gam, dev, std::int64_t{in_bulk}});
            out.rows[0].push_back(std::move(row));
        }
        const double lmin = c.spectrum.eigenvalues(n - 1);
        const bool ok = lmin >= -c.cfg.d / std::sqrt(c.cfg.d - 1.0);
        auto row = c.prefix();
        append(row, {bulk, edge, trace, lmin, std::int64_t{ok}});
        out.rows[1].push_back(std::move(row));
        out.stats = {{"bulk_max", bulk}, {"edge_max", edge}, {"trace_sum", trace}, {"lambda_min_ok", ok}};
        return out;
    };
    e.summarize = [](const ExperimentConfig&, const std::vector<Task>& tasks, const std::vector<SampleOutput>& outs) {
        json per = json::array();
        std::vector<double> ns, means;
        for (const auto& [n, idx] : by_n(tasks)) {
            const auto bulk = stat_list(outs, idx, "bulk_max");
            const auto edge = stat_list(outs, idx, "edge_max");
            double trace = 0;
            bool range = true;
            for (std::size_t k : idx) {
                trace = std::max(trace, std::abs(outs[k].stats.at("trace_sum").get<double>()));
                range = range && outs[k].stats.at("lambda_min_ok").get<bool>();
            }
            per.push_back({{"n", n},
                           {"bulk_max_mean", mean(bulk)},
                           {"bulk_max_median", median(bulk)},
                           {"bulk_max_max", *std::max_element(bulk.begin(), bulk.end())},
                           {"edge_max_mean", mean(edge)},
                           {"max_abs_trace_sum", trace},
                           {"lambda_min_in_range_all", range}});
            ns.push_back(n);
            means.push_back(mean(bulk));
        }
        return json{{"per_n", per}, {"bulk_loglog_slope", loglog_slope(ns, means)}};
    };
    return e;
}

Experiment extremal() {
    Experiment e;
    e.vectors = false;
    e.tables = {{"extremal_samples", with_prefix({"lambda1", "lambda2", "lambda_min", "abs_lambda_min", "gap_positive"}), {}},
                {"extremal_exceedance", {"seed", "config_hash", "n", "t", "samples", "lambda2_above", "abs_lambda_min_above"}, {}}};
    e.sample = [](Context& c) {
        SampleOutput out;
        out.rows.resize(2);
        const auto& ev = c.spectrum.eigenvalues;
        const double l1 = ev(0), l2 = ev(1), ln = ev(c.task.n - 1);
        auto row = c.prefix();
        append(row, {l1, l2, ln, std::abs(ln), std::int64_t{l2 < l1}});
        out.rows[0].push_back(std::move(row));
        out.stats = {{"lambda2", l2}, {"abs_lambda_min", std::abs(ln)}, {"gap_positive", l2 < l1}};
        return out;
    };
    e.summarize = [](const ExperimentConfig& cfg, const std::vector<Task>& tasks, const std::vector<SampleOutput>& outs) {
        json per = json::array();
        for (const auto& [n, idx] : by_n(tasks)) {
            const auto l2 = stat_list(outs, idx, "lambda2");
            const auto ln = stat_list(outs, idx, "abs_lambda_min");
            json exceed = json::array();
            for (double t : cfg.thresholds) {
                const auto a = std::count_if(l2.begin(), l2.end(), [&](double x) { return x > 2 + t; });
                const auto b = std::count_if(ln.begin(), ln.end(), [&](double x) { return x > 2 + t; });
                exceed.push_back({{"t", t}, {"lambda2_above", a}, {"abs_lambda_min_above", b}});
            }
            std::vector<double> l2m, lnm;
            for (double x : l2) l2m.push_back(x - 2);
            for (double x : ln) lnm.push_back(x - 2);
            per.push_back({{"n", n},
                           {"samples", idx.size()},
                           {"lambda2_max", *std::max_element(l2.begin(), l2.end())},
                           {"abs_lambda_min_max", *std::max_element(ln.begin(), ln.end())},
                           {"lambda2_minus_2_median", median(l2m)},
                           {"abs_lambda_min_minus_2_median", median(lnm)},
                           {"exceedance", exceed}});
        }
        return json{{"per_n", per}};
    };
    return e;
}

Experiment delocalization() {
    Experiment e;
    e.vectors = true;
    e.tables = {{"delocalization_samples",
                 with_prefix({"s_trivial", "s_max", "s_q50", "s_q90", "s_q99", "s_max_bulk", "s_max_edge", "five_log_n"}),
                 {}}};
    e.sample = [](Context& c) {
        SampleOutput out;
        out.rows.resize(1);
        const auto& s = c.spectrum;
        std::vector<double> all;
        double bulk = 0, edge = 0;
        for (int k = 1; k < s.n(); ++k) {
            const double v = delocalization_statistic(s.eigenvectors.col(k));
            all.push_back(v);
            (std::abs(s.eigenvalues(k)) < 1.5 ? bulk : edge) = std::max(std::abs(s.eigenvalues(k)) < 1.5 ? bulk : edge, v);
        }
        const double trivial = delocalization_statistic(s.eigenvectors.col(0));
        const double smax = *std::max_element(all.begin(), all.end());
        const double bound = 5 * std::log(c.n());
        auto row = c.prefix();
        append(row, {trivial, smax, quantile(all, 0.5), quantile(all, 0.9), quantile(all, 0.99), bulk, edge, bound});
        out.rows[0].push_back(std::move(row));
        out.stats = {{"s_max", smax}, {"s_trivial", trivial}, {"bound", bound}};
        return out;
    };
    e.summarize = [](const ExperimentConfig&, const std::vector<Task>& tasks, const std::vector<SampleOutput>& outs) {
        json per = json::array();
        std::vector<double> ns, maxes;
        for (const auto& [n, idx] : by_n(tasks)) {
            const auto sm = stat_list(outs, idx, "s_max");
            const double mx = *std::max_element(sm.begin(), sm.end());
            const double bound = 5 * std::log(static_cast<double>(n));
            per.push_back({{"n", n}, {"s_max", mx}, {"s_max_median", median(sm)}, {"five_log_n", bound},
                           {"within_bound", mx <= bound}});
            ns.push_back(n);
            maxes.push_back(mx);
        }
        json j{{"per_n", per}};
        j["growth_exponent"] = ns.size() >= 2 ? std::log(maxes.back() / maxes.front()) / std::log(ns.back() / ns.front())
                                              : std::nan("");
        return j;
    };
    return e;
}

Experiment local_law(const ExperimentConfig& cfg) {
    Experiment e;
    e.vectors = !cfg.eigenvalues_only;
    std::vector<std::string> h = with_prefix({"z_index", "E", "eta", "kappa", "mN_re", "mN_im", "md_re", "md_im", "abs_diff",
                                              "eps", "theorem_bound", "practical_bound", "within_practical", "far_bound",
                                              "within_far", "improved_re", "improved_im", "abs_improved"});
    if (!cfg.eigenvalues_only)
        for (const char* col : {"Q_re", "Q_im", "q_dev", "entry_max", "tree_diag_max", "tree_ext_gap"}) h.push_back(col);
    e.tables = {{"local_law", h, {}}};
    e.sample = [](Context& c) {
        SampleOutput out;
        out.rows.resize(1);
        const int d = c.cfg.d;
        const std::vector<SpectralParam> zs = grid_and_points(c.cfg, c.n());
        std::vector<std::pair<Vertex, Vertex>> pairs;
        std::vector<char> tree_ball;
        if (c.spectrum.has_vectors()) {
            Rng rng = c.pair_rng();
            pairs = sample_pairs(c.graph, c.cfg.pairs, c.r(), rng);
            for (const auto& [i, j] : pairs) {
                (void)j;
                const Neighborhood nb = ball(c.graph, std::vector<Vertex>{i}, c.r());
                tree_ball.push_back(excess(nb.subgraph.graph()) == 0);
            }
        }
        json rows_stats = json::array();
        for (std::size_t zi = 0; zi < zs.size(); ++zi) {
            const SpectralParam& z = zs[zi];
            const Complex mn = stieltjes(c.spectrum, z);
            const Complex md = m_d(z, d);
            const double diff = std::abs(mn - md);
            const ErrorParams ep = error_params(z, c.n(), d, c.params);
            const double practical = practical_bound(z, c.n(), c.cfg.practical_constant);
            const double far = 2.0 * d / (z.eta() * z.eta());
            const Complex improved = mn - md - trivial_eigenvalue_term(z, c.n(), d);
            auto row = c.prefix();
            append(row, {static_cast<std::int64_t>(zi), z.energy(), z.eta(), z.kappa(), mn.real(), mn.imag(), md.real(),
                         md.imag(), diff, ep.eps, local_law_bound(z, ep), practical, std::int64_t{diff <= practical}, far,
                         std::int64_t{diff <= far}, improved.real(), improved.imag(), std::abs(improved)});
            if (c.spectrum.has_vectors()) {
                const Complex q = Q_of_G(c.graph, c.spectrum, z);
                const Complex msc = m_sc(z);
                double entry = 0, tree_diag = 0, tree_gap = 0;
                for (std::size_t p = 0; p < pairs.size(); ++p) {
                    const auto [i, j] = pairs[p];
                    entry = std::max(entry, std::abs(green_entry(c.spectrum, z, i, j) - ext_entry(c.graph, i, j, c.r(), msc, z)));
                    if (!tree_ball[p]) continue;
                    tree_diag = std::max(tree_diag, std::abs(green_entry(c.spectrum, z, i, i) - md));
                    tree_gap = std::max(tree_gap, std::abs(ext_entry(c.graph, i, i, c.r(), msc, z) - md));
                }
                append(row, {q.real(), q.imag(), std::abs(q - msc), entry, tree_diag, tree_gap});
            }
            out.rows[0].push_back(std::move(row));
            rows_stats.push_back({diff, diff <= practical, z.eta() >= 5, diff <= far});
        }
        out.stats = {{"cells", rows_stats}};
        return out;
    };
    e.summarize = [](const ExperimentConfig& cfg, const std::vector<Task>& tasks, const std::vector<SampleOutput>& outs) {
        json per = json::array();
        long cells = 0, within = 0, far_cells = 0, far_ok = 0;
        for (const auto& [n, idx] : by_n(tasks)) {
            long nc = 0, nw = 0, fc = 0, fo = 0;
            std::vector<std::vector<double>> by_z;
            for (std::size_t k : idx) {
                const json& rows = outs[k].stats.at("cells");
                by_z.resize(rows.size());
                for (std::size_t zi = 0; zi < rows.size(); ++zi) {
                    const json& r = rows[zi];
                    by_z[zi].push_back(r[0].get<double>());
                    ++nc;
                    nw += r[1].get<bool>();
                    if (r[2].get<bool>()) {
                        ++fc;
                        fo += r[3].get<bool>();
                    }
                }
            }
            std::vector<double> med;
            for (const auto& v : by_z) med.push_back(median(v));
            per.push_back({{"n", n}, {"cells", nc}, {"within_practical", nw},
                           {"within_practical_fraction", nc ? double(nw) / nc : std::nan("")},
                           {"far_cells", fc}, {"far_within", fo}, {"median_abs_diff_by_z", med}});
            cells += nc;
            within += nw;
            far_cells += fc;
            far_ok += fo;
        }
        return json{{"per_n", per},
                    {"practical_constant", cfg.practical_constant},
                    {"cells", cells},
                    {"within_practical_fraction", cells ? double(within) / cells : std::nan("")},
                    {"far_cells", far_cells},
                    {"far_within", far_ok}};
    };
    return e;
}

Experiment self_consistent() {
    Experiment e;
    e.vectors = true;
    e.tables = {{"self_consistent",
                 with_prefix({"z_index", "E", "eta", "ell", "Q_re", "Q_im", "r1_re", "r1_im", "r2_re", "r2_im", "s1_re",
                              "s1_im", "s2_re", "s2_im", "plain_re", "plain_im", "improved_re", "improved_im"}),
                 {}}};
    e.sample = [](Context& c) {
        SampleOutput out;
        out.rows.resize(1);
        const int d = c.cfg.d, ell = c.ell();
        const auto zs = points_or_default(c.cfg, c.n());
        json cells = json::array();
        for (std::size_t zi = 0; zi < zs.size(); ++zi) {
            const SpectralParam& z = zs[zi];
            const Complex q = Q_of_G(c.graph, c.spectrum, z);
            const Complex mn = stieltjes(c.spectrum, z);
            const Complex r1 = q - Y_ell(q, z, ell, d);
            const Complex r2 = r1 - delta_Q(z, ell, c.n(), d);
            const Complex s1 = mn - X_ell(q, z, ell, d);
            const Complex s2 = s1 - delta_m(z, ell, c.n(), d);
            const Complex plain = mn - m_d(z, d);
            const Complex improved = plain - trivial_eigenvalue_term(z, c.n(), d);
            auto row = c.prefix();
            append(row, {static_cast<std::int64_t>(zi), z.energy(), z.eta(), std::int64_t{ell}, q.real(), q.imag(),
                         r1.real(), r1.imag(), r2.real(), r2.imag(), s1.real(), s1.imag(), s2.real(), s2.imag(),
                         plain.real(), plain.imag(), improved.real(), improved.imag()});
            out.rows[0].push_back(std::move(row));
            json cell;
            for (const auto& [k, v] : std::initializer_list<std::pair<const char*, Complex>>{
                     {"r1", r1}, {"r2", r2}, {"s1", s1}, {"s2", s2}, {"plain", plain}, {"improved", improved}})
                cell[k] = {v.real(), v.imag()};
            cell["E"] = z.energy();
            cell["eta"] = z.eta();
            cells.push_back(cell);
        }
        out.stats = {{"cells", cells}, {"ell", ell}};
        return out;
    };
    e.summarize = [](const ExperimentConfig&, const std::vector<Task>& tasks, const std::vector<SampleOutput>& outs) {
        json per = json::array();
        for (const auto& [n, idx] : by_n(tasks)) {
            const json& first = outs[idx.front()].stats;
            for (std::size_t zi = 0; zi < first.at("cells").size(); ++zi) {
                json entry{{"n", n}, {"z_index", zi}, {"E", first["cells"][zi]["E"]}, {"eta", first["cells"][zi]["eta"]},
                           {"ell", first["ell"]}, {"samples", idx.size()}};
                for (const char* key : {"r1", "r2", "s1", "s2", "plain", "improved"}) {
                    std::vector<Complex> xs;
                    for (std::size_t k : idx) {
                        const json& v = outs[k].stats["cells"][zi][key];
                        xs.emplace_back(v[0].get<double>(), v[1].get<double>());
                    }
                    entry[key] = complex_stats(xs);
                }
                per.push_back(entry);
            }
        }
        return json{{"per_n_z", per}};
    };
    return e;
}

Experiment improved_local_law() {
    Experiment e;
    e.vectors = false;
    e.tables = {{"improved_local_law",
                 with_prefix({"z_index", "E", "eta", "plain_re", "plain_im", "abs_plain", "correction_re", "correction_im",
                              "improved_re", "improved_im", "abs_improved", "lambda1_term_re", "lambda1_term_im"}),
                 {}}};
    e.sample = [](Context& c) {
        SampleOutput out;
        out.rows.resize(1);
        const int d = c.cfg.d;
        const auto zs = grid_and_points(c.cfg, c.n());
        json cells = json::array();
        for (std::size_t zi = 0; zi < zs.size(); ++zi) {
            const SpectralParam& z = zs[zi];
            const Complex plain = stieltjes(c.spectrum, z) - m_d(z, d);
            const Complex corr = trivial_eigenvalue_term(z, c.n(), d);
            const Complex improved = plain - corr;
            const Complex l1 = 1.0 / (c.n() * (c.spectrum.eigenvalues(0) - z.z()));
            auto row = c.prefix();
            append(row, {static_cast<std::int64_t>(zi), z.energy(), z.eta(), plain.real(), plain.imag(), std::abs(plain),
                         corr.real(), corr.imag(), improved.real(), improved.imag(), std::abs(improved), l1.real(),
                         l1.imag()});
            out.rows[0].push_back(std::move(row));
            cells.push_back({{"E", z.energy()}, {"eta", z.eta()}, {"plain", {plain.real(), plain.imag()}},
                             {"improved", {improved.real(), improved.imag()}}});
        }
        out.stats = {{"cells", cells}};
        return out;
    };
    e.summarize = [](const ExperimentConfig&, const std::vector<Task>& tasks, const std::vector<SampleOutput>& outs) {
        json per = json::array();
        for (const auto& [n, idx] : by_n(tasks)) {
            const json& first = outs[idx.front()].stats.at("cells");
            for (std::size_t zi = 0; zi < first.size(); ++zi) {
                json entry{{"n", n}, {"z_index", zi}, {"E", first[zi]["E"]}, {"eta", first[zi]["eta"]}, {"samples", idx.size()}};
                for (const char* key : {"plain", "improved"}) {
                    std::vector<Complex> xs;
                    for (std::size_t k : idx) {
                        const json& v = outs[k].stats["cells"][zi][key];
                        xs.emplace_back(v[0].get<double>(), v[1].get<double>());
                    }
                    entry[key] = complex_stats(xs);
                }
                entry["improved_smaller"] = entry["improved"]["mean_abs"].get<double>() < entry["plain"]["mean_abs"].get<double>();
                per.push_back(entry);
            }
        }
        return json{{"per_n_z", per}};
    };
    return e;
}

Experiment km_fit() {
    Experiment e;
    e.vectors = false;
    e.tables = {{"km_fit_samples", with_prefix({"ks"}), {}}};
    e.sample = [](Context& c) {
        SampleOutput out;
        out.rows.resize(1);
        const auto& ev = c.spectrum.eigenvalues;
        const double ks = ks_distance(std::vector<double>(ev.data() + 1, ev.data() + ev.size()), c.cfg.d);
        auto row = c.prefix();
        append(row, {ks});
        out.rows[0].push_back(std::move(row));
        out.stats = {{"ks", ks}};
        return out;
    };
    e.summarize = [](const ExperimentConfig&, const std::vector<Task>& tasks, const std::vector<SampleOutput>& outs) {
        json per = json::array();
        for (const auto& [n, idx] : by_n(tasks)) {
            const auto ks = stat_list(outs, idx, "ks");
            per.push_back({{"n", n}, {"ks_mean", mean(ks)}, {"ks_max", *std::max_element(ks.begin(), ks.end())}});
        }
        return json{{"per_n", per}};
    };
    return e;
}

Experiment omega() {
    Experiment e;
    e.vectors = true;
    e.tables = {{"omega",
                 with_prefix({"z_index", "E", "eta", "Q_re", "Q_im", "q_dev", "entry_max", "eps_theorem", "eps_practical",
                              "q_bound_theorem", "q_bound_practical", "theorem", "theorem_half", "practical"}),
                 {}}};
    e.sample = [](Context& c) {
        SampleOutput out;
        out.rows.resize(1);
        const auto zs = points_or_default(c.cfg, c.n());
        json cells = json::array();
        for (std::size_t zi = 0; zi < zs.size(); ++zi) {
            OmegaOptions opt;
            opt.r = c.r();
            opt.pairs = c.cfg.pairs;
            opt.practical_constant = c.cfg.practical_constant;
            opt.pair_seed = c.cfg.seed ^ (static_cast<std::uint64_t>(c.task.n) << 32 | static_cast<std::uint64_t>(c.task.sample));
            const OmegaReport rep = omega_z_membership(c.graph, c.spectrum, zs[zi], c.params, opt);
            auto row = c.prefix();
            append(row, {static_cast<std::int64_t>(zi), zs[zi].energy(), zs[zi].eta(), rep.q.real(), rep.q.imag(),
                         rep.q_deviation, rep.entry_max, rep.eps_theorem, rep.eps_practical, rep.q_bound_theorem,
                         rep.q_bound_practical, std::int64_t{rep.theorem}, std::int64_t{rep.theorem_half},
                         std::int64_t{rep.practical}});
            out.rows[0].push_back(std::move(row));
            cells.push_back({rep.practical, rep.theorem});
        }
        out.stats = {{"cells", cells}};
        return out;
    };
    e.summarize = [](const ExperimentConfig&, const std::vector<Task>& tasks, const std::vector<SampleOutput>& outs) {
        json per = json::array();
        for (const auto& [n, idx] : by_n(tasks)) {
            const std::size_t nz = outs[idx.front()].stats.at("cells").size();
            for (std::size_t zi = 0; zi < nz; ++zi) {
                long practical = 0, theorem = 0;
                for (std::size_t k : idx) {
                    practical += outs[k].stats["cells"][zi][0].get<bool>();
                    theorem += outs[k].stats["cells"][zi][1].get<bool>();
                }
                per.push_back({{"n", n}, {"z_index", zi}, {"samples", idx.size()},
                               {"practical_fraction", double(practical) / idx.size()},
                               {"theorem_fraction", double(theorem) / idx.size()}});
            }
        }
        return json{{"per_n_z", per}};
    };
    return e;
}

Experiment make_experiment(const ExperimentConfig& cfg) {
    const std::string& name = cfg.experiment;
    if (name == "rigidity") return rigidity();
    if (name == "extremal") return extremal();
    if (name == "delocalization") return delocalization();
    if (name == "local_law") return local_law(cfg);
    if (name == "self_consistent") return self_consistent();
    if (name == "improved_local_law") return improved_local_law();
    if (name == "km_fit") return km_fit();
    if (name == "omega") return omega();
    fail_input("unknown experiment '" + name + "'");
}

void validate(const ExperimentConfig& cfg, int jobs) {
    if (cfg.d < 3) fail_input("experiment config: d must be at least 3");
    if (cfg.n_list.empty()) fail_input("experiment config: n_list is empty");
    for (int n : cfg.n_list) {
        if (n <= cfg.d) fail_input("experiment config: every N must exceed d");
        if ((static_cast<long>(n) * cfg.d) % 2) fail_input("experiment config: N d must be even");
        if (n > kSpectralCap) fail_input("experiment config: N above the dense eigensolver cap");
    }
    if (std::set<int>(cfg.n_list.begin(), cfg.n_list.end()).size() != cfg.n_list.size())
        fail_input("experiment config: repeated N");
    if (cfg.samples < 1) fail_input("experiment config: samples must be positive");
    if (cfg.pairs < 0) fail_input("experiment config: pairs must be non-negative");
    if (cfg.R && *cfg.R < 1) fail_input("experiment config: R must be positive");
    if (cfg.r && *cfg.r < 0) fail_input("experiment config: r must be non-negative");
    if (cfg.ell && *cfg.ell < 0) fail_input("experiment config: ell must be non-negative");
    if (!(cfg.practical_constant > 0)) fail_input("experiment config: practical_constant must be positive");
    if (jobs < 1) fail_input("jobs must be positive");
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs) {
    validate(cfg, jobs);
    Experiment exp = make_experiment(cfg);
    const std::string hash = config_hash(cfg);

    std::vector<Task> tasks;
    for (int n : cfg.n_list)
        for (int k = 0; k < cfg.samples; ++k) tasks.push_back({n, k});

    const std::vector<SampleOutput> outs = parallel_map<SampleOutput>(tasks.size(), jobs, [&](std::size_t t) {
        const Task task = tasks[t];
        Rng rng = make_rng(cfg.seed, (static_cast<std::uint64_t>(task.n) << 32) | static_cast<std::uint64_t>(task.sample));
        RegularGraph g = generate_regular(task.n, cfg.d, rng);
        const ParameterSet params = make_parameters(task.n, cfg.d, cfg.params);
        Context c{cfg, hash, task, params, g, {}, {}};
        c.spectrum = spectral_decompose(c.graph, exp.vectors);
        c.tree = classify_tree_like(c.graph, {c.R(), cfg.params.omega, cfg.params.c, cfg.params.c_q});
        SampleOutput out = exp.sample(c);
        out.stats["tree_like"] = c.tree.tree_like;
        return out;
    });

    ExperimentResult result;
    result.experiment = cfg.experiment;
    result.tables = exp.tables;
    for (const auto& out : outs)
        for (std::size_t t = 0; t < out.rows.size(); ++t)
            for (const auto& row : out.rows[t]) result.tables[t].rows.push_back(row);

    // Exceedance rows for extremal are derived from the summary.
    json summary = exp.summarize(cfg, tasks, outs);
    if (cfg.experiment == "extremal")
        for (const auto& entry : summary["per_n"])
            for (const auto& ex : entry["exceedance"])
                result.tables[1].rows.push_back({std::to_string(cfg.seed), hash, std::int64_t{entry["n"].get<int>()},
                                                 ex["t"].get<double>(), std::int64_t{entry["samples"].get<long>()},
                                                 std::int64_t{ex["lambda2_above"].get<long>()},
                                                 std::int64_t{ex["abs_lambda_min_above"].get<long>()}});

    long tree_like = 0;
    for (const auto& out : outs) tree_like += out.stats.at("tree_like").get<bool>();
    result.summary = json{{"experiment", cfg.experiment},
                          {"config", to_json(cfg)},
                          {"config_hash", hash},
                          {"samples_total", tasks.size()},
                          {"tree_like_fraction", double(tree_like) / tasks.size()},
                          {"results", summary}};
    return result;
}

OmegaReport omega_z_membership(const RegularGraph& g, const SpectralData& s, const SpectralParam& z,
                               const ParameterSet& params, const OmegaOptions& opt) {
    if (!s.has_vectors()) fail_input("Omega membership needs eigenvectors");
    if (s.n() != g.n()) fail_input("spectral data does not match the graph");
    if (opt.r < 0 || opt.pairs < 0) fail_input("Omega membership: negative radius or pair count");
    const double n = g.n();
    OmegaReport rep;
    rep.q = Q_of_G(g, s, z);
    rep.q_deviation = std::abs(rep.q - m_sc(z));
    Rng rng = make_rng(opt.pair_seed, 0x4f4d);
    rep.sampled = sample_pairs(g, opt.pairs, opt.r, rng);
    for (const auto& [i, j] : rep.sampled)
        rep.entry_max = std::max(rep.entry_max, std::abs(green_entry(s, z, i, j) - ext_entry(g, i, j, opt.r, rep.q, z)));
    const ErrorParams ep = error_params(z, n, g.d(), params);
    rep.eps_theorem = ep.eps;
    rep.eps_practical = practical_bound(z, n, opt.practical_constant);
    const double base = z.kappa() + z.eta();
    rep.q_bound_theorem = ep.eps / std::sqrt(base + ep.eps);
    rep.q_bound_practical = rep.eps_practical / std::sqrt(base + rep.eps_practical);
    rep.theorem = rep.q_deviation <= rep.q_bound_theorem && rep.entry_max <= rep.eps_theorem;
    rep.theorem_half = rep.q_deviation <= rep.q_bound_theorem / 2 && rep.entry_max <= rep.eps_theorem / 2;
    rep.practical = rep.q_deviation <= rep.q_bound_practical && rep.entry_max <= rep.eps_practical;
    return rep;
}

}  // namespace rrg
