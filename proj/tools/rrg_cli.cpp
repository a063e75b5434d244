#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rrg/error.hpp"
#include "rrg/experiments.hpp"
#include "rrg/graph_io.hpp"
#include "rrg/green.hpp"
#include "rrg/resample.hpp"

#ifndef RRG_VERSION
#define RRG_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rrg;

namespace {

enum Exit { ok = 0, usage = 1, input = 2, numeric = 3, internal = 4 };

const char* kExitCodes =
    "Exit codes: 0 success, 1 usage error, 2 invalid input (files, graphs, configs), "
    "3 numerical failure, 4 internal error.\n"
    "Outputs default to $RRG_OUTPUT_DIR (or the working directory) when --out is omitted.";

fs::path output_dir() {
    const char* env = std::getenv("RRG_OUTPUT_DIR");
    return env && *env ? fs::path(env) : fs::path(".");
}

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

// "a+bi" / "a-bi" with b > 0 required.
Complex parse_z(const std::string& s) {
    static const std::regex re(R"(^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([+-])\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*i\s*$)");
    std::smatch m;
    if (!std::regex_match(s, m, re)) throw std::invalid_argument("expected a+bi, got '" + s + "'");
    const double a = std::stod(m[1].str());
    double b = m[3].matched ? std::stod(m[3].str()) : 1.0;
    if (m[2].str() == "-") b = -b;
    if (!(b > 0)) throw std::invalid_argument("imaginary part must be positive");
    return {a, b};
}

struct Manifest {
    std::string subcommand;
    std::vector<std::string> argv;
    json config;
    std::uint64_t seed = 0;
    std::vector<fs::path> outputs;

    void write(const fs::path& path) const {
        json outs = json::array();
        for (const auto& p : outputs) outs.push_back(p.string());
        const json j{{"subcommand", subcommand}, {"argv", argv},         {"config", config},
                     {"seed", seed},             {"version", RRG_VERSION}, {"timestamp", utc_timestamp()},
                     {"outputs", outs}};
        write_file_atomic(path, j.dump(2) + "\n");
        std::cout << path.string() << "\n";
    }
};

fs::path manifest_for(const fs::path& output) {
    fs::path m = output;
    m += ".manifest.json";
    return m;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail_input("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail_input(path.string() + ": " + e.what());
    }
}

void announce(const std::vector<fs::path>& paths) {
    for (const auto& p : paths) std::cout << p.string() << "\n";
}

struct GenerateOpts {
    int n = 0, d = 3;
    std::uint64_t seed = 1;
    std::string out;
};

struct SpectrumOpts {
    std::string in, out;
};

struct GreenOpts {
    std::string in, z, ops = "mN,Q", entries, out;
};

struct ResampleOpts {
    std::string in, replay, out, data_out;
    std::optional<int> o, ell, R;
    std::uint64_t seed = 1;
};

struct ExperimentOpts {
    std::string name, config, out;
    int jobs = 1;
};

int cmd_generate(const GenerateOpts& o, const std::vector<std::string>& argv) {
    const fs::path out = o.out.empty() ? output_dir() / ("graph_n" + std::to_string(o.n) + "_d" + std::to_string(o.d) +
                                                          "_seed" + std::to_string(o.seed) + ".json")
                                       : fs::path(o.out);
    const RegularGraph g = generate_regular(o.n, o.d, o.seed);
    save_graph(out, g);
    announce({out});
    Manifest{"generate", argv, {{"n", o.n}, {"d", o.d}, {"seed", o.seed}, {"out", out.string()}}, o.seed, {out}}
        .write(manifest_for(out));
    return ok;
}

int cmd_spectrum(const SpectrumOpts& o, const std::vector<std::string>& argv) {
    const fs::path in(o.in);
    const fs::path out = o.out.empty() ? output_dir() / (in.stem().string() + "_spectrum.csv") : fs::path(o.out);
    const RegularGraph g = load_graph(in);
    const SpectralData s = spectral_decompose(g, false);
    std::string csv = "index,eigenvalue\n";
    for (int k = 0; k < s.n(); ++k) csv += std::to_string(k + 1) + "," + format_double(s.eigenvalues(k)) + "\n";
    write_file_atomic(out, csv);
    announce({out});
    Manifest{"spectrum", argv, {{"in", o.in}, {"out", out.string()}}, 0, {out}}.write(manifest_for(out));
    return ok;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

int cmd_green(const GreenOpts& o, const std::vector<std::string>& argv) {
    const fs::path in(o.in);
    const fs::path out = o.out.empty() ? output_dir() / (in.stem().string() + "_green.json") : fs::path(o.out);
    const SpectralParam z(parse_z(o.z));
    const std::vector<std::string> ops = split(o.ops, ',');
    std::vector<std::pair<int, int>> entries;
    for (const auto& e : split(o.entries, ',')) {
        const auto parts = split(e, ':');
        if (parts.size() != 2) fail_input("--entries expects i:j pairs, got '" + e + "'");
        entries.emplace_back(std::stoi(parts[0]), std::stoi(parts[1]));
    }
    bool vectors = !entries.empty();
    for (const auto& op : ops) {
        if (op != "mN" && op != "Q" && op != "md" && op != "msc" && op != "diag")
            fail_input("unknown op '" + op + "' (expected mN, Q, md, msc, diag)");
        vectors = vectors || op == "Q" || op == "diag";
    }
    const RegularGraph g = load_graph(in);
    for (const auto& [i, j] : entries)
        if (i < 0 || j < 0 || i >= g.n() || j >= g.n()) fail_input("entry index out of range");
    const SpectralData s = spectral_decompose(g, vectors);
    json j{{"n", g.n()}, {"d", g.d()}, {"z", complex_json(z.z())}};
    for (const auto& op : ops) {
        if (op == "mN") j["mN"] = complex_json(stieltjes(s, z));
        if (op == "Q") j["Q"] = complex_json(Q_of_G(g, s, z));
        if (op == "md") j["md"] = complex_json(m_d(z, g.d()));
        if (op == "msc") j["msc"] = complex_json(m_sc(z));
        if (op == "diag") {
            json d = json::array();
            const ComplexVector diag = green_diagonal(s, z);
            for (int k = 0; k < g.n(); ++k) d.push_back(complex_json(diag(k)));
            j["diag"] = d;
        }
    }
    if (!entries.empty()) {
        json e = json::array();
        for (const auto& [a, b] : entries) e.push_back({{"i", a}, {"j", b}, {"value", complex_json(green_entry(s, z, a, b))}});
        j["entries"] = e;
    }
    write_file_atomic(out, j.dump(2) + "\n");
    announce({out});
    Manifest{"green", argv, {{"in", o.in}, {"z", o.z}, {"ops", o.ops}, {"entries", o.entries}, {"out", out.string()}}, 0, {out}}
        .write(manifest_for(out));
    return ok;
}

int cmd_resample(const ResampleOpts& o, const std::vector<std::string>& argv) {
    const fs::path in(o.in);
    const fs::path out = o.out.empty() ? output_dir() / (in.stem().string() + "_resampled.json") : fs::path(o.out);
    const fs::path data_out =
        o.data_out.empty() ? output_dir() / (in.stem().string() + "_resample_data.json") : fs::path(o.data_out);
    const RegularGraph g = load_graph(in);
    ResamplingData data;
    if (!o.replay.empty()) {
        const json j = read_json(o.replay);
        data = resampling_data_from_json(j.contains("sampled") ? j.at("sampled") : j);
        if (o.o && *o.o != data.o) fail_input("--o disagrees with the replayed data");
        if (o.ell && *o.ell != data.ell) fail_input("--ell disagrees with the replayed data");
    } else {
        if (!o.o || !o.ell) fail_input("--o and --ell are required unless --replay is given");
        if (*o.o < 0 || *o.o >= g.n()) fail_input("--o out of range");
        if (*o.ell < 0) fail_input("--ell must be non-negative");
        Rng rng = make_rng(o.seed);
        data = sample_resampling_data(g, *o.o, *o.ell, rng);
    }
    const int R = o.R.value_or(make_parameters(g.n(), g.d()).R());
    if (R < 1) fail_input("--R must be positive");
    const SwitchResult res = apply_resampling(g, data, R);
    save_graph(out, res.graph);
    const json dj{{"sampled", to_json(data)}, {"R", R}, {"admissible", res.admissible}, {"switched", to_json(res.data)}};
    write_file_atomic(data_out, dj.dump(2) + "\n");
    announce({out, data_out});
    json cfg{{"in", o.in}, {"R", R}, {"seed", o.seed}, {"replay", o.replay}, {"out", out.string()}, {"data_out", data_out.string()},
             {"o", data.o}, {"ell", data.ell}};
    Manifest{"resample", argv, cfg, o.seed, {out, data_out}}.write(manifest_for(out));
    return ok;
}

int cmd_experiment(const ExperimentOpts& o, const std::vector<std::string>& argv) {
    json cj = o.config.empty() ? json::object() : read_json(o.config);
    if (!cj.is_object()) fail_input("experiment config must be a JSON object");
    if (cj.contains("experiment") && cj["experiment"] != o.name)
        fail_input("config names experiment '" + cj["experiment"].dump() + "', command line says '" + o.name + "'");
    cj["experiment"] = o.name;
    const ExperimentConfig cfg = experiment_config_from_json(cj);
    const fs::path dir = o.out.empty() ? output_dir() / o.name : fs::path(o.out);
    const ExperimentResult r = run_experiment(cfg, o.jobs);
    const auto paths = write_result(r, dir);
    announce(paths);
    json mc = to_json(cfg);
    mc["jobs"] = o.jobs;
    mc["out"] = dir.string();
    Manifest{"experiment", argv, mc, cfg.seed, paths}.write(dir / (o.name + "_manifest.json"));
    return ok;
}

int run(const std::vector<std::string>& args, int depth = 0);

int cmd_rerun(const std::string& manifest, int depth) {
    if (depth > 0) fail_input("a manifest cannot point at another rerun");
    const json j = read_json(manifest);
    if (!j.contains("argv") || !j["argv"].is_array()) fail_input("manifest has no argv");
    return run(j["argv"].get<std::vector<std::string>>(), depth + 1);
}

int run(const std::vector<std::string>& args, int depth) {
    CLI::App app{"Random regular graph spectra, Green's functions and local resampling", "rrg"};
    app.footer(kExitCodes);
    app.set_version_flag("--version", RRG_VERSION);
    app.require_subcommand(1);

    GenerateOpts gen;
    auto* g = app.add_subcommand("generate", "Sample a uniform simple d-regular graph (JSON or edge list)");
    g->add_option("--n", gen.n, "Number of vertices")->required();
    g->add_option("--d", gen.d, "Degree")->capture_default_str();
    g->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
    g->add_option("--out", gen.out, "Output graph file (.json or edge list)");

    SpectrumOpts spec;
    auto* s = app.add_subcommand("spectrum", "Eigenvalues of A/sqrt(d-1), descending, as CSV");
    s->add_option("--in", spec.in, "Graph file")->required();
    s->add_option("--out", spec.out, "Output CSV");

    GreenOpts green;
    auto* gr = app.add_subcommand("green", "Green's function quantities at one spectral parameter, as JSON");
    gr->add_option("--in", green.in, "Graph file")->required();
    gr->add_option("--z", green.z, "Spectral parameter a+bi with b > 0")->required()->check([](const std::string& v) {
        try {
            parse_z(v);
        } catch (const std::invalid_argument& e) {
            return std::string(e.what());
        }
        return std::string();
    });
    gr->add_option("--ops", green.ops, "Comma list of mN, Q, md, msc, diag")->capture_default_str();
    gr->add_option("--entries", green.entries, "Comma list of i:j entries of G");
    gr->add_option("--out", green.out, "Output JSON");

    ResampleOpts res;
    auto* rs = app.add_subcommand("resample", "One local resampling step around a vertex");
    rs->add_option("--in", res.in, "Graph file")->required();
    rs->add_option("--o", res.o, "Center vertex");
    rs->add_option("--ell", res.ell, "Ball radius");
    rs->add_option("--R", res.R, "Radius in the indicator conditions (default: schedule value for N)");
    rs->add_option("--seed", res.seed, "RNG seed for the switching data")->capture_default_str();
    rs->add_option("--replay", res.replay, "Reuse the switching data from an earlier run's data JSON");
    rs->add_option("--out", res.out, "Output graph file");
    rs->add_option("--data-out", res.data_out, "Output data JSON");

    ExperimentOpts ex;
    auto* e = app.add_subcommand("experiment", "Run a Monte Carlo experiment, writing CSV tables and a JSON summary");
    e->add_option("name", ex.name, "Experiment name")->required()->check(CLI::IsMember(experiment_names()));
    e->add_option("--config", ex.config, "Experiment config JSON");
    e->add_option("--jobs", ex.jobs, "Worker threads; output does not depend on it")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    e->add_option("--out", ex.out, "Output directory");

    std::string manifest;
    auto* rr = app.add_subcommand("rerun", "Repeat the run recorded in a manifest");
    rr->add_option("manifest", manifest, "Manifest JSON")->required();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? ok : usage;
    }

    if (*g) return cmd_generate(gen, args);
    if (*s) return cmd_spectrum(spec, args);
    if (*gr) return cmd_green(green, args);
    if (*rs) return cmd_resample(res, args);
    if (*e) return cmd_experiment(ex, args);
    if (*rr) return cmd_rerun(manifest, depth);
    return usage;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return run(args);
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        switch (err.kind()) {
            case ErrorKind::input: return input;
            case ErrorKind::numeric: return numeric;
            case ErrorKind::internal: return internal;
        }
    } catch (const json::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return input;
    } catch (const fs::filesystem_error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return input;
    } catch (const std::invalid_argument& err) {
        std::cerr << "error: " << err.what() << "\n";
        return input;
    } catch (const std::out_of_range& err) {
        std::cerr << "error: " << err.what() << "\n";
        return input;
    } catch (const std::exception& err) {
        std::cerr << "internal error: " << err.what() << "\n";
        return internal;
    }
    return internal;
}
