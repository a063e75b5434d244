#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "rrg/graph_io.hpp"
#include "rrg/green.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rrg;

namespace {

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("rrg_cli_test_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

int cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " '" RRG_CLI_PATH "' " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const std::string& path, const std::string& s) { std::ofstream(path) << s; }

const char* kK4 = R"({"n":4,"d":3,"edges":[[0,1],[0,2],[0,3],[1,2],[1,3],[2,3]]})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("generate: round trip, determinism, parity error") {
    Scratch s("generate");
    REQUIRE(cli("generate --n 8 --d 3 --seed 1 --out " + (s / "a.json")) == 0);
    REQUIRE(cli("generate --n 8 --d 3 --seed 1 --out " + (s / "b.json")) == 0);
    CHECK(slurp(s / "a.json") == slurp(s / "b.json"));
    const RegularGraph g = load_graph(s / "a.json");
    CHECK(g.n() == 8);
    CHECK(g.d() == 3);
    CHECK(g == generate_regular(8, 3, std::uint64_t{1}));
    const json m = json::parse(slurp(s / "a.json.manifest.json"));
    CHECK(m["subcommand"] == "generate");
    CHECK(m["seed"] == 1);
    CHECK(m["outputs"][0] == s / "a.json");
    CHECK(m.contains("timestamp"));
    CHECK(m.contains("version"));
    CHECK(cli("generate --n 7 --d 3 --out " + (s / "c.json")) == 2);
    CHECK(!fs::exists(s / "c.json"));
}

TEST_CASE("spectrum of K4") {
    Scratch s("spectrum");
    write(s / "k4.json", kK4);
    REQUIRE(cli("spectrum --in " + (s / "k4.json") + " --out " + (s / "k4.csv")) == 0);
    std::istringstream in(slurp(s / "k4.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "index,eigenvalue");
    std::vector<double> ev;
    while (std::getline(in, line)) ev.push_back(std::stod(line.substr(line.find(',') + 1)));
    REQUIRE(ev.size() == 4);
    CHECK(ev[0] == doctest::Approx(3 / std::sqrt(2.0)).epsilon(1e-15));
    for (int k = 1; k < 4; ++k) CHECK(ev[static_cast<std::size_t>(k)] == doctest::Approx(-1 / std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("green on K4 matches the library") {
    Scratch s("green");
    write(s / "k4.json", kK4);
    REQUIRE(cli("green --in " + (s / "k4.json") + " --z 0+1i --ops mN,Q,md,msc --entries 0:1,2:2 --out " + (s / "g.json")) == 0);
    const json j = json::parse(slurp(s / "g.json"));
    const RegularGraph g = load_graph(s / "k4.json");
    const SpectralData sd = spectral_decompose(g);
    const SpectralParam z(0, 1);
    auto c = [](const json& v) { return Complex(v[0].get<double>(), v[1].get<double>()); };
    CHECK(c(j["mN"]) == stieltjes(sd, z));
    CHECK(c(j["Q"]) == Q_of_G(g, sd, z));
    CHECK(c(j["md"]) == m_d(z, 3));
    CHECK(c(j["msc"]) == m_sc(z));
    CHECK(c(j["entries"][0]["value"]) == green_entry(sd, z, 0, 1));
    CHECK(c(j["entries"][1]["value"]) == green_entry(sd, z, 2, 2));
    CHECK(c(j["z"]) == Complex(0, 1));
}

TEST_CASE("complex flag parsing and exit codes") {
    Scratch s("codes");
    write(s / "k4.json", kK4);
    const std::string in = " --in " + (s / "k4.json") + " --out " + (s / "g.json");
    CHECK(cli("green" + in + " --z 0.5+0.25i") == 0);
    CHECK(cli("green" + in + " --z -1.5+2e-3i") == 0);
    CHECK(cli("green" + in + " --z 1+i") == 0);
    CHECK(cli("green" + in + " --z 0-1i") == 1);
    CHECK(cli("green" + in + " --z 0+0i") == 1);
    CHECK(cli("green" + in + " --z 0.5") == 1);
    CHECK(cli("green" + in + " --z 0+1i --ops mN,bogus") == 2);
    CHECK(cli("green --in " + (s / "missing.json") + " --z 0+1i") == 2);
    CHECK(cli("frobnicate") == 1);
    CHECK(cli("") == 1);
    CHECK(cli("--help") == 0);
    write(s / "bad.json", "{\"n\":4,\"d\":3,\"edges\":[[0,1]]}");
    CHECK(cli("spectrum --in " + (s / "bad.json") + " --out " + (s / "x.csv")) == 2);
}

TEST_CASE("resample and replay give the same switched graph") {
    Scratch s("resample");
    REQUIRE(cli("generate --n 200 --seed 4 --out " + (s / "g.json")) == 0);
    REQUIRE(cli("resample --in " + (s / "g.json") + " --o 5 --ell 1 --R 4 --seed 9 --out " + (s / "r1.json") +
                " --data-out " + (s / "d1.json")) == 0);
    REQUIRE(cli("resample --in " + (s / "g.json") + " --replay " + (s / "d1.json") + " --R 4 --out " + (s / "r2.json") +
                " --data-out " + (s / "d2.json")) == 0);
    CHECK(slurp(s / "r1.json") == slurp(s / "r2.json"));
    CHECK(slurp(s / "d1.json") == slurp(s / "d2.json"));
    const json d = json::parse(slurp(s / "d1.json"));
    CHECK(d["sampled"]["o"] == 5);
    CHECK(d["sampled"]["ell"] == 1);
    CHECK(load_graph(s / "r1.json").n() == 200);
    CHECK(cli("resample --in " + (s / "g.json") + " --replay " + (s / "d1.json") + " --o 6 --out " + (s / "r3.json")) == 2);
    CHECK(cli("resample --in " + (s / "g.json") + " --ell 1") == 2);
}

TEST_CASE("experiment: job count, output directory variable and rerun") {
    Scratch s("experiment");
    write(s / "cfg.json", R"({"n_list":[60,100],"samples":3,"grid":{"e_points":3,"eta_points":2,"far_etas":[5]}})");
    REQUIRE(cli("experiment local_law --config " + (s / "cfg.json") + " --jobs 1 --out " + (s / "j1")) == 0);
    REQUIRE(cli("experiment local_law --config " + (s / "cfg.json") + " --jobs 3 --out " + (s / "j3")) == 0);
    for (const char* f : {"local_law.csv", "local_law_summary.json"}) CHECK(slurp(s / ("j1/" + std::string(f))) == slurp(s / ("j3/" + std::string(f))));

    REQUIRE(cli("experiment km_fit --config " + (s / "cfg.json"), "RRG_OUTPUT_DIR='" + (s / "env") + "'") == 0);
    CHECK(fs::exists(s / "env/km_fit/km_fit_samples.csv"));
    const std::string before = slurp(s / "env/km_fit/km_fit_samples.csv");
    fs::remove(s / "env/km_fit/km_fit_samples.csv");
    REQUIRE(cli("rerun " + (s / "env/km_fit/km_fit_manifest.json"), "RRG_OUTPUT_DIR='" + (s / "env") + "'") == 0);
    CHECK(slurp(s / "env/km_fit/km_fit_samples.csv") == before);

    write(s / "other.json", R"({"experiment":"rigidity"})");
    CHECK(cli("experiment km_fit --config " + (s / "other.json") + " --out " + (s / "o")) == 2);
    CHECK(cli("experiment km_fit --jobs 0 --out " + (s / "o")) == 1);
    CHECK(cli("experiment nonsense") == 1);
}

}  // TEST_SUITE
