#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "rrg/graph.hpp"
#include "rrg/green.hpp"
#include "rrg/scalar.hpp"

namespace rrg {

// Energy plus either a fixed eta or eta = N^eta_power.
struct ZPoint {
    double energy = 0.5;
    double eta = 0.1;
    std::optional<double> eta_power;

    SpectralParam at(double n) const;
};

// e_points energies evenly spaced on [e_min, e_max] times eta_points etas
// between eta_floor / N and eta_max (log-spaced unless log_spacing is off),
// followed by the same energies at each far-field eta.
struct ZGridSpec {
    double e_min = -2.5;
    double e_max = 2.5;
    int e_points = 11;
    double eta_floor = 10;
    double eta_max = 1;
    int eta_points = 6;
    bool log_spacing = true;
    std::vector<double> far_etas;

    std::vector<SpectralParam> points(double n) const;
};

struct ExperimentConfig {
    std::string experiment = "local_law";
    int d = 3;
    std::vector<int> n_list{500};
    int samples = 10;
    std::uint64_t seed = 1;
    ZGridSpec grid;
    std::vector<ZPoint> z_points;      // default {E = 0.5, eta = N^-1/2}
    ParameterChoice params;
    std::optional<int> R;              // overrides of the schedule
    std::optional<int> r;              // local radius; default max(schedule r, 2)
    std::optional<int> ell;
    int pairs = 50;                    // sampled (i, j) per sample for entrywise checks
    bool eigenvalues_only = false;     // local_law: skip Q and entrywise columns
    double practical_constant = 20;
    std::vector<double> thresholds{0, 0.01, 0.02, 0.05, 0.1};
};

nlohmann::json to_json(const ExperimentConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
// FNV-1a 64 of the compact JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

const std::vector<std::string>& experiment_names();

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;

    std::string csv() const;
};

// Shortest round-trip form is not used: always 17 significant digits.
std::string format_double(double x);

struct ExperimentResult {
    std::string experiment;
    std::vector<Table> tables;
    nlohmann::json summary;
};

// Work is split into one task per (N, sample); results are merged in that
// order, so the output does not depend on `jobs`.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs = 1);

// Writes <table>.csv per table and <experiment>_summary.json; returns the paths.
std::vector<std::filesystem::path> write_result(const ExperimentResult& result, const std::filesystem::path& dir);

// Both defining inequalities of Omega(z), with the schedule's eps and with
// the practical eps = C / sqrt(N eta).
struct OmegaOptions {
    int r = 2;
    int pairs = 50;
    double practical_constant = 20;
    std::uint64_t pair_seed = 1;
};

struct OmegaReport {
    Complex q = 0;
    double q_deviation = 0;        // |Q - m_sc|
    double entry_max = 0;          // max over sampled pairs of |G_ij - G_ij(Ext(B_r(i, j), Q))|
    double eps_theorem = 0;
    double eps_practical = 0;
    double q_bound_theorem = 0;    // eps / sqrt(kappa + eta + eps)
    double q_bound_practical = 0;
    bool theorem = false;
    bool theorem_half = false;     // the same bounds with eps / 2
    bool practical = false;
    std::vector<std::pair<Vertex, Vertex>> sampled;
};

OmegaReport omega_z_membership(const RegularGraph& g, const SpectralData& s, const SpectralParam& z,
                               const ParameterSet& params, const OmegaOptions& opt);

// Sup-norm statistic sqrt(N) |v|_inf / |v|_2.
double delocalization_statistic(const Eigen::VectorXd& v);

// Kolmogorov-Smirnov distance between the empirical law of `values` and Kesten-McKay.
double ks_distance(std::vector<double> values, int d);

}  // namespace rrg
