#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

namespace rrg {

using Complex = std::complex<double>;

// Spectral parameter z = E + i*eta in the upper half-plane.
class SpectralParam {
public:
    explicit SpectralParam(Complex z);
    SpectralParam(double energy, double eta) : SpectralParam(Complex(energy, eta)) {}

    Complex z() const noexcept { return z_; }
    double energy() const noexcept { return z_.real(); }
    double eta() const noexcept { return z_.imag(); }
    // Distance from E to the nearer spectral edge, min(|E - 2|, |E + 2|).
    double kappa() const noexcept;

private:
    Complex z_;
};

// Stieltjes transform of the semicircle law: the root of m^2 + z m + 1 = 0
// with |m| <= 1 (ties broken by Im m > 0).
Complex m_sc(const SpectralParam& z);

// Stieltjes transform of the Kesten-McKay law, m_sc / (1 - m_sc^2 / (d-1)).
Complex m_d(const SpectralParam& z, int d);

// Kesten-McKay density for H = A / sqrt(d-1).
double rho_d(double x, int d);

// Kesten-McKay mass of [x, 2], from the closed-form antiderivative in x = 2 cos(theta).
double km_mass_above(double x, int d);

// Classical eigenvalue locations: out[i - 2] = gamma_i for i = 2..n, where the
// Kesten-McKay mass of [gamma_i, 2] equals i/n. Strictly decreasing, ends at -2.
std::vector<double> classical_locations(int n, int d);

// Root Green's functions of the depth-ell truncated (d-1)-ary tree (Y) and
// d-regular tree (X) whose boundary slots carry the weight delta. Computed by
// the level recursion y_k = 1 / (-z - y_{k-1}), y_{-1} = delta.
Complex Y_ell(Complex delta, const SpectralParam& z, int ell, int d);
Complex X_ell(Complex delta, const SpectralParam& z, int ell, int d);

// 1 / (N (d / sqrt(d-1) - z)): the trivial eigenvalue's share of m_N.
Complex trivial_eigenvalue_term(const SpectralParam& z, double n, int d);

// Deterministic corrections carried by the trivial eigenvalue in the
// self-consistent residuals Q - Y_ell(Q) and m_N - X_ell(Q).
Complex delta_Q(const SpectralParam& z, int ell, double n, int d);
Complex delta_m(const SpectralParam& z, int ell, double n, int d);

// Free constants of the parameter schedule. The defaults are desk-scale
// choices; the proofs need a >= 12, b >= 25 a, 0 < r_coef <= c / 32.
struct ParameterChoice {
    double c = 0.99;
    double a = 2.0;
    double b = 4.0;
    double r_coef = 0.99 / 32.0;
    long omega = 1;
    long c_q = 10;
};

struct ParameterSet {
    ParameterChoice choice;
    int d = 3;
    double n = 0;
    double radius_big = 0;     // (c/4) log_{d-1} N
    double radius_local = 0;   // r_coef log_{d-1} N
    double ell_low = 0;        // a log_{d-1} log N
    double ell_high = 0;       // 2 a log_{d-1} log N

    int R() const;     // floor(radius_big)
    int r() const;     // floor(radius_local)
    // Smallest integer in [ell_low, ell_high], or round(ell_low) if the window
    // holds no integer; never below 1.
    int ell() const;

    // a >= 12, b >= 25 a, 0 < r_coef <= c/32.
    bool constants_in_theorem_regime() const;
    // Human-readable list of the integer-rounded scale relations
    // R/8 >= r > ell and (log N)^a <= (d-1)^ell <= (log N)^{2a} that fail.
    std::vector<std::string> relation_violations() const;
};

ParameterSet make_parameters(double n, int d, const ParameterChoice& choice = {});

// ell in [ell_min, ell_max] maximizing |1 + m^2 + ... + m^{2 ell}|, m = m_sc(z).
int select_ell(const SpectralParam& z, int ell_min, int ell_max);

struct ErrorParams {
    double eps0 = 0;
    double eps = 0;
    double eps_prime = 0;
    double phi = 0;
    bool eps_is_eps0 = false;       // which branch of the dichotomy was taken
    bool eta_in_domain = false;     // eta >= (log N)^b / N
};

ErrorParams error_params(const SpectralParam& z, double n, int d, const ParameterSet& params);

// eps <= (log N)^{-4a} and phi <= eps (log N)^{-4a}.
bool error_relations_hold(const ErrorParams& e, const ParameterSet& params);

// eps / sqrt(kappa + eta + eps): the local-law bound on |m_N - m_d|.
double local_law_bound(const SpectralParam& z, const ErrorParams& e);

// C / sqrt(N eta): the calibrated desk-scale bound.
double practical_bound(const SpectralParam& z, double n, double constant);

}  // namespace rrg
