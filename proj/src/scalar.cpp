#include "rrg/scalar.hpp"

#include <cmath>
#include <numbers>

#include "rrg/error.hpp"

namespace rrg {

namespace {

void check_degree(int d) {
    if (d < 3) fail_input("degree must be >= 3, got " + std::to_string(d));
}

double log_base(double x, double base) { return std::log(x) / std::log(base); }

}  // namespace

SpectralParam::SpectralParam(Complex z) : z_(z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || z.imag() <= 0)
        fail_input("spectral parameter must satisfy Im z > 0");
}

double SpectralParam::kappa() const noexcept { return std::min(std::abs(energy() - 2), std::abs(energy() + 2)); }

Complex m_sc(const SpectralParam& zp) {
    const Complex z = zp.z();
    const Complex s = std::sqrt(z * z - 4.0);
    const Complex r1 = (-z + s) / 2.0;
    const Complex r2 = (-z - s) / 2.0;
    // r1 * r2 = 1, so exactly one root lies in the closed unit disk unless both are on the circle.
    const double a1 = std::abs(r1);
    const double a2 = std::abs(r2);
    if (a1 < a2) return r1;
    if (a2 < a1) return r2;
    return r1.imag() > 0 ? r1 : r2;
}

Complex m_d(const SpectralParam& z, int d) {
    check_degree(d);
    const Complex m = m_sc(z);
    return m / (1.0 - m * m / static_cast<double>(d - 1));
}

double rho_d(double x, int d) {
    check_degree(d);
    const double s = 4.0 - x * x;
    if (s <= 0) return 0.0;
    const double dd = d;
    return std::sqrt(s) / (2.0 * std::numbers::pi) / (1.0 + 1.0 / (dd - 1.0) - x * x / dd);
}

namespace {

// Mass of [2 cos(theta), 2]. With x = 2 cos(theta) the density becomes
// (2/pi) sin^2 / (a - b cos^2), a = d/(d-1), b = 4/d, and a > b for d >= 3.
double km_mass_theta(double theta, int d) {
    const double dd = d;
    const double a = dd / (dd - 1.0);
    const double b = 4.0 / dd;
    const double c = a - b;
    const double inner = std::atan2(std::sqrt(a) * std::sin(theta), std::sqrt(c) * std::cos(theta)) / std::sqrt(a * c);
    return (2.0 / std::numbers::pi) * (theta + (b - a) * inner) / b;
}

}  // namespace

double km_mass_above(double x, int d) {
    check_degree(d);
    if (x >= 2) return 0.0;
    if (x <= -2) return 1.0;
    return km_mass_theta(std::acos(x / 2.0), d);
}

std::vector<double> classical_locations(int n, int d) {
    check_degree(d);
    if (n < 2) fail_input("classical_locations needs n >= 2");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n - 1));
    for (int i = 2; i <= n; ++i) {
        const double target = static_cast<double>(i) / n;
        if (i == n) {
            out.push_back(-2.0);
            continue;
        }
        double lo = 0.0;
        double hi = std::numbers::pi;
        for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
            const double mid = 0.5 * (lo + hi);
            (km_mass_theta(mid, d) < target ? lo : hi) = mid;
        }
        out.push_back(2.0 * std::cos(0.5 * (lo + hi)));
    }
    return out;
}

namespace {

// y_k for the truncated (d-1)-ary tree, starting from y_{-1} = delta.
Complex tree_level(Complex delta, Complex z, int levels) {
    Complex y = delta;
    for (int k = 0; k < levels; ++k) y = 1.0 / (-z - y);
    return y;
}

}  // namespace

Complex Y_ell(Complex delta, const SpectralParam& z, int ell, int d) {
    check_degree(d);
    if (ell < 0) fail_input("ell must be nonnegative");
    return tree_level(delta, z.z(), ell + 1);
}

Complex X_ell(Complex delta, const SpectralParam& z, int ell, int d) {
    check_degree(d);
    if (ell < 0) fail_input("ell must be nonnegative");
    const double dd = d;
    return 1.0 / (-z.z() - dd / (dd - 1.0) * tree_level(delta, z.z(), ell));
}

Complex trivial_eigenvalue_term(const SpectralParam& z, double n, int d) {
    check_degree(d);
    const double dd = d;
    return 1.0 / (n * (dd / std::sqrt(dd - 1.0) - z.z()));
}

Complex delta_Q(const SpectralParam& z, int ell, double n, int d) {
    const double dd = d;
    const Complex m = m_sc(z);
    const Complex shift = 1.0 + m / std::sqrt(dd - 1.0);
    return (std::pow(dd - 1.0, ell + 1) - 1.0) * std::pow(m, 2 * ell + 2) * shift * shift *
           trivial_eigenvalue_term(z, n, d);
}

Complex delta_m(const SpectralParam& z, int ell, double n, int d) {
    const double dd = d;
    const Complex m = m_sc(z);
    const Complex md = m_d(z, d);
    const Complex shift = 1.0 + m / std::sqrt(dd - 1.0);
    return dd / (dd - 1.0) * (dd * std::pow(dd - 1.0, ell) - 1.0) * md * md * std::pow(m, 2 * ell) * shift * shift *
           trivial_eigenvalue_term(z, n, d);
}

int ParameterSet::R() const { return static_cast<int>(std::floor(radius_big)); }

int ParameterSet::r() const { return static_cast<int>(std::floor(radius_local)); }

int ParameterSet::ell() const {
    const double lo = std::ceil(ell_low);
    const int ell = lo <= ell_high ? static_cast<int>(lo) : static_cast<int>(std::lround(ell_low));
    return std::max(ell, 1);
}

bool ParameterSet::constants_in_theorem_regime() const {
    return choice.a >= 12 && choice.b >= 25 * choice.a && choice.r_coef > 0 && choice.r_coef <= choice.c / 32 &&
           choice.c > 0 && choice.c < 1;
}

std::vector<std::string> ParameterSet::relation_violations() const {
    std::vector<std::string> out;
    const double logn = std::log(n);
    if (R() / 8.0 < r()) out.push_back("R/8 >= r");
    if (r() <= ell()) out.push_back("r > ell");
    const double scale = std::pow(static_cast<double>(d - 1), ell());
    if (scale < std::pow(logn, choice.a)) out.push_back("(log N)^a <= (d-1)^ell");
    if (scale > std::pow(logn, 2 * choice.a)) out.push_back("(d-1)^ell <= (log N)^{2a}");
    return out;
}

ParameterSet make_parameters(double n, int d, const ParameterChoice& choice) {
    check_degree(d);
    if (!(n > 2)) fail_input("parameter schedule needs N > 2");
    if (!(choice.c > 0 && choice.c < 1)) fail_input("parameter c must lie in (0, 1)");
    ParameterSet p;
    p.choice = choice;
    p.d = d;
    p.n = n;
    const double base = d - 1.0;
    p.radius_big = choice.c / 4.0 * log_base(n, base);
    p.radius_local = choice.r_coef * log_base(n, base);
    p.ell_low = choice.a * log_base(std::log(n), base);
    p.ell_high = 2.0 * p.ell_low;
    return p;
}

int select_ell(const SpectralParam& z, int ell_min, int ell_max) {
    if (ell_min < 0 || ell_max < ell_min) fail_input("select_ell: empty window");
    const Complex m2 = m_sc(z) * m_sc(z);
    Complex sum = 0.0;
    Complex power = 1.0;
    int best = ell_min;
    double best_abs = -1;
    for (int ell = 0; ell <= ell_max; ++ell) {
        sum += power;
        power *= m2;
        if (ell >= ell_min && std::abs(sum) > best_abs) {
            best_abs = std::abs(sum);
            best = ell;
        }
    }
    return best;
}

ErrorParams error_params(const SpectralParam& z, double n, int d, const ParameterSet& params) {
    const double logn = std::log(n);
    const double eta = z.eta();
    const double im_md = m_d(z, d).imag();
    ErrorParams e;
    e.eps0 = std::pow(logn, 8 * params.choice.a) *
             (std::pow(d - 1.0, -params.radius_local) + std::sqrt(im_md / (n * eta)) + std::pow(n * eta, -2.0 / 3.0));
    e.eps_is_eps0 = e.eps0 <= (z.kappa() + eta) / logn;
    e.eps = e.eps_is_eps0 ? e.eps0 : std::pow(logn, 4) * e.eps0;
    e.eps_prime = std::pow(logn, 3) * e.eps;
    const double kpe = z.kappa() + eta;
    e.phi = std::pow(logn, 2 * params.choice.a) *
            std::sqrt((im_md + e.eps_prime + e.eps / std::sqrt(kpe + e.eps)) / (n * eta));
    e.eta_in_domain = eta >= std::pow(logn, params.choice.b) / n;
    return e;
}

bool error_relations_hold(const ErrorParams& e, const ParameterSet& params) {
    const double scale = std::pow(std::log(params.n), -4 * params.choice.a);
    return e.eps <= scale && e.phi <= e.eps * scale;
}

double local_law_bound(const SpectralParam& z, const ErrorParams& e) {
    return e.eps / std::sqrt(z.kappa() + z.eta() + e.eps);
}

double practical_bound(const SpectralParam& z, double n, double constant) {
    return constant / std::sqrt(n * z.eta());
}

}  // namespace rrg
