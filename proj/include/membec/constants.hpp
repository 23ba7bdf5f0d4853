#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace membec {

inline constexpr double pi = std::numbers::pi;

// CODATA values, SI units.
struct PhysicalConstants {
    double hbar = 1.0545718176461565e-34;  // J s
    double k_B = 1.380649e-23;             // J/K
    double mu_B = 9.2740100783e-24;        // J/T
    double mu0_over_4pi = 1e-7;            // T m/A
};

// Raw experimental inputs, SI units throughout.
struct ExperimentParams {
    double omega_m = 2 * pi * 1e6;  // membrane angular frequency, rad/s
    double mass = 5e-13;            // membrane effective mass, kg
    double mu_m = 2e-11;            // magnetic moment of the domain, A m^2
    double temperature = 4.0;       // K
    double B0 = 1e-5;               // bias field, T
    double x0 = 5e-6;               // condensate-membrane distance, m
    double N_atoms = 1e5;
    double g_F = 2.0;               // alkali F=1 Lande factor magnitude

    void validate() const {
        auto bad = [](double v) { return !std::isfinite(v); };
        if (bad(omega_m) || omega_m <= 0) throw std::invalid_argument("omega_m must be positive");
        if (bad(mass) || mass <= 0) throw std::invalid_argument("mass must be positive");
        if (bad(x0) || x0 <= 0) throw std::invalid_argument("x0 must be positive");
        if (bad(temperature) || temperature < 0) throw std::invalid_argument("temperature must be >= 0");
        if (bad(N_atoms) || N_atoms < 1) throw std::invalid_argument("N_atoms must be >= 1");
        if (bad(mu_m) || bad(B0) || bad(g_F)) throw std::invalid_argument("non-finite parameter");
    }
};

// Quantities the engines actually consume. All SI except the dimensionless ones.
struct DerivedParams {
    double x_zp = 0;         // zero-point length, m
    double B_c = 0;          // constant field at the condensate, T
    double B_vprime = 0;     // field gradient at the condensate, T/m
    double A_sa = 0;         // single-atom backaction length, m
    double A = 0;            // collective backaction length, m
    double Omega_L0 = 0;     // Larmor frequency, rad/s (sign follows B_c)
    double delta_Omega = 0;  // quadratic spin shift, rad/s
    double eta = 0;          // hbar*omega/(2 kB T); infinity encodes T = 0
    double nbar = 0;         // thermal occupation
    double omega_m = 0;      // carried along for time/angle conversion
    double mass = 0;

    bool zero_temperature() const { return std::isinf(eta); }
    double tanh_eta() const { return zero_temperature() ? 1.0 : std::tanh(eta); }
    double coth_eta() const { return zero_temperature() ? 1.0 : 1.0 / std::tanh(eta); }

    // Engine-side dimensionless couplings.
    double A_tilde() const { return A / x_zp; }
    double OmL_tilde() const { return Omega_L0 / omega_m; }
    double dOm_tilde() const { return delta_Omega / omega_m; }
};

inline DerivedParams derive_params(const PhysicalConstants& c, const ExperimentParams& e) {
    e.validate();
    DerivedParams d;
    d.omega_m = e.omega_m;
    d.mass = e.mass;
    d.x_zp = std::sqrt(c.hbar / (2 * e.mass * e.omega_m));
    d.B_c = e.B0 - c.mu0_over_4pi * e.mu_m / (e.x0 * e.x0 * e.x0);
    d.B_vprime = 3 * c.mu0_over_4pi * e.mu_m / (e.x0 * e.x0 * e.x0 * e.x0);
    d.A_sa = c.mu_B * e.g_F * d.B_vprime / (e.mass * e.omega_m * e.omega_m);
    d.A = e.N_atoms * d.A_sa;
    d.Omega_L0 = c.mu_B * e.g_F * d.B_c / c.hbar;
    d.delta_Omega = e.mass * e.omega_m * e.omega_m * d.A * d.A / (2 * c.hbar);
    if (e.temperature == 0) {
        d.eta = std::numeric_limits<double>::infinity();
        d.nbar = 0;
    } else {
        d.eta = c.hbar * e.omega_m / (2 * c.k_B * e.temperature);
        d.nbar = 1.0 / std::expm1(2 * d.eta);
    }
    return d;
}

// Exact point-dipole field for moment mu_m along z, evaluated at an SI point.
inline std::array<double, 3> dipole_field(const PhysicalConstants& c, const ExperimentParams& e,
                                          double x, double y, double z) {
    double r2 = x * x + y * y + z * z;
    if (r2 == 0) throw std::invalid_argument("dipole field singular at the origin");
    double r = std::sqrt(r2);
    double pref = c.mu0_over_4pi * e.mu_m / (r2 * r);
    return {pref * 3 * x * z / r2, pref * 3 * y * z / r2, pref * (3 * z * z / r2 - 1)};
}

struct LinearizedField {
    double B_c;       // T
    double B_vprime;  // T/m
};

inline LinearizedField linearized_field(const PhysicalConstants& c, const ExperimentParams& e) {
    if (e.x0 <= 0) throw std::invalid_argument("x0 must be positive");
    double x3 = e.x0 * e.x0 * e.x0;
    return {e.B0 - c.mu0_over_4pi * e.mu_m / x3, 3 * c.mu0_over_4pi * e.mu_m / (x3 * e.x0)};
}

// (A/x_zp)/sqrt(tanh eta); values of order one or larger mean the
// post-measurement interference fringes survive the thermal envelope.
inline double visibility_ratio(const DerivedParams& d) {
    return d.A_tilde() / std::sqrt(d.tanh_eta());
}

}  // namespace membec
