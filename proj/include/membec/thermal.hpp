#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "membec/constants.hpp"
#include "membec/functionals.hpp"
#include "membec/grid.hpp"
#include "membec/schedule.hpp"

namespace membec {

inline constexpr int default_path_cap = 6;

// Dimensionless couplings the engines run on: u = x/x_zp, v = p/(m w x_zp),
// angles theta = omega_m t. The quadratic shift is tied to At exactly.
struct ScaledParams {
    double At = 0;   // A/x_zp
    double OmL = 0;  // Omega_L0/omega_m
    double th = 1;   // tanh eta
    double ch = 1;   // coth eta

    double dOm() const { return 0.25 * At * At; }

    static ScaledParams from(const DerivedParams& d) {
        return {d.A_tilde(), d.OmL_tilde(), d.tanh_eta(), d.coth_eta()};
    }
    static ScaledParams make(double At, double eta, double OmL) {
        if (!(eta > 0)) throw std::invalid_argument("eta must be positive (or use from() with a T=0 flag)");
        if (std::isinf(eta)) return {At, OmL, 1.0, 1.0};
        return {At, OmL, std::tanh(eta), 1.0 / std::tanh(eta)};
    }
};

// One (ket path, bra path) term of the double path sum. coef carries the spin
// chain amplitudes, the initial spin density element and the Larmor phases.
struct PairTerm {
    cd coef;
    bool diag = false;
    PathFunctionals fa, fb;
};

namespace detail {

inline void check_cap(std::size_t n, int cap) {
    if (static_cast<int>(n) > cap)
        throw std::length_error("schedule length " + std::to_string(n) + " exceeds cap " +
                                std::to_string(cap) + "; the double path sum grows as 9^n");
}

// Chain amplitudes for one path: product of Kraus matrix elements along the
// path, resolved per final spin index g.
inline std::array<cd, 3> chain_amps(const std::vector<Mat3c>& kraus, const std::vector<int>& path) {
    cd base = 1.0;
    for (std::size_t i = 1; i < path.size(); ++i)
        base *= kraus[i - 1](spin_index(path[i]), spin_index(path[i - 1]));
    std::array<cd, 3> out;
    for (int gi = 0; gi < 3; ++gi)
        out[static_cast<std::size_t>(gi)] = base * kraus[path.size() - 1](gi, spin_index(path.back()));
    return out;
}

inline cd larmor_phase(const ScaledParams& sp, const std::vector<double>& thetas,
                       const std::vector<int>& a, const std::vector<int>& b) {
    double ph = 0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        double da = a[i], db = b[i];
        ph -= thetas[i] * (sp.OmL * (da - db) - sp.dOm() * (da * da - db * db));
    }
    return std::exp(cd(0, ph));
}

}  // namespace detail

inline std::vector<PairTerm> pair_terms(const ScaledParams& sp, const std::vector<double>& thetas,
                                        const std::vector<Mat3c>& kraus, int cap = default_path_cap) {
    detail::check_cap(thetas.size(), cap);
    if (thetas.size() != kraus.size())
        throw std::invalid_argument("need one Kraus operator per interval");
    auto paths = enumerate_paths(thetas.size());
    std::vector<PathFunctionals> funs(paths.size());
    std::vector<std::array<cd, 3>> amps(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        funs[i] = path_functionals(thetas, paths[i]);
        amps[i] = detail::chain_amps(kraus, paths[i]);
    }
    Mat3c rho0 = initial_bec_density();
    std::vector<PairTerm> out;
    out.reserve(paths.size() * paths.size());
    for (std::size_t ia = 0; ia < paths.size(); ++ia) {
        for (std::size_t ib = 0; ib < paths.size(); ++ib) {
            cd c = 0;
            for (int g = 0; g < 3; ++g)
                c += amps[ia][static_cast<std::size_t>(g)] * std::conj(amps[ib][static_cast<std::size_t>(g)]);
            c *= rho0(spin_index(paths[ia][0]), spin_index(paths[ib][0]));
            if (c == cd(0, 0)) continue;
            c *= detail::larmor_phase(sp, thetas, paths[ia], paths[ib]);
            out.push_back({c, ia == ib, funs[ia], funs[ib]});
        }
    }
    return out;
}

// Trace of the unnormalized post-measurement state: the probability of the
// outcome sequence. Gaussian x integrals done analytically.
inline cd outcome_probability(const ScaledParams& sp, const std::vector<double>& thetas,
                              const std::vector<Mat3c>& kraus, bool diag_only = false,
                              int cap = default_path_cap) {
    cd tot = 0;
    double At2 = sp.At * sp.At;
    for (const auto& t : pair_terms(sp, thetas, kraus, cap)) {
        if (diag_only && !t.diag) continue;
        double dX = t.fa.X - t.fb.X, dP = t.fa.P - t.fb.P;
        double damp = -sp.ch / 8 * At2 * (dX * dX + dP * dP);
        double phase = 0.25 * At2 * ((t.fb.X * t.fb.P - t.fa.X * t.fa.P) +
                                     (t.fb.X * t.fa.P - t.fa.X * t.fb.P) - (t.fa.phi - t.fb.phi));
        tot += t.coef * std::exp(cd(damp, phase));
    }
    return tot;
}

inline std::vector<double> all_outcome_probabilities(const ScaledParams& sp,
                                                     const std::vector<double>& thetas,
                                                     int cap = default_path_cap) {
    auto seqs = enumerate_paths(thetas.size());
    std::vector<double> probs;
    probs.reserve(seqs.size());
    for (const auto& seq : seqs) {
        std::vector<Mat3c> kraus;
        kraus.reserve(seq.size());
        for (int g : seq) kraus.push_back(fy_projector(g));
        probs.push_back(outcome_probability(sp, thetas, kraus, false, cap).real());
    }
    return probs;
}

namespace detail {

inline cd rho_pair_kernel(const ScaledParams& sp, const PathFunctionals& fa, const PathFunctionals& fb,
                          double uf, double ui) {
    double tf = uf + sp.At * fa.X;
    double ti = ui + sp.At * fb.X;
    double s = tf + ti, m = tf - ti;
    cd ex(-0.125 * (s * s * sp.th + m * m * sp.ch),
          -0.5 * sp.At * (fa.P * tf - fb.P * ti) - 0.25 * sp.At * sp.At * (fa.phi - fb.phi));
    return std::exp(ex);
}

}  // namespace detail

// Membrane position-space density of the unnormalized post-measurement state,
// scaled units; the diagonal integrates to the sequence probability.
inline Eigen::MatrixXcd rho_position(const ScaledParams& sp, const std::vector<double>& thetas,
                                     const std::vector<Mat3c>& kraus, const Eigen::VectorXd& uf,
                                     const Eigen::VectorXd& ui, int cap = default_path_cap) {
    auto terms = pair_terms(sp, thetas, kraus, cap);
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(uf.size(), ui.size());
    double pref = std::sqrt(sp.th / (2 * pi));
    for (const auto& t : terms)
        for (Eigen::Index i = 0; i < uf.size(); ++i)
            for (Eigen::Index j = 0; j < ui.size(); ++j)
                rho(i, j) += t.coef * detail::rho_pair_kernel(sp, t.fa, t.fb, uf[i], ui[j]);
    return pref * rho;
}

// Joint matrix element with the final spin indices kept (unnormalized),
// evaluated on a position grid.
inline Eigen::MatrixXcd joint_density_after(const ScaledParams& sp, const std::vector<double>& thetas,
                                            const std::vector<Mat3c>& kraus, int alpha, int beta,
                                            const Eigen::VectorXd& uf, const Eigen::VectorXd& ui,
                                            int cap = default_path_cap) {
    detail::check_cap(thetas.size(), cap);
    auto paths = enumerate_paths(thetas.size());
    Mat3c rho0 = initial_bec_density();
    int ga = spin_index(alpha), gb = spin_index(beta);
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(uf.size(), ui.size());
    for (const auto& a : paths) {
        auto fa = path_functionals(thetas, a);
        cd ca = detail::chain_amps(kraus, a)[static_cast<std::size_t>(ga)];
        if (ca == cd(0, 0)) continue;
        for (const auto& b : paths) {
            cd cb = detail::chain_amps(kraus, b)[static_cast<std::size_t>(gb)];
            if (cb == cd(0, 0)) continue;
            cd c = ca * std::conj(cb) * rho0(spin_index(a[0]), spin_index(b[0]));
            if (c == cd(0, 0)) continue;
            c *= detail::larmor_phase(sp, thetas, a, b);
            auto fb = path_functionals(thetas, b);
            for (Eigen::Index i = 0; i < uf.size(); ++i)
                for (Eigen::Index j = 0; j < ui.size(); ++j)
                    rho(i, j) += c * detail::rho_pair_kernel(sp, fa, fb, uf[i], ui[j]);
        }
    }
    return std::sqrt(sp.th / (2 * pi)) * rho;
}

// Grid axes chosen from the pair-term centers plus pad_widths thermal widths.
inline Axes thermal_axes(const std::vector<PairTerm>& terms, const ScaledParams& sp, const GridSpec& gs) {
    if (gs.has_range)
        return {linspace(gs.umin, gs.umax, gs.nu), linspace(gs.vmin, gs.vmax, gs.nv)};
    double cu_min = 0, cu_max = 0, cv_min = 0, cv_max = 0;
    for (const auto& t : terms) {
        double cu = -0.5 * sp.At * (t.fa.X + t.fb.X);
        double cv = -0.5 * sp.At * (t.fa.P + t.fb.P);
        cu_min = std::min(cu_min, cu);
        cu_max = std::max(cu_max, cu);
        cv_min = std::min(cv_min, cv);
        cv_max = std::max(cv_max, cv);
    }
    double w = gs.pad_widths / std::sqrt(sp.th);
    return {linspace(cu_min - w, cu_max + w, gs.nu), linspace(cv_min - w, cv_max + w, gs.nv)};
}

struct WignerResult {
    Eigen::VectorXd u, v;
    Eigen::MatrixXd w;          // real part, scaled units, integrates to 1 when normalized
    double imag_residue = 0;    // max|Im|/max|Re| before discarding
    double prob = 0;            // sequence probability used for normalization
};

// Post-measurement Wigner function. Every pair term factorizes into a
// u-profile times a v-profile, so the grid assembles as a sum of rank-one
// products; fixed-size chunks keep the reduction order deterministic.
inline WignerResult wigner_post(const ScaledParams& sp, const std::vector<double>& thetas,
                                const std::vector<Mat3c>& kraus, const Eigen::VectorXd& u,
                                const Eigen::VectorXd& v, bool normalize = true,
                                bool diag_only = false, int cap = default_path_cap) {
    auto all_terms = pair_terms(sp, thetas, kraus, cap);
    std::vector<PairTerm> terms;
    terms.reserve(all_terms.size());
    for (const auto& t : all_terms)
        if (!diag_only || t.diag) terms.push_back(t);

    const Eigen::Index nu = u.size(), nv = v.size();
    const double At2 = sp.At * sp.At;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(nu, nv);
    constexpr std::size_t chunk = 256;
    Eigen::MatrixXcd Gu(nu, chunk), Gv(nv, chunk);
    for (std::size_t base = 0; base < terms.size(); base += chunk) {
        std::size_t m = std::min(chunk, terms.size() - base);
        for (std::size_t k = 0; k < m; ++k) {
            const auto& t = terms[base + k];
            double cu = 0.5 * sp.At * (t.fa.X + t.fb.X);
            double cv = 0.5 * sp.At * (t.fa.P + t.fb.P);
            double dX = t.fa.X - t.fb.X, dP = t.fa.P - t.fb.P;
            cd alpha = t.coef * std::exp(cd(0, -0.25 * At2 * (t.fa.phi - t.fb.phi)));
            for (Eigen::Index i = 0; i < nu; ++i) {
                double ut = u[i] + cu;
                Gu(i, static_cast<Eigen::Index>(k)) =
                    alpha * std::exp(cd(-0.5 * sp.th * ut * ut, -0.5 * sp.At * dP * ut));
            }
            for (Eigen::Index j = 0; j < nv; ++j) {
                double vt = v[j] + cv;
                Gv(j, static_cast<Eigen::Index>(k)) =
                    std::exp(cd(-0.5 * sp.th * vt * vt, 0.5 * sp.At * dX * v[j]));
            }
        }
        acc.noalias() += Gu.leftCols(static_cast<Eigen::Index>(m)) *
                         Gv.leftCols(static_cast<Eigen::Index>(m)).transpose();
    }
    cd prob_c = outcome_probability(sp, thetas, kraus, false, cap);
    Eigen::MatrixXcd wc = (sp.th / (2 * pi)) * acc;
    if (normalize) wc /= prob_c;
    WignerResult res;
    res.u = u;
    res.v = v;
    res.w = wc.real();
    double max_re = res.w.cwiseAbs().maxCoeff();
    double max_im = wc.imag().cwiseAbs().maxCoeff();
    res.imag_residue = max_re > 0 ? max_im / max_re : max_im;
    res.prob = prob_c.real();
    return res;
}

// Thermal-equilibrium Wigner function (no measurement).
inline Eigen::MatrixXd wigner_thermal(const ScaledParams& sp, const Eigen::VectorXd& u,
                                      const Eigen::VectorXd& v) {
    Eigen::MatrixXd w(u.size(), v.size());
    for (Eigen::Index i = 0; i < u.size(); ++i)
        for (Eigen::Index j = 0; j < v.size(); ++j)
            w(i, j) = sp.th / (2 * pi) * std::exp(-0.5 * sp.th * (u[i] * u[i] + v[j] * v[j]));
    return w;
}

// First and second phase-space moments via the analytic Gaussian integrals of
// the pair terms; no grid involved.
struct ThermalMoments {
    double prob = 0;
    double mean_u = 0, mean_v = 0;
    double u2 = 0, v2 = 0;
    double var_u() const { return u2 - mean_u * mean_u; }
    double var_v() const { return v2 - mean_v * mean_v; }
};

inline ThermalMoments analytic_moments(const ScaledParams& sp, const std::vector<double>& thetas,
                                       const std::vector<Mat3c>& kraus, int cap = default_path_cap) {
    const double a = 0.5 * sp.th;
    const double At2 = sp.At * sp.At;
    cd P = 0, MU = 0, MV = 0, MU2 = 0, MV2 = 0;
    for (const auto& t : pair_terms(sp, thetas, kraus, cap)) {
        double cu = 0.5 * sp.At * (t.fa.X + t.fb.X);
        double cv = 0.5 * sp.At * (t.fa.P + t.fb.P);
        double gam = 0.5 * sp.At * (t.fa.P - t.fb.P);   // -i*gam multiplies (u + cu)
        double del = 0.5 * sp.At * (t.fa.X - t.fb.X);   // +i*del multiplies raw v
        cd alpha = t.coef * std::exp(cd(0, -0.25 * At2 * (t.fa.phi - t.fb.phi)));
        double g0 = std::sqrt(pi / a);
        cd I0u = g0 * std::exp(-gam * gam / (4 * a));
        cd I0v = g0 * std::exp(cd(-del * del / (4 * a), -del * cv));
        cd m1u = cd(-cu, -gam / (2 * a));
        cd m1v = cd(-cv, del / (2 * a));
        cd I1u = I0u * m1u, I1v = I0v * m1v;
        cd I2u = I0u * (m1u * m1u + 1.0 / (2 * a));
        cd I2v = I0v * (m1v * m1v + 1.0 / (2 * a));
        P += alpha * I0u * I0v;
        MU += alpha * I1u * I0v;
        MV += alpha * I0u * I1v;
        MU2 += alpha * I2u * I0v;
        MV2 += alpha * I0u * I2v;
    }
    ThermalMoments m;
    double norm = sp.th / (2 * pi);
    m.prob = (norm * P).real();
    m.mean_u = (MU / P).real();
    m.mean_v = (MV / P).real();
    m.u2 = (MU2 / P).real();
    m.v2 = (MV2 / P).real();
    return m;
}

// Leading-order post-measurement moments for the F_y = +1 outcome at small
// coupling. The mean follows the conditional-shift formula with Larmor angle
// phi_L; it vanishes when omega_m is an integer multiple of Omega_L0.
struct SmallAMoments {
    double mean_x = 0;  // m
    double var_x = 0;   // m^2
};

inline SmallAMoments small_A_moments(const DerivedParams& d, double t1) {
    double phiL = d.Omega_L0 * t1;
    double theta = d.omega_m * t1;
    double denom = 1 + std::sin(phiL);
    if (std::abs(denom) < 1e-12)
        throw std::domain_error("F_y=+1 outcome probability vanishes at this Larmor phase");
    double ch = d.coth_eta();
    double mean_u = d.A_tilde() * std::sin(theta) * ch * std::cos(phiL) / denom;
    SmallAMoments m;
    m.mean_x = d.x_zp * mean_u;
    m.var_x = d.x_zp * d.x_zp * (ch - mean_u * mean_u);
    return m;
}

// Peak interference amplitude: largest deviation between the full Wigner
// function and its decohered (diagonal-pairs-only) part, probed along the
// v axis at u = 0 where the single-measurement fringes are extremal.
inline double fringe_amplitude(const ScaledParams& sp, double theta1, int outcome,
                               long npts = 2000001) {
    std::vector<Mat3c> kraus{fy_projector(outcome)};
    std::vector<double> thetas{theta1};
    auto terms = pair_terms(sp, thetas, kraus);
    cd prob = outcome_probability(sp, thetas, kraus);
    const double At2 = sp.At * sp.At;

    struct Slice {
        cd amp;
        double cv, del;
        bool diag;
    };
    std::vector<Slice> sl;
    sl.reserve(terms.size());
    for (const auto& t : terms) {
        double cu = 0.5 * sp.At * (t.fa.X + t.fb.X);
        double gam = 0.5 * sp.At * (t.fa.P - t.fb.P);
        cd alpha = t.coef * std::exp(cd(0, -0.25 * At2 * (t.fa.phi - t.fb.phi)));
        cd gu0 = std::exp(cd(-0.5 * sp.th * cu * cu, -gam * cu));
        sl.push_back({alpha * gu0, 0.5 * sp.At * (t.fa.P + t.fb.P), 0.5 * sp.At * (t.fa.X - t.fb.X),
                      t.diag});
    }
    double vmax = 6.5 / std::sqrt(sp.th);
    double step = 2 * vmax / static_cast<double>(npts - 1);
    double metric = 0;
    for (long j = 0; j < npts; ++j) {
        double v = -vmax + step * static_cast<double>(j);
        cd full = 0, diag = 0;
        for (const auto& s : sl) {
            double vt = v + s.cv;
            cd term = s.amp * std::exp(cd(-0.5 * sp.th * vt * vt, s.del * v));
            full += term;
            if (s.diag) diag += term;
        }
        double dev = std::abs(((full - diag) * (sp.th / (2 * pi)) / prob).real());
        metric = std::max(metric, dev);
    }
    return metric;
}

// SI-facing wrappers. Position arguments in meters, time in seconds; the
// returned densities carry 1/m units.
inline cd thermal_density_element(const DerivedParams& d, double xf, double xi) {
    ScaledParams sp = ScaledParams::from(d);
    double uf = xf / d.x_zp, ui = xi / d.x_zp;
    double s = uf + ui, m = uf - ui;
    return std::sqrt(sp.th / (2 * pi)) / d.x_zp *
           std::exp(cd(-0.125 * (s * s * sp.th + m * m * sp.ch), 0));
}

inline cd joint_density_element(const DerivedParams& d, double t1, int alpha, int beta, double xf,
                                double xi) {
    ScaledParams sp = ScaledParams::from(d);
    double theta = d.omega_m * t1;
    std::vector<int> pa{alpha}, pb{beta};
    auto fa = path_functionals({theta}, pa);
    auto fb = path_functionals({theta}, pb);
    Mat3c rho0 = initial_bec_density();
    cd c = rho0(spin_index(alpha), spin_index(beta)) *
           detail::larmor_phase(sp, {theta}, pa, pb);
    return c * std::sqrt(sp.th / (2 * pi)) / d.x_zp *
           detail::rho_pair_kernel(sp, fa, fb, xf / d.x_zp, xi / d.x_zp);
}

inline cd n_measurement_density(const DerivedParams& d, const std::vector<double>& times_s,
                                const std::vector<Mat3c>& kraus, int alpha, int beta, double xf,
                                double xi, int cap = default_path_cap) {
    ScaledParams sp = ScaledParams::from(d);
    std::vector<double> thetas;
    thetas.reserve(times_s.size());
    for (double t : times_s) thetas.push_back(d.omega_m * t);
    Eigen::VectorXd uf(1), ui(1);
    uf[0] = xf / d.x_zp;
    ui[0] = xi / d.x_zp;
    return joint_density_after(sp, thetas, kraus, alpha, beta, uf, ui, cap)(0, 0) / d.x_zp;
}

}  // namespace membec
