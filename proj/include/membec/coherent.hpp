#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "membec/constants.hpp"
#include "membec/functionals.hpp"
#include "membec/grid.hpp"
#include "membec/schedule.hpp"
#include "membec/thermal.hpp"

namespace membec {

// Negativity detection threshold in the scaled Wigner units: a deterministic
// margin below zero so quadrature noise is never flagged.
inline constexpr double negativity_threshold = -1e-4 / (2 * pi);

// One coherent branch: the membrane packet centered at (2a, 2b) in (u, v),
// tagged by the spin path and the final (post-measurement) spin value. The
// amplitude includes the initial spin amplitude, all Kraus matrix elements,
// the Larmor and quadratic-shift phases, the zero-point phase and the kick
// phase Theta.
struct CoherentBranch {
    int final_g = 0;
    cd amp;
    double a = 0, b = 0, Theta = 0;
    std::vector<int> path;
};

inline std::vector<CoherentBranch> evolve_coherent(const ScaledParams& sp,
                                                   const std::vector<double>& thetas,
                                                   const std::vector<Mat3c>& kraus, double a0,
                                                   double b0, int cap = default_path_cap) {
    detail::check_cap(thetas.size(), cap);
    if (thetas.size() != kraus.size())
        throw std::invalid_argument("need one Kraus operator per interval");
    Vec3c chi = prepare_pi_half();
    std::vector<CoherentBranch> out;
    if (thetas.empty()) {
        for (int g : spin_values) out.push_back({g, chi[spin_index(g)], a0, b0, 0.0, {}});
        return out;
    }
    double theta_total = 0;
    for (double t : thetas) theta_total += t;
    for (const auto& path : enumerate_paths(thetas.size())) {
        auto f = coherent_functionals(sp.At, thetas, path, a0, b0);
        double ph = -0.5 * theta_total - 0.5 * sp.At * f.Theta;
        for (std::size_t i = 0; i < thetas.size(); ++i) {
            double s = path[i];
            ph -= thetas[i] * (sp.OmL * s - sp.dOm() * s * s);
        }
        cd base = chi[spin_index(path[0])] * std::exp(cd(0, ph));
        for (std::size_t i = 1; i < path.size(); ++i)
            base *= kraus[i - 1](spin_index(path[i]), spin_index(path[i - 1]));
        for (int g : spin_values) {
            cd amp = base * kraus.back()(spin_index(g), spin_index(path.back()));
            if (amp != cd(0, 0)) out.push_back({g, amp, f.a, f.b, f.Theta, path});
        }
    }
    return out;
}

// <Psi|Psi> of the unnormalized branch superposition: the probability of the
// recorded outcome sequence.
inline cd coherent_norm(const std::vector<CoherentBranch>& branches) {
    cd tot = 0;
    for (const auto& b1 : branches) {
        cd z1(b1.a, b1.b);
        for (const auto& b2 : branches) {
            if (b1.final_g != b2.final_g) continue;
            cd z2(b2.a, b2.b);
            cd ov = std::exp(-0.5 * std::norm(z1) - 0.5 * std::norm(z2) + std::conj(z2) * z1);
            tot += b1.amp * std::conj(b2.amp) * ov;
        }
    }
    return tot;
}

inline Axes coherent_axes(const std::vector<CoherentBranch>& branches, const GridSpec& gs) {
    if (gs.has_range)
        return {linspace(gs.umin, gs.umax, gs.nu), linspace(gs.vmin, gs.vmax, gs.nv)};
    double ua = branches.front().a * 2, ub = ua, va = branches.front().b * 2, vb = va;
    for (const auto& br : branches) {
        ua = std::min(ua, 2 * br.a);
        ub = std::max(ub, 2 * br.a);
        va = std::min(va, 2 * br.b);
        vb = std::max(vb, 2 * br.b);
    }
    double uc = 0.5 * (ua + ub), vc = 0.5 * (va + vb);
    double du = 0.5 * (ub - ua) + gs.pad_widths, dv = 0.5 * (vb - va) + gs.pad_widths;
    return {linspace(uc - du, uc + du, gs.nu), linspace(vc - dv, vc + dv, gs.nv)};
}

// Wigner function of the branch superposition. Branch pairs with equal final
// spin contribute separable complex-Gaussian products, assembled chunk-wise
// as rank-one updates like the thermal grid.
inline WignerResult wigner_coherent(const std::vector<CoherentBranch>& branches,
                                    const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                    bool normalize = true) {
    struct Pair {
        cd pref;
        double Sa, Da, Sb, Db;
    };
    std::vector<Pair> pairs;
    for (const auto& b1 : branches)
        for (const auto& b2 : branches) {
            if (b1.final_g != b2.final_g) continue;
            double Sa = b1.a + b2.a, Da = b1.a - b2.a;
            double Sb = b1.b + b2.b, Db = b1.b - b2.b;
            cd pref = b1.amp * std::conj(b2.amp) *
                      std::exp(cd(-0.5 * (Da * Da + Db * Db), b2.a * b1.b - b1.a * b2.b));
            pairs.push_back({pref, Sa, Da, Sb, Db});
        }

    cd nrm = coherent_norm(branches);
    const Eigen::Index nu = u.size(), nv = v.size();
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(nu, nv);
    constexpr std::size_t chunk = 256;
    Eigen::MatrixXcd Gu(nu, chunk), Gv(nv, chunk);
    for (std::size_t base = 0; base < pairs.size(); base += chunk) {
        std::size_t m = std::min(chunk, pairs.size() - base);
        for (std::size_t k = 0; k < m; ++k) {
            const auto& p = pairs[base + k];
            for (Eigen::Index i = 0; i < nu; ++i) {
                cd du = cd(u[i] - p.Sa, -p.Db);
                Gu(i, static_cast<Eigen::Index>(k)) = p.pref * std::exp(-0.5 * du * du);
            }
            for (Eigen::Index j = 0; j < nv; ++j) {
                cd dv = cd(v[j] - p.Sb, p.Da);
                Gv(j, static_cast<Eigen::Index>(k)) = std::exp(-0.5 * dv * dv);
            }
        }
        acc.noalias() += Gu.leftCols(static_cast<Eigen::Index>(m)) *
                         Gv.leftCols(static_cast<Eigen::Index>(m)).transpose();
    }
    Eigen::MatrixXcd wc = acc / (2 * pi);
    if (normalize) wc /= nrm;
    WignerResult res;
    res.u = u;
    res.v = v;
    res.w = wc.real();
    double max_re = res.w.cwiseAbs().maxCoeff();
    double max_im = wc.imag().cwiseAbs().maxCoeff();
    res.imag_residue = max_re > 0 ? max_im / max_re : max_im;
    res.prob = nrm.real();
    return res;
}

struct ScanPoint {
    double t_over_pi = 0;
    double min_w = 0;
    double prob = 0;
    bool negative() const { return min_w < negativity_threshold; }
};

// Minimum of the post-measurement Wigner function over an auto-centered grid
// for a single measurement at angle theta1.
inline ScanPoint min_wigner_single(const ScaledParams& sp, double theta1, int outcome, double a0,
                                   double b0, int ngrid = 241) {
    std::vector<Mat3c> kraus{fy_projector(outcome)};
    auto branches = evolve_coherent(sp, {theta1}, kraus, a0, b0);
    GridSpec gs;
    gs.nu = gs.nv = ngrid;
    auto ax = coherent_axes(branches, gs);
    auto res = wigner_coherent(branches, ax.u, ax.v);
    ScanPoint pt;
    pt.t_over_pi = theta1 / pi;
    pt.min_w = res.w.minCoeff();
    pt.prob = res.prob;
    return pt;
}

inline std::vector<ScanPoint> negativity_scan(const ScaledParams& sp, double a0, double b0,
                                              int outcome, double tmin_pi, double tmax_pi,
                                              double step_pi = 0.02, int ngrid = 241) {
    if (!(tmin_pi > 0) || !(tmax_pi >= tmin_pi) || !(step_pi > 0))
        throw std::invalid_argument("scan range must be positive and ordered");
    std::vector<ScanPoint> out;
    int nsteps = static_cast<int>(std::floor((tmax_pi - tmin_pi) / step_pi + 1e-9));
    for (int k = 0; k <= nsteps; ++k) {
        double tpi = tmin_pi + k * step_pi;
        out.push_back(min_wigner_single(sp, tpi * pi, outcome, a0, b0, ngrid));
    }
    return out;
}

}  // namespace membec
