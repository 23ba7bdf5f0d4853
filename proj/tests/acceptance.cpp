// Acceptance gate. Each numbered line checks one release criterion at its
// stated tolerance; the process exit code is the number of failed lines.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "membec/membec.hpp"

using namespace membec;
namespace orc = membec::oracle;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(bool ok, const std::string& line) {
    std::printf("%s: %s\n", ok ? "PASS" : "FAIL", line.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

std::vector<Mat3c> kraus_for(const std::vector<int>& outcomes) {
    std::vector<Mat3c> k;
    for (int g : outcomes) k.push_back(fy_projector(g));
    return k;
}

double eta_of_nbar(double nbar) { return 0.5 * std::log1p(1.0 / nbar); }

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void criterion_1(const DerivedParams& d) {
    bool ok = std::abs(d.A_sa - 9e-21) <= 0.02 * 9e-21 &&
              std::abs(d.A_tilde() - 0.22) <= 0.01 &&
              std::abs(d.nbar - 8.3e4) <= 0.01 * 8.3e4;
    report(ok, fmt("1. parameter derivation (A_sa=%.4g m, A/x_zp=%.4f, nbar=%.4g)", d.A_sa,
                   d.A_tilde(), d.nbar));
}

void criterion_2(const ScaledParams& sp) {
    double p1 = outcome_probability(sp, {pi}, kraus_for({1})).real();
    double p0 = outcome_probability(sp, {pi}, kraus_for({0})).real();
    double pm = outcome_probability(sp, {pi}, kraus_for({-1})).real();
    bool ok = std::abs(p1 - 0.375) <= 1e-3 && std::abs(p0 - 0.25) <= 1e-3 &&
              std::abs(pm - 0.375) <= 1e-3;
    report(ok, fmt("2. single-measurement probabilities at theta=pi (%.4f, %.4f, %.4f)", p1, p0, pm));
}

void criterion_3(const ScaledParams& sp) {
    std::vector<double> th{pi / 2, pi / 2};
    double marg[3] = {0, 0, 0};
    for (int g2 : {1, 0, -1})
        for (int g1 : {1, 0, -1})
            marg[spin_index(g2)] += outcome_probability(sp, th, kraus_for({g1, g2})).real();
    bool ok = std::abs(marg[0] - 0.344) <= 1e-3 && std::abs(marg[1] - 0.312) <= 1e-3 &&
              std::abs(marg[2] - 0.344) <= 1e-3;
    report(ok, fmt("3. two-measurement marginals over the first outcome (%.4f, %.4f, %.4f)",
                   marg[0], marg[1], marg[2]));
}

void criterion_4() {
    std::mt19937_64 rng(20260816);
    auto urand = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };
    double worst_p = 0, worst_rho = 0, worst_w = 0, worst_amp = 0;

    for (int trial = 0; trial < 20; ++trial) {
        bool thermal = trial % 2 == 0;
        std::size_t n = 1 + rng() % 3;
        double At = 0, OmL = 0, nbar = 0, a0 = 0, b0 = 0, p_eng = 0;
        std::vector<double> thetas;
        std::vector<int> outcomes;
        ScaledParams sp;
        std::vector<CoherentBranch> branches;

        for (int attempt = 0; attempt < 50; ++attempt) {
            thetas.clear();
            outcomes.clear();
            for (std::size_t i = 0; i < n; ++i) {
                thetas.push_back(urand(0.3, 3.0));
                outcomes.push_back(static_cast<int>(rng() % 3) - 1);
            }
            At = urand(0.2, 1.5);
            OmL = urand(-3.0, 3.0);
            if (thermal) {
                nbar = urand(0.3, 5.0);
                sp = ScaledParams::make(At, eta_of_nbar(nbar), OmL);
                p_eng = outcome_probability(sp, thetas, kraus_for(outcomes)).real();
            } else {
                a0 = urand(-2.0, 2.0);
                b0 = urand(-2.0, 2.0);
                sp = ScaledParams{At, OmL, 1.0, 1.0};
                branches = evolve_coherent(sp, thetas, kraus_for(outcomes), a0, b0);
                p_eng = coherent_norm(branches).real();
            }
            if (p_eng >= 1e-3) break;
        }
        auto kraus = kraus_for(outcomes);
        GridSpec gs;
        gs.nu = gs.nv = 33;

        if (thermal) {
            auto res = orc::run_thermal(At, nbar, OmL, thetas, outcomes);
            worst_p = std::max(worst_p, std::abs(res.prob - p_eng));

            Eigen::VectorXd uf(3), ui(3);
            uf << 0.3, -1.1, 0.0;
            ui << -0.7, 0.5, 0.0;
            Eigen::MatrixXcd rho_num = orc::position_density(res.rho_mem, uf, ui);
            for (int i = 0; i < 3; ++i) {
                Eigen::VectorXd a(1), b(1);
                a[0] = uf[i];
                b[0] = ui[i];
                cd ref = rho_position(sp, thetas, kraus, a, b)(0, 0);
                worst_rho = std::max(worst_rho, std::abs(rho_num(i, i) - ref));
            }

            auto ax = thermal_axes(pair_terms(sp, thetas, kraus), sp, gs);
            auto w_eng = wigner_post(sp, thetas, kraus, ax.u, ax.v, /*normalize=*/false);
            Eigen::MatrixXd w_num = orc::wigner_numeric(res.rho_mem, ax.u, ax.v, sp.ch);
            double peak = w_eng.w.cwiseAbs().maxCoeff();
            worst_w = std::max(worst_w, (w_num - w_eng.w).cwiseAbs().maxCoeff() / peak);
        } else {
            auto res = orc::run_coherent(At, a0, b0, OmL, thetas, outcomes);
            worst_p = std::max(worst_p, std::abs(res.prob - p_eng));

            for (int g : {1, 0, -1}) {
                Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(res.n_max);
                for (const auto& br : branches)
                    if (br.final_g == g)
                        psi += br.amp * orc::coherent_vector(res.n_max, cd(br.a, br.b));
                worst_amp = std::max(
                    worst_amp, (psi - res.sector[static_cast<std::size_t>(spin_index(g))])
                                   .cwiseAbs()
                                   .maxCoeff());
            }

            auto ax = coherent_axes(branches, gs);
            auto w_eng = wigner_coherent(branches, ax.u, ax.v, /*normalize=*/false);
            Eigen::MatrixXd w_num = orc::wigner_numeric(res.rho_mem, ax.u, ax.v);
            double peak = w_eng.w.cwiseAbs().maxCoeff();
            worst_w = std::max(worst_w, (w_num - w_eng.w).cwiseAbs().maxCoeff() / peak);
        }
    }
    bool ok = worst_p <= 1e-8 && worst_rho <= 1e-8 && worst_amp <= 1e-8 && worst_w <= 1e-6;
    report(ok, fmt("4. oracle equivalence over 20 randomized schedules "
                   "(prob %.2g, rho %.2g, amps %.2g, wigner %.2g of peak)",
                   worst_p, worst_rho, worst_amp, worst_w));
}

void criterion_5() {
    ScaledParams sp = ScaledParams::make(0.9, eta_of_nbar(1.5), 1.7);
    std::vector<double> th{2 * pi, 2 * pi};
    Eigen::VectorXd ug = linspace(-10.0, 10.0, 161);
    double du = ug[1] - ug[0];

    Eigen::MatrixXcd kernel(ug.size(), ug.size());
    for (Eigen::Index i = 0; i < ug.size(); ++i)
        for (Eigen::Index j = 0; j < ug.size(); ++j) {
            double s = ug[i] + ug[j], m = ug[i] - ug[j];
            kernel(i, j) = std::sqrt(sp.th / (2 * pi)) *
                           std::exp(-0.125 * (s * s * sp.th + m * m * sp.ch));
        }

    double worst_analytic = 0, worst_oracle = 0;
    for (int g1 : {1, 0, -1})
        for (int g2 : {1, 0, -1}) {
            auto kraus = kraus_for({g1, g2});
            double p = outcome_probability(sp, th, kraus).real();
            Eigen::MatrixXcd diff = rho_position(sp, th, kraus, ug, ug) / p - kernel;
            worst_analytic = std::max(worst_analytic, orc::trace_norm_hermitian(diff) * du);

            auto res = orc::run_thermal(0.9, 1.5, 1.7, th, {g1, g2});
            Eigen::VectorXd boltz(res.n_max);
            double q = 1.5 / 2.5;
            for (int k = 0; k < res.n_max; ++k) boltz[k] = std::pow(q, k);
            boltz /= boltz.sum();
            Eigen::MatrixXcd fdiff = res.rho_mem / res.prob;
            fdiff -= Eigen::MatrixXcd(boltz.cast<cd>().asDiagonal());
            worst_oracle = std::max(worst_oracle, orc::trace_norm_hermitian(fdiff));
        }
    bool ok = worst_analytic <= 1e-10 && worst_oracle <= 1e-8;
    report(ok, fmt("5. full-period nulling over all 9 sequences "
                   "(trace norm: analytic %.2g, oracle %.2g)",
                   worst_analytic, worst_oracle));
}

void criterion_6() {
    std::mt19937_64 rng(7000003);
    auto urand = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 1 + rng() % 6;
        std::vector<double> thetas;
        std::vector<int> path;
        for (std::size_t i = 0; i < n; ++i) {
            double t = urand(0.1, 3.0);
            while (std::abs(std::sin(t)) < 0.05) t = urand(0.1, 3.0);
            thetas.push_back(t);
            path.push_back(static_cast<int>(rng() % 3) - 1);
        }
        double At = urand(0.1, 1.5), a0 = urand(-2.0, 2.0), b0 = urand(-2.0, 2.0);

        PathFunctionals f;
        CoherentFunctionals g{a0, b0, 0};
        std::vector<double> prefix;
        for (std::size_t i = 0; i < n; ++i) {
            f = recurrence_step(f, path[i], thetas[i]);
            g = coherent_recurrence_step(g, At, path[i], thetas[i]);
            prefix.push_back(thetas[i]);
            std::vector<int> sub(path.begin(), path.begin() + static_cast<long>(i) + 1);
            auto fc = path_functionals(prefix, sub);
            auto gc = coherent_functionals(At, prefix, sub, a0, b0);
            worst = std::max({worst, std::abs(f.X - fc.X), std::abs(f.P - fc.P),
                              std::abs(f.phi - fc.phi), std::abs(g.a - gc.a),
                              std::abs(g.b - gc.b), std::abs(g.Theta - gc.Theta)});
        }
    }
    report(worst <= 1e-10,
           fmt("6. recurrence vs closed form over 1000 random schedules (max dev %.2g)", worst));
}

void criterion_7(const ScaledParams& base) {
    GridSpec gs;
    gs.nu = gs.nv = 201;

    auto kraus1 = kraus_for({1});
    std::vector<double> th1{pi};
    auto ax1 = thermal_axes(pair_terms(base, th1, kraus1), base, gs);
    auto r1 = wigner_post(base, th1, kraus1, ax1.u, ax1.v);
    double mass1 = grid_mass(r1.w, ax1.u, ax1.v);

    ScaledParams sp2 = ScaledParams::make(0.9, eta_of_nbar(1.5), 1.7);
    auto kraus2 = kraus_for({1, 0});
    std::vector<double> th2{1.1, 2.3};
    auto ax2 = thermal_axes(pair_terms(sp2, th2, kraus2), sp2, gs);
    auto r2 = wigner_post(sp2, th2, kraus2, ax2.u, ax2.v);
    double mass2 = grid_mass(r2.w, ax2.u, ax2.v);

    ScaledParams sp3{0.7, -1.3, 1.0, 1.0};
    auto kraus3 = kraus_for({0, 1});
    auto branches = evolve_coherent(sp3, {1.1, 0.7}, kraus3, 1.1, 0.4);
    auto ax3 = coherent_axes(branches, gs);
    auto r3 = wigner_coherent(branches, ax3.u, ax3.v);
    double mass3 = grid_mass(r3.w, ax3.u, ax3.v);
    double purity3 = grid_purity(r3.w, ax3.u, ax3.v);

    bool ok = std::abs(mass1 - 1) <= 1e-6 && std::abs(mass2 - 1) <= 1e-6 &&
              std::abs(mass3 - 1) <= 1e-6 && std::abs(purity3 - 1) <= 1e-6 &&
              r1.imag_residue <= 1e-10 && r2.imag_residue <= 1e-10 && r3.imag_residue <= 1e-10;
    report(ok, fmt("7. emitted-grid hygiene (mass-1: %.2g, %.2g, %.2g; purity-1: %.2g; "
                   "imag residue max %.2g)",
                   mass1 - 1, mass2 - 1, mass3 - 1, purity3 - 1,
                   std::max({r1.imag_residue, r2.imag_residue, r3.imag_residue})));
}

void criterion_8(const ScaledParams& base) {
    auto single = min_wigner_single(base, pi, 0, 1.0, 1.0, 201);
    report(single.min_w < 0,
           fmt("8a. unit coherent state, F_y=0 at t1=pi/omega: min W = %.4g < 0", single.min_w));

    auto t0 = Clock::now();
    auto ptsA = negativity_scan(base, 1.0, 1.0, 0, 0.40, 2.20, 0.02, 201);
    double dtA = seconds_since(t0);
    double first = -1, last = -1;
    for (const auto& p : ptsA)
        if (p.negative()) {
            if (first < 0) first = p.t_over_pi;
            last = p.t_over_pi;
        }
    bool okA = first > 0 && std::abs(first - 0.6) <= 0.1 + 1e-9 &&
               std::abs(last - 1.8) <= 0.1 + 1e-9 && dtA < 60;
    report(okA, fmt("8b. negativity window boundaries %.2fpi..%.2fpi vs 0.6pi/1.8pi "
                    "(+-0.1pi, scan %.1fs)",
                    first, last, dtA));

    t0 = Clock::now();
    auto ptsB = negativity_scan(base, 50 * std::sqrt(2.0), 0.0, 0, 0.55, 0.95, 0.02, 241);
    double dtB = seconds_since(t0);
    double firstB = -1, lastB = -1;
    for (const auto& p : ptsB)
        if (p.negative()) {
            if (firstB < 0) firstB = p.t_over_pi;
            lastB = p.t_over_pi;
        }
    bool okB = firstB > 0 && firstB >= 0.75 - 1e-9 && lastB <= 0.81 + 1e-9 && dtB < 60;
    report(okB, fmt("8c. large-amplitude window %.2fpi..%.2fpi within [0.75, 0.81]pi "
                    "(scan %.1fs)",
                    firstB, lastB, dtB));
}

void criterion_9(const ScaledParams& base) {
    double ref[3] = {8.0909e-7, 1.590336e-6, 1.590366e-6};
    double mult[3] = {0.01, 0.1, 1.0};
    double f[3];
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
        ScaledParams sp = base;
        sp.At = mult[i] * base.At;
        f[i] = fringe_amplitude(sp, pi, 1);
        if (std::abs(f[i] - ref[i]) > 5e-4 * ref[i]) ok = false;
    }
    ok = ok && f[0] < f[1] && f[1] < f[2];
    report(ok, fmt("9. fringe amplitude grows with coupling (%.6g < %.6g < %.6g)", f[0], f[1],
                   f[2]));
}

void criterion_10(const ScaledParams& base, const DerivedParams& d) {
    std::vector<double> th(4, pi);
    auto kraus = kraus_for({0, 1, -1, 1});
    GridSpec gs;
    gs.nu = gs.nv = 201;

    auto t0 = Clock::now();
    auto ax = thermal_axes(pair_terms(base, th, kraus), base, gs);
    auto res = wigner_post(base, th, kraus, ax.u, ax.v);
    double dt = seconds_since(t0);

    std::string csv1 = io::wigner_csv(ax.u, ax.v, res.w, d);
    auto res2 = wigner_post(base, th, kraus, ax.u, ax.v);
    std::string csv2 = io::wigner_csv(ax.u, ax.v, res2.w, d);

    bool ok = dt < 10 && csv1 == csv2;
    report(ok, fmt("10. four-measurement 201x201 run in %.2fs, CSV byte-identical: %s", dt,
                   csv1 == csv2 ? "yes" : "no"));
}

}  // namespace

int main() {
    PhysicalConstants c;
    DerivedParams d = derive_params(c, ExperimentParams{});
    ScaledParams base = ScaledParams::from(d);

    auto guard = [&](const char* label, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            report(false, std::string(label) + ". unexpected error: " + e.what());
        }
    };

    guard("1", [&] { criterion_1(d); });
    guard("2", [&] { criterion_2(base); });
    guard("3", [&] { criterion_3(base); });
    guard("4", [&] { criterion_4(); });
    guard("5", [&] { criterion_5(); });
    guard("6", [&] { criterion_6(); });
    guard("7", [&] { criterion_7(base); });
    guard("8", [&] { criterion_8(base); });
    guard("9", [&] { criterion_9(base); });
    guard("10", [&] { criterion_10(base, d); });

    std::printf("RESULT: %d failing line(s)\n", failures);
    return failures;
}
