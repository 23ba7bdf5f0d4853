#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "membec/coherent.hpp"

using namespace membec;
using Catch::Approx;

namespace {

std::vector<Mat3c> kraus_for(const std::vector<int>& outcomes) {
    std::vector<Mat3c> k;
    for (int g : outcomes) k.push_back(fy_projector(g));
    return k;
}

const ScaledParams SP{0.7, -1.3, 1.0, 1.0};
const std::vector<double> TH{1.1, 0.7};
const std::vector<int> OUT{0, 1};

ScaledParams baseline_sp() {
    PhysicalConstants c;
    return ScaledParams::from(derive_params(c, ExperimentParams{}));
}

}  // namespace

TEST_CASE("branch evolution reference point") {
    auto branches = evolve_coherent(SP, TH, kraus_for(OUT), 1.1, 0.4);
    CHECK(branches.size() == 12);

    cd norm = coherent_norm(branches);
    CHECK(norm.real() == Approx(0.054268666033865355).epsilon(1e-12));
    CHECK(std::abs(norm.imag()) < 1e-15);

    bool found = false;
    for (const auto& br : branches) {
        if (br.path == std::vector<int>{1, -1} && br.final_g == 1) {
            found = true;
            CHECK(br.amp.real() == Approx(-0.047443788578241886).epsilon(1e-12));
            CHECK(br.amp.imag() == Approx(0.040685831997675594).epsilon(1e-12));
            CHECK(br.a == Approx(-0.12529351605284014).epsilon(1e-12));
            CHECK(br.b == Approx(-1.0520075215842339).epsilon(1e-12));
            CHECK(br.Theta == Approx(1.5696169254534669).epsilon(1e-12));
        }
    }
    CHECK(found);
}

TEST_CASE("branch packets carry the coherent functionals of their path") {
    auto branches = evolve_coherent(SP, TH, kraus_for(OUT), 1.1, 0.4);
    for (const auto& br : branches) {
        auto f = coherent_functionals(SP.At, TH, br.path, 1.1, 0.4);
        CHECK(br.a == Approx(f.a).margin(1e-13));
        CHECK(br.b == Approx(f.b).margin(1e-13));
        CHECK(br.Theta == Approx(f.Theta).margin(1e-13));
    }
}

TEST_CASE("distinct packets stay within the path budget") {
    auto count_packets = [](const std::vector<CoherentBranch>& branches) {
        std::set<std::vector<int>> paths;
        for (const auto& br : branches) paths.insert(br.path);
        return paths.size();
    };
    CHECK(count_packets(evolve_coherent(SP, TH, kraus_for(OUT), 1.1, 0.4)) <= 9);
    std::vector<double> th3{1.1, 0.7, 2.3};
    CHECK(count_packets(evolve_coherent(SP, th3, kraus_for({1, 0, -1}), 0.3, -0.2)) <= 27);
}

TEST_CASE("sequence probabilities sum to one") {
    double sum = 0;
    for (const auto& seq : enumerate_paths(2))
        sum += coherent_norm(evolve_coherent(SP, TH, kraus_for(seq), 1.1, 0.4)).real();
    CHECK(sum == Approx(1.0).margin(1e-10));
}

TEST_CASE("Wigner grid reference point and purity") {
    auto branches = evolve_coherent(SP, TH, kraus_for(OUT), 1.1, 0.4);
    Eigen::VectorXd u1(1), v1(1);
    u1[0] = 0.45;
    v1[0] = -1.15;
    auto pt = wigner_coherent(branches, u1, v1);
    CHECK(pt.w(0, 0) == Approx(0.047995285314955984).epsilon(1e-12));

    GridSpec gs;
    gs.nu = gs.nv = 201;
    auto ax = coherent_axes(branches, gs);
    auto res = wigner_coherent(branches, ax.u, ax.v);
    CHECK(res.prob == Approx(0.054268666033865355).epsilon(1e-12));
    CHECK(grid_mass(res.w, ax.u, ax.v) == Approx(1.0).margin(1e-6));
    CHECK(grid_purity(res.w, ax.u, ax.v) == Approx(1.0).margin(1e-6));
    CHECK(res.imag_residue < 1e-10);
}

TEST_CASE("no measurement leaves a displaced vacuum Gaussian") {
    auto branches = evolve_coherent(SP, {}, {}, 1.3, -0.4);
    CHECK(branches.size() == 3);
    GridSpec gs;
    gs.nu = gs.nv = 161;
    auto ax = coherent_axes(branches, gs);
    auto res = wigner_coherent(branches, ax.u, ax.v);
    CHECK(res.prob == Approx(1.0).margin(1e-12));
    CHECK(grid_mass(res.w, ax.u, ax.v) == Approx(1.0).margin(1e-6));
    CHECK(res.w.minCoeff() >= -1e-14);

    Eigen::Index imax, jmax;
    res.w.maxCoeff(&imax, &jmax);
    CHECK(ax.u[imax] == Approx(2 * 1.3).margin(ax.u[1] - ax.u[0]));
    CHECK(ax.v[jmax] == Approx(2 * -0.4).margin(ax.v[1] - ax.v[0]));
    CHECK(res.w(imax, jmax) == Approx(1 / (2 * pi)).epsilon(1e-2));
}

TEST_CASE("zero backaction keeps the state classical") {
    ScaledParams sp{0.0, -1.3, 1.0, 1.0};
    auto branches = evolve_coherent(sp, TH, kraus_for(OUT), 1.1, 0.4);

    // membrane factor identical across branches
    for (const auto& br : branches) {
        CHECK(br.a == Approx(branches.front().a).margin(1e-14));
        CHECK(br.b == Approx(branches.front().b).margin(1e-14));
    }

    // spin marginals match pure Larmor precession
    Vec3c v = prepare_pi_half();
    for (std::size_t step = 0; step < TH.size(); ++step) {
        Mat3c rot = Mat3c::Zero();
        for (int idx = 0; idx < 3; ++idx) {
            double sig = spin_values[idx];
            rot(idx, idx) = std::exp(cd(0, -TH[step] * (sp.OmL * sig + 0.5)));
        }
        v = fy_projector(OUT[step]) * rot * v;
    }
    CHECK(coherent_norm(branches).real() == Approx(v.squaredNorm()).epsilon(1e-12));

    // and the Wigner function of a coherent state is non-negative
    GridSpec gs;
    gs.nu = gs.nv = 121;
    auto ax = coherent_axes(branches, gs);
    auto res = wigner_coherent(branches, ax.u, ax.v);
    CHECK(res.w.minCoeff() >= -1e-13);
}

TEST_CASE("full-period measurement leaves the packet in place") {
    auto branches = evolve_coherent(SP, {2 * pi}, kraus_for({0}), 1.1, 0.4);
    for (const auto& br : branches) {
        CHECK(br.a == Approx(1.1).margin(1e-12));
        CHECK(br.b == Approx(0.4).margin(1e-12));
    }
    GridSpec gs;
    gs.nu = gs.nv = 121;
    auto ax = coherent_axes(branches, gs);
    auto res = wigner_coherent(branches, ax.u, ax.v);
    CHECK(res.w.minCoeff() >= -1e-13);
    CHECK(res.w.maxCoeff() == Approx(1 / (2 * pi)).epsilon(1e-2));
}

TEST_CASE("cold thermal engine and coherent engine agree at the ground state") {
    ScaledParams warm = ScaledParams::make(0.9, 25.0, 1.7);
    ScaledParams pure{0.9, 1.7, 1.0, 1.0};
    std::vector<double> th{1.1};
    for (int g : {1, 0, -1}) {
        auto kraus = kraus_for({g});
        double p_thermal = outcome_probability(warm, th, kraus).real();
        auto branches = evolve_coherent(pure, th, kraus, 0.0, 0.0);
        double p_coherent = coherent_norm(branches).real();
        CHECK(std::abs(p_thermal - p_coherent) < 1e-8);

        Eigen::VectorXd u = linspace(-5.0, 5.0, 41), v = linspace(-5.0, 5.0, 41);
        auto wt = wigner_post(warm, th, kraus, u, v);
        auto wc = wigner_coherent(branches, u, v);
        CHECK((wt.w - wc.w).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("single measurement can make the state non-classical") {
    auto pt = min_wigner_single(baseline_sp(), pi, 0, 1.0, 1.0, 201);
    // Larmor phases at these parameters are ~1400 rad, so libm argument
    // reduction limits the reproducible precision of the frozen value.
    CHECK(pt.min_w == Approx(-0.10836422901377921).epsilon(1e-9));
    CHECK(pt.prob == Approx(0.030324506127882178).epsilon(1e-9));
    CHECK(pt.negative());
    CHECK(pt.min_w < 0);
}

TEST_CASE("negativity scan stays positive without backaction") {
    ScaledParams sp = baseline_sp();
    sp.At = 0;
    auto pts = negativity_scan(sp, 1.0, 1.0, 0, 0.5, 1.5, 0.25, 81);
    for (const auto& pt : pts) {
        CHECK_FALSE(pt.negative());
        CHECK(pt.min_w >= -1e-12);
    }
    CHECK_THROWS_AS(negativity_scan(sp, 1.0, 1.0, 0, -0.5, 1.5, 0.25, 81), std::invalid_argument);
}

TEST_CASE("repeated measurements keep purity while deepening structure") {
    std::vector<double> th(4, pi);
    std::vector<int> out{0, 1, -1, 1};
    auto branches = evolve_coherent(baseline_sp(), th, kraus_for(out), 1.0, 1.0);
    GridSpec gs;
    gs.nu = gs.nv = 201;
    auto ax = coherent_axes(branches, gs);
    auto res = wigner_coherent(branches, ax.u, ax.v);
    CHECK(grid_mass(res.w, ax.u, ax.v) == Approx(1.0).margin(1e-6));
    CHECK(grid_purity(res.w, ax.u, ax.v) == Approx(1.0).margin(1e-6));
    CHECK(res.imag_residue < 1e-10);
    CHECK(res.w.minCoeff() < negativity_threshold);

    auto one = min_wigner_single(baseline_sp(), pi, 0, 1.0, 1.0, 201);
    CHECK(res.w.minCoeff() < one.min_w);
}

TEST_CASE("branch cap rejects oversized schedules") {
    std::vector<double> th(7, 1.0);
    std::vector<int> out(7, 0);
    CHECK_THROWS_AS(evolve_coherent(SP, th, kraus_for(out), 0.0, 0.0), std::length_error);
}
