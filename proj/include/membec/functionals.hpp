#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "membec/schedule.hpp"

namespace membec {

// Per-path functionals of the thermal branch sums. X and P are the
// accumulated position/momentum kicks in units of the backaction length,
// phi collects the quadratic phase left behind by the kicked evolution.
struct PathFunctionals {
    double X = 0;
    double P = 0;
    double phi = 0;
};

// Closed-form evaluation. sigma_0 = 0 is implicit; differences
// d_i = sigma_i - sigma_{i-1} enter through the rotation angles T_{i,n}.
inline PathFunctionals path_functionals(const std::vector<double>& thetas,
                                        const std::vector<int>& path) {
    const int n = static_cast<int>(path.size());
    if (thetas.size() != path.size())
        throw std::invalid_argument("path length must match schedule length");
    PathFunctionals f;
    f.X = path[static_cast<std::size_t>(n - 1)];
    // Tail sums T_{i,n} built backwards so the loop is linear in n.
    std::vector<double> tin(static_cast<std::size_t>(n));
    double acc = 0;
    for (int i = n; i >= 1; --i) {
        acc += thetas[static_cast<std::size_t>(i - 1)];
        tin[static_cast<std::size_t>(i - 1)] = acc;
    }
    for (int i = 1; i <= n; ++i) {
        double di = path[static_cast<std::size_t>(i - 1)] - (i >= 2 ? path[static_cast<std::size_t>(i - 2)] : 0);
        double si = std::sin(tin[static_cast<std::size_t>(i - 1)]);
        double ci = std::cos(tin[static_cast<std::size_t>(i - 1)]);
        f.X -= di * ci;
        f.P += di * si;
        f.phi += di * di * si * ci;
        for (int j = i + 1; j <= n; ++j) {
            double dj = path[static_cast<std::size_t>(j - 1)] - path[static_cast<std::size_t>(j - 2)];
            f.phi += 2 * di * dj * std::sin(tin[static_cast<std::size_t>(j - 1)]) * ci;
        }
    }
    return f;
}

// One recurrence step. The phi update carries cot/csc factors, so steps with
// sin(theta) = 0 are rejected; callers needing those fall back to the closed form.
inline PathFunctionals recurrence_step(const PathFunctionals& prev, int sigma_n, double theta) {
    double s = std::sin(theta), c = std::cos(theta);
    if (std::abs(s) < 1e-12)
        throw std::domain_error("phi recurrence is singular when sin(theta) = 0");
    PathFunctionals f;
    f.X = prev.X * c + prev.P * s + sigma_n * (1 - c);
    f.P = prev.P * c - prev.X * s + sigma_n * s;
    f.phi = prev.phi + (f.P * f.P + prev.P * prev.P) * (c / s) - 2 * f.P * prev.P / s;
    return f;
}

// Coherent-branch functionals: displaced-state center (a, b) after the
// kicked rotations, plus the geometric phase Theta accumulated by the kicks.
struct CoherentFunctionals {
    double a = 0;
    double b = 0;
    double Theta = 0;
};

inline CoherentFunctionals coherent_functionals(double A_tilde, const std::vector<double>& thetas,
                                                const std::vector<int>& path, double a0, double b0) {
    const int n = static_cast<int>(path.size());
    if (thetas.size() != path.size())
        throw std::invalid_argument("path length must match schedule length");
    PathFunctionals f = path_functionals(thetas, path);
    double t1n = t_accum(thetas, 1, n);
    CoherentFunctionals g;
    g.a = a0 * std::cos(t1n) + b0 * std::sin(t1n) - 0.5 * A_tilde * f.X;
    g.b = b0 * std::cos(t1n) - a0 * std::sin(t1n) - 0.5 * A_tilde * f.P;
    double t1i = 0;
    for (int i = 1; i <= n; ++i) {
        double t1im = t1i;
        t1i += thetas[static_cast<std::size_t>(i - 1)];
        double inner = 0;
        double tji = t1i, tjim = t1im;  // T_{j,i} and T_{j,i-1}, peeled as j advances
        for (int j = 1; j <= i; ++j) {
            double dj = path[static_cast<std::size_t>(j - 1)] - (j >= 2 ? path[static_cast<std::size_t>(j - 2)] : 0);
            inner += dj * (std::sin(tji) - std::sin(tjim));
            tji -= thetas[static_cast<std::size_t>(j - 1)];
            tjim = (j < i) ? tjim - thetas[static_cast<std::size_t>(j - 1)] : 0;
        }
        g.Theta += path[static_cast<std::size_t>(i - 1)] *
                   (a0 * (std::sin(t1i) - std::sin(t1im)) - b0 * (std::cos(t1i) - std::cos(t1im)) +
                    0.5 * A_tilde * inner);
    }
    return g;
}

inline CoherentFunctionals coherent_recurrence_step(const CoherentFunctionals& prev, double A_tilde,
                                                    int sigma_n, double theta) {
    double s = std::sin(theta), c = std::cos(theta);
    CoherentFunctionals g;
    g.a = prev.a * c + prev.b * s - 0.5 * sigma_n * A_tilde * (1 - c);
    g.b = prev.b * c - prev.a * s - 0.5 * sigma_n * A_tilde * s;
    g.Theta = prev.Theta + sigma_n * (prev.b - g.b);
    return g;
}

}  // namespace membec
