#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "membec/constants.hpp"

namespace membec {

// Requested phase-space grid. When no explicit range is given the engines pick
// axes from the term centers padded by pad_widths standard widths per side;
// 6.5 widths keep the quadrature residuals below the 1e-6 mass budget.
struct GridSpec {
    int nu = 201;
    int nv = 201;
    double pad_widths = 6.5;
    bool has_range = false;
    double umin = 0, umax = 0, vmin = 0, vmax = 0;
};

struct Axes {
    Eigen::VectorXd u;
    Eigen::VectorXd v;
};

inline Eigen::VectorXd linspace(double a, double b, int n) {
    if (n < 2) throw std::invalid_argument("grid axis needs at least 2 points");
    Eigen::VectorXd x(n);
    double step = (b - a) / (n - 1);
    for (int i = 0; i < n; ++i) x[i] = a + step * i;
    x[n - 1] = b;
    return x;
}

inline double cell_area(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    return (u[1] - u[0]) * (v[1] - v[0]);
}

// Rectangle-rule mass of a grid; exact to machine precision for the Gaussian
// tails the engines produce when the axes honor the padding policy.
inline double grid_mass(const Eigen::MatrixXd& w, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    return w.sum() * cell_area(u, v);
}

// Purity tr(rho^2) = 4*pi*integral(w^2) in the scaled phase-space units.
inline double grid_purity(const Eigen::MatrixXd& w, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    return 4 * pi * w.squaredNorm() * cell_area(u, v);
}

inline double grid_mean_u(const Eigen::MatrixXd& w, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    double s = 0;
    for (int i = 0; i < w.rows(); ++i) s += u[i] * w.row(i).sum();
    return s * cell_area(u, v) / grid_mass(w, u, v);
}

}  // namespace membec
