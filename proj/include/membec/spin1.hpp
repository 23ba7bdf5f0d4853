#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>

namespace membec {

using cd = std::complex<double>;
using Vec3c = Eigen::Vector3cd;
using Mat3c = Eigen::Matrix3cd;

// Basis order is F_z = (+1, 0, -1) everywhere.
inline constexpr int spin_values[3] = {+1, 0, -1};

inline int spin_index(int m) {
    if (m < -1 || m > 1) throw std::invalid_argument("spin label must be -1, 0 or +1");
    return 1 - m;
}

inline Mat3c spin_fz() {
    Mat3c m = Mat3c::Zero();
    m(0, 0) = 1;
    m(2, 2) = -1;
    return m;
}

inline Mat3c spin_fx() {
    const double s = 1.0 / std::sqrt(2.0);
    Mat3c m = Mat3c::Zero();
    m(0, 1) = m(1, 0) = m(1, 2) = m(2, 1) = s;
    return m;
}

inline Mat3c spin_fy() {
    const cd is{0, 1.0 / std::sqrt(2.0)};
    Mat3c m = Mat3c::Zero();
    m(0, 1) = -is;
    m(1, 0) = is;
    m(1, 2) = -is;
    m(2, 1) = is;
    return m;
}

// |F_x = 1> in the F_z basis: (1/2, 1/sqrt2, 1/2).
inline Vec3c prepare_pi_half() {
    const double s = 1.0 / std::sqrt(2.0);
    Vec3c v;
    v << 0.5, s, 0.5;
    return v;
}

// F_y eigenvectors with the first nonzero component chosen real positive,
// so amplitude tables are deterministic.
inline Vec3c fy_eigenvector(int gamma) {
    const double s = 1.0 / std::sqrt(2.0);
    const cd i{0, 1};
    Vec3c v;
    switch (gamma) {
        case +1: v << 0.5, i * s, -0.5; break;
        case 0: v << s, 0, s; break;
        case -1: v << 0.5, -i * s, -0.5; break;
        default: throw std::invalid_argument("F_y eigenvalue label must be -1, 0 or +1");
    }
    return v;
}

inline Mat3c fy_projector(int gamma) {
    Vec3c v = fy_eigenvector(gamma);
    return v * v.adjoint();
}

inline Mat3c initial_bec_density() {
    Vec3c chi = prepare_pi_half();
    return chi * chi.adjoint();
}

}  // namespace membec
