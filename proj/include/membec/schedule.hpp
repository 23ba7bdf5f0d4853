#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "membec/spin1.hpp"

namespace membec {

// A measurement schedule: free-evolution intervals (as phase angles
// theta_i = omega_m * t_i) each followed by a projective F_y measurement
// with the recorded outcome label.
struct Schedule {
    std::vector<double> thetas;
    std::vector<int> outcomes;

    std::size_t size() const { return thetas.size(); }

    void validate() const {
        if (thetas.empty()) throw std::invalid_argument("schedule must contain at least one interval");
        if (thetas.size() != outcomes.size())
            throw std::invalid_argument("schedule needs one outcome label per interval");
        for (double t : thetas)
            if (!(t > 0)) throw std::invalid_argument("intervals must be positive");
        for (int g : outcomes) spin_index(g);
    }

    std::vector<Mat3c> kraus_ops() const {
        std::vector<Mat3c> k;
        k.reserve(outcomes.size());
        for (int g : outcomes) k.push_back(fy_projector(g));
        return k;
    }
};

// Accumulated rotation angle T_{i,j} = sum_{k=i..j} theta_k (1-based), zero for i > j.
inline double t_accum(const std::vector<double>& thetas, int i, int j) {
    if (i < 1 || j > static_cast<int>(thetas.size()))
        throw std::out_of_range("interval index out of range");
    double s = 0;
    for (int k = i; k <= j; ++k) s += thetas[static_cast<std::size_t>(k - 1)];
    return s;
}

// Lexicographic spin paths over sigma in (+1, 0, -1), sigma_1 most significant.
inline std::vector<std::vector<int>> enumerate_paths(std::size_t n) {
    std::size_t count = 1;
    for (std::size_t i = 0; i < n; ++i) count *= 3;
    std::vector<std::vector<int>> paths(count, std::vector<int>(n));
    for (std::size_t idx = 0; idx < count; ++idx) {
        std::size_t rem = idx;
        for (std::size_t pos = n; pos-- > 0;) {
            paths[idx][pos] = spin_values[rem % 3];
            rem /= 3;
        }
    }
    return paths;
}

}  // namespace membec
