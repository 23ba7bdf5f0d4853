#pragma once

#include <stdexcept>

namespace membec {

// Inputs for the dispersive optical probe model. The polynomial coefficients
// express the detected intensity in terms of low spin moments along the
// measured axis; column density and detuning enter only through the prefactor.
struct PhaseContrastInput {
    double n_col = 0;              // atomic column density times cross-section scale
    double sigma0 = 0;             // resonant cross-section
    double gamma_over_2Delta = 0;  // linewidth over twice the probe detuning
    double pc_a0 = 0;
    double pc_a1 = 0;
    double pc_a2 = 0;
    double Fy_mean = 0;
    double Fy2_mean = 0;
};

// Relative detected signal: unity plus a small dispersive shift linear in the
// spin moments, valid to first order in the optical phase.
inline double phase_contrast_signal(const PhaseContrastInput& in) {
    double shift = in.pc_a0 + in.pc_a1 * in.Fy_mean + in.pc_a2 * in.Fy2_mean;
    return 1.0 + 2.0 * in.n_col * in.sigma0 * in.gamma_over_2Delta * shift;
}

// Smallest resolvable displacement of the field source given a field
// sensitivity (T) and the local field gradient (T/m).
inline double field_to_position_sensitivity(double field_sensitivity, double gradient) {
    if (!(gradient > 0)) throw std::invalid_argument("field gradient must be positive");
    return field_sensitivity / gradient;
}

}  // namespace membec
