#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fbcool/core_model.hpp"
#include "fbcool/spectrum.hpp"

namespace fbcool {

/// Inputs held fixed during the fit.
struct FixedInputs {
    double n_th;
    double n_imp;
    double gamma0;  // rad/s
    double phase;   // rad, loop lag at resonance
};

struct FitOptions {
    double fit_linewidths = 10.0;   // half-width of the fit band in damped FWHM
    double max_detuning = 0.05;     // band is never wider than this fraction of f0
    bool fit_floor = false;         // fit the imprecision floor jointly with g
    InLoopForm in_loop = InLoopForm::exact;
    double tolerance = 1e-7;        // on ln(1 + g)
    int max_iterations = 60;
};

struct FitResult {
    double gain;                   // fitted g >= 0
    double occupancy;              // mean_phonon at the fitted g
    double effective_temperature;  // K
    double residual;               // reduced chi-square (about 1 for a good fit)
    bool valid;                    // peak height >= 2x floor and FWHM >= 2 resolution bandwidths
    bool clipped;                  // optimum at g = 0 boundary
    double floor;                  // m^2/Hz imprecision floor used (fitted when fit_floor)
    FixedInputs fixed_inputs;
    int iterations;
    std::size_t bins;
    double band_low, band_high;    // Hz
};

/// Weighted least squares over g of the in-loop closed-loop spectrum (plus
/// the flat floor) against a calibrated y spectrum. Weights are 1/model^2,
/// iterated to self-consistency. Throws FitError with the last iterate on
/// non-convergence.
[[nodiscard]] FitResult fit_closed_loop(const Spectrum& spectrum, const Oscillator& osc, const FixedInputs& fixed,
                                        const FitOptions& opts = {}, const PhysicalConstants& k = codata);

/// Fixed inputs derived from the oscillator and readout: n_th (plus back-action
/// quanta if requested), n_imp from the total imprecision.
[[nodiscard]] FitResult fit_closed_loop(const Spectrum& spectrum, const Oscillator& osc, const Measurement& meas,
                                        double phase, const FitOptions& opts = {}, const ModelOptions& model = {},
                                        const PhysicalConstants& k = codata);

[[nodiscard]] FixedInputs fixed_inputs_from(const Oscillator& osc, const Measurement& meas, double phase,
                                            const ModelOptions& model = {}, const PhysicalConstants& k = codata);

/// Model spectrum (m^2/Hz) of a fit result at the given frequencies (Hz).
[[nodiscard]] std::vector<double> fit_model(const FitResult& fit, const Oscillator& osc,
                                            std::span<const double> frequencies,
                                            InLoopForm form = InLoopForm::exact,
                                            const PhysicalConstants& k = codata);

}  // namespace fbcool
