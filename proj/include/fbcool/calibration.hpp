#pragma once

#include "fbcool/core_model.hpp"
#include "fbcool/spectrum.hpp"

namespace fbcool {

struct CalibrationOptions {
    double band_linewidths = 20.0;  // half-width of the thermal integration band, in FWHM
    int tone_guard_bins = 2;        // bins excluded on each side of the tone bin
};

struct CalibrationResult {
    double meters_per_unit;        // multiply raw samples by this to get meters
    double tone_frequency;         // Hz
    double inferred_thermal_area;  // m^2, equals 2 x_zp^2 n_th by construction
    double raw_thermal_area;       // raw units^2, tail-corrected and floor-subtracted
    double tone_amplitude;         // m, calibrated amplitude of the coherent tone
    double background;             // raw units^2 / Hz, off-peak floor
    bool insufficient_averaging;   // record shorter than Q0 / Omega0
};

/// Sets the displacement scale of an open-loop spectrum from the area under
/// its thermal peak, <x^2> = 2 x_zp^2 n_th, and reads back the calibrated
/// amplitude of the tone at tone_frequency. Throws DomainError if the tone
/// lies within the thermal linewidth or the peak is not resolvable.
[[nodiscard]] CalibrationResult calibrate(const Spectrum& raw, double tone_frequency, const Oscillator& osc,
                                          const CalibrationOptions& opts = {},
                                          const PhysicalConstants& k = codata);

}  // namespace fbcool
