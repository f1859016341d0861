#include "fbcool/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fbcool/errors.hpp"

namespace fbcool {

CalibrationResult calibrate(const Spectrum& raw, double tone_frequency, const Oscillator& osc,
                            const CalibrationOptions& opts, const PhysicalConstants& k) {
    osc.validate();
    if (raw.psd.size() < 16 || !(raw.bin_width > 0.0)) throw DomainError("calibrate: empty spectrum");
    if (!(opts.band_linewidths > 1.0)) throw DomainError("calibrate: band_linewidths must be > 1");
    const double f0 = osc.frequency();
    const double fwhm = osc.gamma0() / two_pi;
    const double df = raw.bin_width;
    if (std::abs(tone_frequency - f0) <= std::max(fwhm, raw.resolution_bandwidth))
        throw DomainError("calibrate: tone lies within the thermal linewidth");

    // Integration half-width; keep at least a few resolution bandwidths so an
    // unresolved peak is still captured.
    const double half = std::max(opts.band_linewidths * fwhm, 8.0 * raw.resolution_bandwidth);
    const double nyquist = raw.frequencies.back();
    if (f0 + 3.0 * half >= nyquist || f0 - 3.0 * half <= 0.0)
        throw DomainError("calibrate: thermal band does not fit inside the spectrum");

    const std::size_t tone_bin = raw.bin(tone_frequency);
    const auto guard = static_cast<std::size_t>(std::max(opts.tone_guard_bins, 0));
    auto is_tone = [&](std::size_t i) { return i + guard >= tone_bin && i <= tone_bin + guard; };

    // Background from two flanking bands outside the integration window, fitted
    // jointly with the Lorentzian tail that still reaches them.
    auto lorentz = [&](double f) { return (fwhm / two_pi) / ((f - f0) * (f - f0) + 0.25 * fwhm * fwhm); };
    double s1 = 0, sl = 0, sll = 0, sp = 0, slp = 0;
    for (std::size_t i = 0; i < raw.psd.size(); ++i) {
        const double d = std::abs(raw.frequencies[i] - f0);
        if (d >= 2.0 * half && d <= 3.0 * half && !is_tone(i)) {
            const double l = lorentz(raw.frequencies[i]);
            s1 += 1.0, sl += l, sll += l * l, sp += raw.psd[i], slp += l * raw.psd[i];
        }
    }
    if (s1 < 4.0) throw DomainError("calibrate: no bins available for the background estimate");
    const double det = s1 * sll - sl * sl;
    const double background = det > 0.0 ? (sll * sp - sl * slp) / det : sp / s1;

    // Thermal area with the tone bins replaced by the mean of their neighbours.
    const std::size_t lo = raw.bin(f0 - half), hi = raw.bin(f0 + half);
    double area = 0.0;
    const double tone_fill = [&] {
        double s = 0.0;
        int n = 0;
        for (std::size_t off = guard + 1; off <= guard + 3; ++off) {
            if (tone_bin >= off) {
                s += raw.psd[tone_bin - off];
                ++n;
            }
            if (tone_bin + off < raw.psd.size()) {
                s += raw.psd[tone_bin + off];
                ++n;
            }
        }
        return n ? s / n : background;
    }();
    for (std::size_t i = lo; i <= hi; ++i) area += (is_tone(i) ? tone_fill : raw.psd[i]) - background;
    area *= df;
    // Lorentzian tails beyond the band.
    const double captured = (2.0 / pi) * std::atan(2.0 * (static_cast<double>(hi - lo) + 1.0) * df * 0.5 / fwhm);
    area /= captured;
    if (!(area > 0.0)) throw DomainError("calibrate: no thermal peak above the background");

    const double x_zp = zero_point_motion(osc, k);
    const double target = 2.0 * x_zp * x_zp * thermal_occupation(osc, k);

    CalibrationResult r{};
    r.meters_per_unit = std::sqrt(target / area);
    r.tone_frequency = tone_frequency;
    r.inferred_thermal_area = target;
    r.raw_thermal_area = area;
    r.background = background;
    r.insufficient_averaging = raw.duration < osc.q0 / osc.omega0;

    // Tone power: the guarded bins minus the local level around them.
    double tone_power = 0.0;
    for (std::size_t i = tone_bin >= guard ? tone_bin - guard : 0; i <= std::min(tone_bin + guard, raw.psd.size() - 1);
         ++i)
        tone_power += raw.psd[i] - tone_fill;
    tone_power *= df;
    r.tone_amplitude = tone_power > 0.0 ? std::sqrt(2.0 * tone_power) * r.meters_per_unit : 0.0;
    return r;
}

}  // namespace fbcool
