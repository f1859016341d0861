#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "fbcool/core_model.hpp"

namespace fbcool {

enum class Window {
    rectangular,
    hann,            // ENBW 1.5 bins
    blackman_harris, // 4-term, ENBW 2.0 bins
};

[[nodiscard]] std::string_view window_name(Window w) noexcept;
[[nodiscard]] Window window_from_name(std::string_view name);
/// Periodic window of length n (DFT-even), so that overlapped segments tile.
[[nodiscard]] std::vector<double> make_window(Window w, std::size_t n);

/// Single-sided PSD estimate. psd integrates to the signal variance over
/// [0, Nyquist]: sum(psd) * bin_width ~ <s^2>.
struct Spectrum {
    std::vector<double> frequencies;   // Hz, bin centers k * bin_width
    std::vector<double> psd;           // units^2 / Hz
    double resolution_bandwidth = 0.0; // Hz, equivalent noise bandwidth of the window
    double averages = 0.0;             // effective number of independent averages
    double bin_width = 0.0;            // Hz
    double sample_rate = 0.0;          // Hz
    double duration = 0.0;             // s of data consumed
    std::size_t segments = 0;
    std::size_t segment_length = 0;
    double overlap = 0.0;
    Window window = Window::hann;

    [[nodiscard]] std::size_t size() const noexcept { return psd.size(); }
    /// Nearest bin to freq (clamped); bins are uniformly spaced from frequencies[0].
    [[nodiscard]] std::size_t bin(double freq) const noexcept;
    /// Sum of psd * bin_width over bins whose center lies in [f_lo, f_hi].
    [[nodiscard]] double integrate(double f_lo, double f_hi) const noexcept;
    /// Mean psd over bins with center in [f_lo, f_hi]; NaN if the band is empty.
    [[nodiscard]] double band_mean(double f_lo, double f_hi) const noexcept;
    /// Multiplies psd by factor (e.g. a calibration squared).
    void scale(double factor) noexcept;
};

struct WelchOptions {
    std::size_t segment_length = 4096;
    Window window = Window::hann;
    double overlap = 0.5;  // [0, 0.9]

    void validate() const;
};

/// Streaming Welch estimator: feed samples in any block sizes; segments are
/// formed exactly as in the batch estimator so the result does not depend on
/// how the record was chunked.
class WelchAccumulator {
public:
    WelchAccumulator(double sample_rate, const WelchOptions& opts);
    ~WelchAccumulator();
    WelchAccumulator(WelchAccumulator&&) noexcept;
    WelchAccumulator& operator=(WelchAccumulator&&) noexcept;

    void push(std::span<const double> samples);
    [[nodiscard]] std::size_t segments() const noexcept;
    /// Throws DomainError if no full segment has been accumulated.
    [[nodiscard]] Spectrum result() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Batch estimator. Throws DomainError if the record is shorter than one segment.
[[nodiscard]] Spectrum welch_psd(std::span<const double> series, double sample_rate, const WelchOptions& opts);

/// Effective number of independent averages of K overlapped segments
/// (variance of the averaged periodogram is psd^2 / K_eff).
[[nodiscard]] double welch_effective_averages(std::span<const double> window, std::size_t hop,
                                              std::size_t segments);

struct OccupancyEstimate {
    double occupancy;   // <x^2> / (2 x_zp^2) - 1/2, floored at 0
    bool zero_point;    // the raw estimate was at or below the zero-point level
};

/// Phonon occupancy from the mean square of a displacement record in raw
/// units times meters_per_unit.
[[nodiscard]] OccupancyEstimate occupancy_from_variance(std::span<const double> x, const Oscillator& osc,
                                                        double meters_per_unit = 1.0,
                                                        const PhysicalConstants& k = codata);

}  // namespace fbcool
