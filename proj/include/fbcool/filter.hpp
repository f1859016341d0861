#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "fbcool/core_model.hpp"

namespace fbcool {

/// Feedback electronics: band-pass on the photosignal, an integer-sample
/// delay line, and an amplifier whose scale is chosen so that the damping
/// part of the force at resonance equals `gain` in units of m Gamma0
/// (i.e. the dimensionless g; the equivalent velocity gain in N s/m is
/// velocity_gain()).
struct FeedbackFilter {
    double band_low = 10e3;    // Hz
    double band_high = 50e3;   // Hz
    int order = 2;             // Butterworth prototype order (2 * order poles)
    int delay_samples = 2;
    double gain = 0.0;         // dimensionless damping gain g at resonance
    bool enabled = true;
    std::optional<double> max_force;  // actuator clip (N), off by default

    /// g m Gamma0: the equivalent velocity-feedback coefficient in N per (m/s).
    [[nodiscard]] double velocity_gain(const Oscillator& osc) const {
        return gain * osc.mass * osc.gamma0();
    }
    void validate() const;
};

/// Cascade of biquads (transposed direct form II) realizing a digital
/// Butterworth band-pass designed by the bilinear transform with pre-warped
/// band edges, normalized to unit gain at the pre-warped geometric center.
class BandpassFilter {
public:
    BandpassFilter(const FeedbackFilter& spec, double sample_rate);

    double process(double in) noexcept {
        double v = in;
        for (auto& s : sections_) {
            const double out = s.b0 * v + s.z1;
            s.z1 = s.b1 * v - s.a1 * out + s.z2;
            s.z2 = s.b2 * v - s.a2 * out;
            v = out;
        }
        return v;
    }
    void reset() noexcept;

    /// H(e^{i 2 pi f / fs}) of the cascade alone.
    [[nodiscard]] std::complex<double> response(double freq) const;
    [[nodiscard]] double center_frequency() const noexcept { return center_; }
    [[nodiscard]] std::size_t sections() const noexcept { return sections_.size(); }

private:
    struct Biquad {
        double b0, b1, b2, a1, a2;
        double z1 = 0.0, z2 = 0.0;
    };
    std::vector<Biquad> sections_;
    double sample_rate_;
    double center_;
};

/// Fixed-length delay line: process(x) returns the input from `delay` calls ago.
class DelayLine {
public:
    explicit DelayLine(int delay) : buffer_(static_cast<std::size_t>(delay) + 1, 0.0) {}
    double process(double in) noexcept {
        buffer_[head_] = in;
        head_ = head_ + 1 == buffer_.size() ? 0 : head_ + 1;
        return buffer_[head_];
    }

private:
    std::vector<double> buffer_;
    std::size_t head_ = 0;
};

enum class Hold {
    none,        // discrete filter x delay only
    zero_order,  // include the sample-and-hold seen by the continuous oscillator
};

/// Transfer function from measured displacement samples to the (unit-scale)
/// feedback force: band-pass x z^-delay, optionally times the zero-order hold
/// (1 - e^{-i w dt}) / (i w dt). Throws DomainError at or above Nyquist.
[[nodiscard]] std::complex<double> filter_frequency_response(const FeedbackFilter& fb, double sample_rate,
                                                             double freq, Hold hold = Hold::zero_order);

/// Loop seen by the mode at resonance.
struct LoopDiagnosis {
    std::complex<double> transfer;  // unit-scale transfer at f0, hold included
    double phase;                   // lag of the force behind y, wrapped to (-pi, pi]
    double force_scale;             // amplifier coefficient (N/m) realizing the requested gain
    double gain;                    // realized dimensionless damping gain
    [[nodiscard]] Feedback as_feedback() const { return Feedback{gain, phase, true}; }
};

/// Throws DomainError if the lag at resonance is outside (0, pi), i.e. the
/// loop cannot damp for any positive gain.
[[nodiscard]] LoopDiagnosis effective_feedback(const Oscillator& osc, const FeedbackFilter& fb,
                                               double sample_rate);

/// Integer delay (0 .. one mechanical period) whose loop lag at f0 is closest to `target_phase`.
[[nodiscard]] int tune_delay(const FeedbackFilter& fb, double sample_rate, double f0,
                             double target_phase = pi / 2.0);

}  // namespace fbcool
