#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fbcool/core_model.hpp"
#include "fbcool/filter.hpp"

namespace fbcool {

struct CalibrationTone {
    double frequency;  // Hz
    double amplitude;  // m, open-loop displacement amplitude
    friend bool operator==(const CalibrationTone&, const CalibrationTone&) = default;
};

struct SimulationConfig {
    double sample_rate = 0.0;          // Hz; 0 selects samples_per_period * f0
    double samples_per_period = 32.0;
    double duration = 1.0;             // s of emitted record
    std::uint64_t seed = 1;
    bool include_backaction = false;
    BackactionRule backaction_rule = BackactionRule::as_published;
    std::optional<CalibrationTone> calibration_tone;
    bool thermal_noise = true;
    bool measurement_noise = true;
    std::optional<double> initial_displacement;  // start at rest here instead of a thermal draw
    double settle_time = -1.0;         // s simulated before recording; < 0 selects automatically
    std::size_t block_size = std::size_t{1} << 15;

    [[nodiscard]] double resolved_sample_rate(const Oscillator& osc) const;
    /// Auto: 10 closed-loop energy decay times when feedback is active, else 0
    /// (the mode starts from its stationary thermal distribution).
    [[nodiscard]] double resolved_settle_time(const Oscillator& osc, const FeedbackFilter& fb) const;
};

/// Uniformly sampled record of the physical displacement, the measurement
/// record y = x + x_imp and the applied feedback force.
struct TimeSeries {
    double dt = 0.0;
    std::vector<double> x;    // m
    std::vector<double> y;    // m
    std::vector<double> f_fb; // N

    [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
    [[nodiscard]] double sample_rate() const noexcept { return 1.0 / dt; }
};

struct SampleBlock {
    std::size_t offset;  // index of the first sample in the emitted record
    std::span<const double> x;
    std::span<const double> y;
    std::span<const double> f_fb;
};

/// Exact one-step propagator of the damped oscillator over dt: the state
/// (x, v) maps to phi * (x, v) + drive * a for a constant acceleration a held
/// over the step, and the white-noise increment for unit acceleration
/// diffusion has Cholesky factor [[l11, 0], [l21, l22]].
struct ExactPropagator {
    double phi[2][2];
    double drive[2];
    double l11, l21, l22;

    ExactPropagator(double omega0, double gamma0, double dt);
};

class LangevinSimulator {
public:
    LangevinSimulator(const Oscillator& osc, const Measurement& meas, const FeedbackFilter& fb,
                      const SimulationConfig& cfg);

    using Sink = std::function<void(const SampleBlock&)>;
    /// Integrates settle + duration and streams the recorded samples in blocks.
    /// Throws SimulationError if the loop diverges.
    void run(const Sink& sink) const;

    [[nodiscard]] double sample_rate() const noexcept { return sample_rate_; }
    [[nodiscard]] std::size_t record_length() const noexcept { return record_length_; }
    [[nodiscard]] std::size_t settle_length() const noexcept { return settle_length_; }
    [[nodiscard]] const LoopDiagnosis& loop() const noexcept { return loop_; }
    /// Single-sided imprecision PSD injected on y (m^2/Hz).
    [[nodiscard]] double imprecision_psd() const noexcept { return s_imp_; }
    [[nodiscard]] double imprecision_quanta() const noexcept { return n_imp_; }
    [[nodiscard]] double backaction_quanta() const noexcept { return n_ba_; }
    [[nodiscard]] double thermal_quanta() const noexcept { return n_th_; }
    /// Feedback as seen by the closed-form model (realized gain and lag).
    [[nodiscard]] Feedback effective_feedback() const noexcept;

private:
    Oscillator osc_;
    FeedbackFilter fb_;
    SimulationConfig cfg_;
    double sample_rate_;
    std::size_t record_length_;
    std::size_t settle_length_;
    LoopDiagnosis loop_{};
    bool feedback_active_;
    double s_imp_ = 0.0;
    double n_imp_ = 0.0;
    double n_ba_ = 0.0;
    double n_th_ = 0.0;
};

[[nodiscard]] TimeSeries simulate(const Oscillator& osc, const Measurement& meas, const FeedbackFilter& fb,
                                  const SimulationConfig& cfg);

/// Drives the mode with a sinusoidal force at drive_freq with all noise off
/// and returns the complex displacement response closed-loop / open-loop,
/// comparable to chi_g / chi_0 at that frequency.
[[nodiscard]] std::complex<double> measure_loop_transfer(const Oscillator& osc, const Measurement& meas,
                                                         const FeedbackFilter& fb, const SimulationConfig& cfg,
                                                         double drive_freq);

}  // namespace fbcool
