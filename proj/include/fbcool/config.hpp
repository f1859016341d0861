#pragma once

// Declarative run configuration (JSON). Physical quantities are strings with
// explicit units ("12 ng", "39.9 kHz", "10 fm/rtHz") and are converted to SI
// at parse time; dimensionless values may be plain numbers. Unknown keys are
// rejected and every error carries the line of the offending key.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fbcool/core_model.hpp"
#include "fbcool/experiments.hpp"
#include "fbcool/filter.hpp"
#include "fbcool/langevin.hpp"
#include "fbcool/spectrum.hpp"

namespace fbcool {

struct FixedInputsConfig {
    double n_th;
    double n_imp;
    double linewidth;        // Hz, Gamma0 / 2 pi
    double phase_deviation;  // rad, loop phase = pi/2 + phase_deviation
    friend bool operator==(const FixedInputsConfig&, const FixedInputsConfig&) = default;
};

struct SweepSection {
    SweepVariable variable = SweepVariable::gain;
    std::vector<double> values;
    int replicas = 1;
    int parallelism = 1;
    friend bool operator==(const SweepSection&, const SweepSection&) = default;
};

struct RunConfig {
    // oscillator
    double frequency = 39.9e3;  // Hz
    double quality_factor = 2.6e7;
    double mass = 12e-12;       // kg
    double temperature = 300.0; // K

    // measurement
    Measurement measurement{};
    bool include_backaction = false;
    BackactionRule backaction_rule = BackactionRule::as_published;

    // feedback_filter
    bool feedback_enabled = true;
    double gain = 0.0;
    double band_low = 10e3;     // Hz
    double band_high = 50e3;    // Hz
    int order = 2;
    std::optional<int> delay_samples;  // empty: tuned to target_phase
    double target_phase = pi / 2.0;
    std::optional<double> max_force;   // N

    // simulation
    double duration = 1.0;      // s
    std::optional<double> sample_rate;  // Hz
    double samples_per_period = 32.0;
    std::uint64_t seed = 1;
    std::optional<double> settle_time;  // s; empty: automatic
    bool thermal_noise = true;
    bool measurement_noise = true;
    std::optional<CalibrationTone> calibration_tone;
    std::optional<double> initial_displacement;  // m
    bool write_timeseries = false;

    // analysis
    std::optional<std::size_t> segment_length;  // empty: automatic
    Window window = Window::hann;
    double overlap = 0.5;
    bool fit = true;
    bool fit_floor = false;
    InLoopForm in_loop_form = InLoopForm::exact;
    double fit_linewidths = 10.0;
    double max_detuning = 0.05;
    std::optional<double> floor_band_low;   // Hz
    std::optional<double> floor_band_high;  // Hz
    bool calibrate = false;
    std::optional<FixedInputsConfig> fixed_inputs;

    std::optional<SweepSection> sweep;

    DeviceGeometry geometry{};

    friend bool operator==(const RunConfig&, const RunConfig&) = default;

    [[nodiscard]] Oscillator oscillator() const;
    [[nodiscard]] double resolved_sample_rate() const;
    /// Feedback filter with the delay resolved (tuned if "auto").
    [[nodiscard]] FeedbackFilter feedback_filter() const;
    [[nodiscard]] SimulationConfig simulation() const;
    [[nodiscard]] AnalysisSettings analysis() const;
    [[nodiscard]] ModelOptions model_options() const;
    /// Throws ConfigError if the config has no sweep section.
    [[nodiscard]] SweepSpec sweep_spec() const;
};

/// Parses a JSON document. Throws ConfigError (with the 1-based line of the
/// offending key where known) on syntax errors, unknown keys, missing
/// required fields, wrong units or invalid values.
[[nodiscard]] RunConfig parse_config(std::string_view json_text);
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

/// Canonical form: sorted keys, every default made explicit, quantities as
/// "<%.17g> <SI unit>". parse_config(canonical_json(c)) == c.
[[nodiscard]] std::string canonical_json(const RunConfig& cfg, int indent = 2);
/// FNV-1a 64 of the compact canonical form, as 16 hex digits.
[[nodiscard]] std::string config_hash(const RunConfig& cfg);

}  // namespace fbcool
