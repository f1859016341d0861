#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fbcool/core_model.hpp"
#include "fbcool/filter.hpp"
#include "fbcool/fit.hpp"
#include "fbcool/langevin.hpp"
#include "fbcool/spectrum.hpp"

namespace fbcool {

enum class SweepVariable { power, gain, temperature };

[[nodiscard]] std::string_view sweep_variable_name(SweepVariable v) noexcept;

/// Spectral processing shared by single runs and sweep points.
struct AnalysisSettings {
    WelchOptions welch{0};          // segment_length 0 selects automatically
    bool fit = true;
    FitOptions fit_options{};
    std::optional<FixedInputs> fixed_inputs;  // overrides inputs derived from the run
    double floor_band_low = 0.0;    // Hz; 0 selects 2 f0
    double floor_band_high = 0.0;   // Hz; 0 selects 4 f0
};

struct SweepSpec {
    SweepVariable variable = SweepVariable::gain;
    std::vector<double> values;     // W, dimensionless g, or K
    Oscillator osc{};
    Measurement meas{};
    FeedbackFilter fb{};
    SimulationConfig sim{};
    AnalysisSettings analysis{};
    int replicas = 1;
    int parallelism = 1;
    std::string config_hash;        // carried into the result for provenance
    bool keep_spectra = true;

    /// Throws DomainError: values empty or not strictly monotone, replicas < 1.
    void validate() const;
};

/// Outcome of one simulated run pushed through the analysis chain.
struct RunAnalysis {
    double sample_rate = 0.0;
    double realized_gain = 0.0;
    double loop_phase = 0.0;          // rad
    double n_th = 0.0;                // including back-action quanta
    double n_imp = 0.0;
    double n_sim = 0.0;               // from the mean square of x
    double n_analytic = 0.0;          // mean_phonon at the realized gain
    double floor_psd = 0.0;           // mean y PSD in the floor band
    double floor_sigma = 0.0;         // standard error of floor_psd
    double resonance_psd = 0.0;       // y PSD at the bin nearest f0
    double resonance_sigma = 0.0;     // periodogram standard deviation at that bin
    bool squashed = false;            // resonance bin below the floor by >= 3 sigma
    std::optional<FitResult> fit;
    std::string fit_error;
    Spectrum y_spectrum;
    Spectrum x_spectrum;
};

/// Automatic Welch segment: the largest power of two resolving the damped
/// linewidth by about eight bins, but at most a quarter of the record.
[[nodiscard]] std::size_t auto_segment_length(const Oscillator& osc, double realized_gain, double sample_rate,
                                              std::size_t record_length);

/// Simulates one configuration and analyzes y (fit, squashing, floor) and x
/// (occupancy). SimulationError propagates; fit failures are recorded in
/// fit_error. `tap`, if given, also receives every recorded block.
[[nodiscard]] RunAnalysis run_and_analyze(const Oscillator& osc, const Measurement& meas, const FeedbackFilter& fb,
                                          const SimulationConfig& sim, const AnalysisSettings& analysis,
                                          const LangevinSimulator::Sink& tap = {});

enum class Regime { shot, transition, extraneous };
[[nodiscard]] std::string_view regime_name(Regime r) noexcept;

struct SweepPoint {
    std::size_t index = 0;
    int replica = 0;
    double value = 0.0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;           // empty when ok
    std::string error_kind;      // "simulation", "fit", "domain"

    // power sweeps
    double shot_imprecision = 0.0;      // m^2/Hz
    double analytic_imprecision = 0.0;  // m^2/Hz, shot + extraneous
    Regime regime = Regime::shot;

    RunAnalysis run;
};

struct SweepResult {
    SweepVariable variable = SweepVariable::gain;
    std::vector<SweepPoint> points;     // ordered by (index, replica)
    std::string config_hash;
    std::uint64_t master_seed = 0;

    // power sweeps
    std::optional<double> crossover_analytic;   // W
    std::optional<double> crossover_estimate;   // W, from the simulated floors
    std::optional<double> extraneous_estimate;  // m^2/Hz
    // gain sweeps
    std::optional<std::size_t> minimum_index;   // lowest fitted occupancy
    std::optional<double> degradation_gain;     // first gain past the minimum where the fit is invalid
};

/// Seed for point `index`, replica `replica` of a sweep with `replicas` replicas.
[[nodiscard]] std::uint64_t point_seed(std::uint64_t master, std::size_t index, int replica, int replicas);

[[nodiscard]] SweepResult power_sweep(const SweepSpec& spec);
[[nodiscard]] SweepResult gain_sweep(const SweepSpec& spec);
[[nodiscard]] SweepResult temperature_sweep(const SweepSpec& spec);
[[nodiscard]] SweepResult run_sweep(const SweepSpec& spec);

/// Log-spaced ladder of `points` values from start to stop inclusive.
[[nodiscard]] std::vector<double> log_ladder(double start, double stop, std::size_t points);
/// Default cooling-curve ladder: 1e2 .. 1e6, restricted to gains with (1 + g) Gamma0 >= 2 pi * 1 Hz.
[[nodiscard]] std::vector<double> default_gain_ladder(const Oscillator& osc, std::size_t points = 17);

struct DesignRow {
    std::string name;
    double value;
    std::string unit;
};

struct DesignReport {
    std::vector<DesignRow> rows;
    bool decoherence_condition;   // Gamma_th < Omega0
    bool imprecision_condition;   // total imprecision below the ground-state requirement
};

[[nodiscard]] DesignReport design_report(const Oscillator& osc, const DeviceGeometry& geom,
                                         const Measurement& meas, const PhysicalConstants& k = codata);

}  // namespace fbcool
