#pragma once

// Closed-form model of a feedback-cooled mechanical mode read out by an
// interferometer: quanta, susceptibilities, closed-loop spectra, noise budget
// and device scaling laws.
//
// Conventions used throughout:
//  * omega0 is an angular frequency (rad/s); gamma0 = omega0 / q0.
//  * All spectral densities are single sided and per Hz. Spectrum model
//    evaluators take the angular frequency Omega (rad/s) and return a density
//    per Hz, so that <x^2> = integral S(Omega) dOmega / 2pi over Omega > 0.
//  * The loop phase phi is the lag of the feedback force behind the measured
//    displacement at resonance. phi = pi/2 is pure velocity damping and
//    chi_g^-1 = (1 + g) + 2i (Omega - Omega0) / Gamma0 + i g cot(phi).

#include <complex>

#include "fbcool/constants.hpp"

namespace fbcool {

struct Oscillator {
    double omega0 = two_pi * 39.9e3;    // rad/s
    double q0 = 2.6e7;                  // quality factor
    double mass = 12e-12;               // kg (effective)
    double bath_temperature = 300.0;    // K

    /// Intrinsic energy damping rate Gamma0 = omega0 / q0 (rad/s).
    [[nodiscard]] double gamma0() const noexcept { return omega0 / q0; }
    [[nodiscard]] double frequency() const noexcept { return omega0 / two_pi; }

    /// Throws DomainError unless omega0, mass > 0, q0 >= 1 and the bath
    /// temperature is non-negative (0 K is allowed for deterministic runs).
    void validate() const;
    friend bool operator==(const Oscillator&, const Oscillator&) = default;
};

struct Measurement {
    double power = 3e-3;                  // W incident on the resonator
    double wavelength = 850e-9;           // m
    double reflectance = 0.3;             // (0, 1]
    double efficiency = 0.1;              // (0, 1]
    double extraneous_imprecision = 0.0;  // m^2/Hz, single sided

    void validate() const;
    friend bool operator==(const Measurement&, const Measurement&) = default;
};

struct Feedback {
    double gain = 0.0;          // dimensionless damping gain g
    double phase = pi / 2.0;    // loop phase phi (rad), lag of force behind y
    bool enabled = true;

    [[nodiscard]] double effective_gain() const noexcept { return enabled ? gain : 0.0; }
    void validate() const;
};

struct DeviceGeometry {
    double tether_length = 1.7e-3;       // m
    double tether_width = 4.2e-6;        // m
    double thickness = 90e-9;            // m
    double stress = 0.9e9;               // Pa
    double q_material = 6e3;
    double thermal_conductivity = 3.0;   // W/(m K)
    double absorption = 10e-6;           // fraction of incident power absorbed
    double window_size = 2.5e-3;         // m

    void validate() const;
    friend bool operator==(const DeviceGeometry&, const DeviceGeometry&) = default;
};

struct NoiseBudget {
    double x_zp;          // m
    double s_xx_zp;       // m^2/Hz
    double n_th;
    double gamma_th;      // rad/s
    double s_ff_th;       // N^2/Hz
    double s_xx_imp_gs;   // m^2/Hz
};

/// How measurement back-action maps imprecision quanta to force quanta.
enum class BackactionRule {
    as_published,           // n_ba = eta / (16 n_imp)
    inefficient_detection,  // n_ba = 1 / (16 eta n_imp)
};

/// Which closed-loop form is used for the in-loop (apparent) spectrum.
enum class InLoopForm {
    // 2 S_zp |chi_g|^2 (n_th + (1+g)^2 |chi_0|^-2 n_imp), as printed with the
    // published closed-loop spectra. Never drops below the imprecision floor.
    as_published,
    // 2 S_zp |chi_g|^2 (n_th + |chi_0|^-2 n_imp): y = chi_g f + chi_g chi_0^-1 x_imp
    // follows from the same Langevin equation and reproduces noise squashing.
    exact,
};

struct ModelOptions {
    bool include_backaction = false;
    BackactionRule backaction = BackactionRule::as_published;
    InLoopForm in_loop = InLoopForm::as_published;
};

// Quanta and rates --------------------------------------------------------

[[nodiscard]] double thermal_decoherence_rate(const Oscillator& osc,
                                              const PhysicalConstants& k = codata);
[[nodiscard]] double zero_point_motion(const Oscillator& osc, const PhysicalConstants& k = codata);
/// Zero-point displacement spectral density on resonance, 4 x_zp^2 / Gamma0.
[[nodiscard]] double zero_point_spectral_density(const Oscillator& osc,
                                                 const PhysicalConstants& k = codata);
[[nodiscard]] double gs_imprecision_requirement(const Oscillator& osc,
                                                const PhysicalConstants& k = codata);
[[nodiscard]] double thermal_occupation(const Oscillator& osc, const PhysicalConstants& k = codata);
[[nodiscard]] double effective_temperature(double occupancy, const Oscillator& osc,
                                           const PhysicalConstants& k = codata);
[[nodiscard]] double thermal_force_noise(const Oscillator& osc, const PhysicalConstants& k = codata);
[[nodiscard]] NoiseBudget noise_budget(const Oscillator& osc, const PhysicalConstants& k = codata);

// Readout -------------------------------------------------------------------

/// Shot-noise-limited imprecision hbar c lambda R_m / (16 pi eta P). Throws on P <= 0.
[[nodiscard]] double shot_noise_imprecision(const Measurement& meas,
                                            const PhysicalConstants& k = codata);
/// Shot noise plus the extraneous floor; uncorrelated sources add in power.
[[nodiscard]] double total_imprecision(const Measurement& meas, const PhysicalConstants& k = codata);
/// Power at which the shot-noise term equals the extraneous floor. Throws if the floor is zero.
[[nodiscard]] double shot_extraneous_crossover_power(const Measurement& meas,
                                                     const PhysicalConstants& k = codata);
[[nodiscard]] double imprecision_quanta(double s_imp, const Oscillator& osc,
                                        const PhysicalConstants& k = codata);
[[nodiscard]] double backaction_quanta(const Measurement& meas, double n_imp,
                                       BackactionRule rule = BackactionRule::as_published);

// Closed loop ---------------------------------------------------------------

/// Normalized susceptibility chi_g (chi_0(Omega0) = 1). Valid for |Omega - Omega0| << Omega0.
[[nodiscard]] std::complex<double> closed_loop_susceptibility(const Oscillator& osc,
                                                              const Feedback& fb, double omega);
[[nodiscard]] double spectrum_x_model(const Oscillator& osc, const Measurement& meas,
                                      const Feedback& fb, double omega,
                                      const ModelOptions& opts = {},
                                      const PhysicalConstants& k = codata);
[[nodiscard]] double spectrum_y_model(const Oscillator& osc, const Measurement& meas,
                                      const Feedback& fb, double omega,
                                      const ModelOptions& opts = {},
                                      const PhysicalConstants& k = codata);

/// <n> = (n_th + g^2 n_imp) / (1 + g) - 1/2, clipped at zero.
[[nodiscard]] double mean_phonon(double n_th, double n_imp, double gain);

struct OptimalGain {
    double gain;        // argmin over g >= 0
    double occupancy;   // mean_phonon at that gain
    double bound;       // 2 sqrt(n_th n_imp)
};
[[nodiscard]] OptimalGain optimal_gain(double n_th, double n_imp);

// Device design ---------------------------------------------------------------

/// Reference stress used to make the Q scaling constant dimensionless.
inline constexpr double q_scaling_reference_stress = 1e9;  // Pa

/// Order-of-magnitude Q from Q ~ C Q_mat sqrt(sigma / 1 GPa) L / h, with C
/// fixed by a single calibration point: L = 1.7 mm, h = 90 nm, sigma = 0.9 GPa,
/// Q_mat = 6e3 gives Q = 4.4e7. Not a mode solver.
[[nodiscard]] double q_scaling_estimate(const DeviceGeometry& geom);
[[nodiscard]] double q_scaling_constant();

/// Static heating per absorbed-probe power, alpha L / (4 w h kappa), in K/W.
[[nodiscard]] double absorption_heating(const DeviceGeometry& geom);

}  // namespace fbcool
