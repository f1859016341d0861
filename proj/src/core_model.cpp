#include "fbcool/core_model.hpp"

#include <cmath>
#include <string>

#include "fbcool/errors.hpp"

namespace fbcool {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw DomainError(what);
}

double hbar_omega(const Oscillator& osc, const PhysicalConstants& k) { return k.hbar * osc.omega0; }

}  // namespace

void Oscillator::validate() const {
    require(std::isfinite(omega0) && omega0 > 0.0, "oscillator: omega0 must be > 0");
    require(std::isfinite(q0) && q0 >= 1.0, "oscillator: q0 must be >= 1");
    require(std::isfinite(mass) && mass > 0.0, "oscillator: mass must be > 0");
    require(std::isfinite(bath_temperature) && bath_temperature >= 0.0,
            "oscillator: bath temperature must be >= 0");
}

void Measurement::validate() const {
    require(std::isfinite(power) && power >= 0.0, "measurement: power must be >= 0");
    require(std::isfinite(wavelength) && wavelength > 0.0, "measurement: wavelength must be > 0");
    require(reflectance > 0.0 && reflectance <= 1.0, "measurement: reflectance must be in (0, 1]");
    require(efficiency > 0.0 && efficiency <= 1.0, "measurement: efficiency must be in (0, 1]");
    require(std::isfinite(extraneous_imprecision) && extraneous_imprecision >= 0.0,
            "measurement: extraneous imprecision must be >= 0");
}

void Feedback::validate() const {
    require(std::isfinite(gain) && gain >= 0.0, "feedback: gain must be >= 0");
    require(phase > 0.0 && phase < pi, "feedback: phase must lie in (0, pi)");
}

void DeviceGeometry::validate() const {
    require(tether_length > 0.0 && tether_width > 0.0 && thickness > 0.0,
            "geometry: dimensions must be > 0");
    require(stress > 0.0, "geometry: stress must be > 0");
    require(q_material > 0.0, "geometry: material Q must be > 0");
    require(thermal_conductivity > 0.0, "geometry: thermal conductivity must be > 0");
    require(absorption >= 0.0 && absorption < 1.0, "geometry: absorption must be in [0, 1)");
    require(window_size > 0.0, "geometry: window size must be > 0");
}

double thermal_decoherence_rate(const Oscillator& osc, const PhysicalConstants& k) {
    osc.validate();
    return k.k_B * osc.bath_temperature / (k.hbar * osc.q0);
}

double zero_point_motion(const Oscillator& osc, const PhysicalConstants& k) {
    osc.validate();
    return std::sqrt(k.hbar / (2.0 * osc.mass * osc.omega0));
}

double zero_point_spectral_density(const Oscillator& osc, const PhysicalConstants& k) {
    const double x_zp = zero_point_motion(osc, k);
    return 4.0 * x_zp * x_zp / osc.gamma0();
}

double gs_imprecision_requirement(const Oscillator& osc, const PhysicalConstants& k) {
    osc.validate();
    if (osc.bath_temperature == 0.0) throw DomainError("gs requirement undefined at T = 0");
    return 2.0 * k.hbar * k.hbar * osc.q0 /
           (k.k_B * osc.bath_temperature * osc.mass * osc.omega0);
}

double thermal_occupation(const Oscillator& osc, const PhysicalConstants& k) {
    osc.validate();
    return k.k_B * osc.bath_temperature / hbar_omega(osc, k);
}

double effective_temperature(double occupancy, const Oscillator& osc, const PhysicalConstants& k) {
    osc.validate();
    return occupancy * hbar_omega(osc, k) / k.k_B;
}

double thermal_force_noise(const Oscillator& osc, const PhysicalConstants& k) {
    osc.validate();
    return 4.0 * k.k_B * osc.bath_temperature * osc.mass * osc.gamma0();
}

NoiseBudget noise_budget(const Oscillator& osc, const PhysicalConstants& k) {
    NoiseBudget b{};
    b.x_zp = zero_point_motion(osc, k);
    b.s_xx_zp = zero_point_spectral_density(osc, k);
    b.n_th = thermal_occupation(osc, k);
    b.gamma_th = thermal_decoherence_rate(osc, k);
    b.s_ff_th = thermal_force_noise(osc, k);
    b.s_xx_imp_gs = osc.bath_temperature > 0.0 ? gs_imprecision_requirement(osc, k) : 0.0;
    return b;
}

double shot_noise_imprecision(const Measurement& meas, const PhysicalConstants& k) {
    meas.validate();
    if (meas.power <= 0.0) throw DomainError("shot noise imprecision undefined at zero power");
    return k.hbar * k.c * meas.wavelength * meas.reflectance /
           (16.0 * pi * meas.efficiency * meas.power);
}

double total_imprecision(const Measurement& meas, const PhysicalConstants& k) {
    return shot_noise_imprecision(meas, k) + meas.extraneous_imprecision;
}

double shot_extraneous_crossover_power(const Measurement& meas, const PhysicalConstants& k) {
    meas.validate();
    if (meas.extraneous_imprecision <= 0.0)
        throw DomainError("crossover power undefined without an extraneous floor");
    Measurement unit = meas;
    unit.power = 1.0;
    return shot_noise_imprecision(unit, k) / meas.extraneous_imprecision;
}

double imprecision_quanta(double s_imp, const Oscillator& osc, const PhysicalConstants& k) {
    require(s_imp >= 0.0, "imprecision must be >= 0");
    return s_imp / (2.0 * zero_point_spectral_density(osc, k));
}

double backaction_quanta(const Measurement& meas, double n_imp, BackactionRule rule) {
    meas.validate();
    if (!(n_imp > 0.0)) throw DomainError("back-action quanta undefined for n_imp <= 0");
    switch (rule) {
        case BackactionRule::as_published:
            return meas.efficiency / (16.0 * n_imp);
        case BackactionRule::inefficient_detection:
            return 1.0 / (16.0 * meas.efficiency * n_imp);
    }
    return 0.0;
}

std::complex<double> closed_loop_susceptibility(const Oscillator& osc, const Feedback& fb,
                                                double omega) {
    osc.validate();
    fb.validate();
    const double g = fb.effective_gain();
    const double detuning = 2.0 * (omega - osc.omega0) / osc.gamma0();
    const double stiffening = g > 0.0 ? g / std::tan(fb.phase) : 0.0;
    return 1.0 / std::complex<double>(1.0 + g, detuning + stiffening);
}

namespace {

struct Quanta {
    double s_zp;
    double n_th;
    double n_imp;
};

Quanta quanta(const Oscillator& osc, const Measurement& meas, const ModelOptions& opts,
              const PhysicalConstants& k) {
    Quanta q{};
    q.s_zp = zero_point_spectral_density(osc, k);
    q.n_th = thermal_occupation(osc, k);
    q.n_imp = imprecision_quanta(total_imprecision(meas, k), osc, k);
    if (opts.include_backaction) q.n_th += backaction_quanta(meas, q.n_imp, opts.backaction);
    return q;
}

}  // namespace

double spectrum_x_model(const Oscillator& osc, const Measurement& meas, const Feedback& fb,
                        double omega, const ModelOptions& opts, const PhysicalConstants& k) {
    const Quanta q = quanta(osc, meas, opts, k);
    const double g = fb.effective_gain();
    const double chi2 = std::norm(closed_loop_susceptibility(osc, fb, omega));
    return 2.0 * q.s_zp * chi2 * (q.n_th + g * g * q.n_imp);
}

double spectrum_y_model(const Oscillator& osc, const Measurement& meas, const Feedback& fb,
                        double omega, const ModelOptions& opts, const PhysicalConstants& k) {
    const Quanta q = quanta(osc, meas, opts, k);
    const double g = fb.effective_gain();
    const double chi2 = std::norm(closed_loop_susceptibility(osc, fb, omega));
    const double u0 = 2.0 * (omega - osc.omega0) / osc.gamma0();
    const double inv_chi0_sq = 1.0 + u0 * u0;
    const double loop = opts.in_loop == InLoopForm::as_published ? (1.0 + g) * (1.0 + g) : 1.0;
    return 2.0 * q.s_zp * chi2 * (q.n_th + loop * inv_chi0_sq * q.n_imp);
}

double mean_phonon(double n_th, double n_imp, double gain) {
    require(gain >= 0.0, "mean_phonon: gain must be >= 0");
    const double n = (n_th + gain * gain * n_imp) / (1.0 + gain) - 0.5;
    return n > 0.0 ? n : 0.0;
}

OptimalGain optimal_gain(double n_th, double n_imp) {
    require(n_th > 0.0 && n_imp > 0.0, "optimal_gain: n_th and n_imp must be > 0");
    OptimalGain r{};
    r.gain = std::sqrt(1.0 + n_th / n_imp) - 1.0;
    r.occupancy = mean_phonon(n_th, n_imp, r.gain);
    r.bound = 2.0 * std::sqrt(n_th * n_imp);
    return r;
}

double q_scaling_constant() {
    constexpr double q_ref = 4.4e7;
    constexpr double q_mat = 6e3, stress = 0.9e9, length = 1.7e-3, thickness = 90e-9;
    return q_ref / (q_mat * std::sqrt(stress / q_scaling_reference_stress) * length / thickness);
}

double q_scaling_estimate(const DeviceGeometry& geom) {
    geom.validate();
    return q_scaling_constant() * geom.q_material *
           std::sqrt(geom.stress / q_scaling_reference_stress) * geom.tether_length /
           geom.thickness;
}

double absorption_heating(const DeviceGeometry& geom) {
    geom.validate();
    return geom.absorption * geom.tether_length /
           (4.0 * geom.tether_width * geom.thickness * geom.thermal_conductivity);
}

}  // namespace fbcool
