#include "fbcool/fit.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fbcool/errors.hpp"
#include "fbcool/kernels.hpp"

namespace fbcool {

namespace {

struct Band {
    std::vector<double> omega;
    std::vector<double> data;
};

Band select_band(const Spectrum& s, double f0, double half) {
    Band b;
    for (std::size_t i = 1; i < s.psd.size(); ++i) {
        if (std::abs(s.frequencies[i] - f0) <= half) {
            b.omega.push_back(two_pi * s.frequencies[i]);
            b.data.push_back(s.psd[i]);
        }
    }
    return b;
}

class Objective {
public:
    Objective(const Band& band, const kernels::LoopSpectrumParams& base, InLoopForm form, bool fit_floor)
        : band_(band), base_(base), form_(form), fit_floor_(fit_floor), model_(band.omega.size()),
          weight_(band.omega.size(), 1.0), a_(band.omega.size()), b_(band.omega.size()) {}

    // Evaluates the model at t = ln(1 + g), resolving the floor if it is free.
    void evaluate(double t) {
        kernels::LoopSpectrumParams p = base_;
        p.gain = std::expm1(t);
        p.c0 = 0.0;
        p.c1 = form_ == InLoopForm::exact ? 1.0 : (1.0 + p.gain) * (1.0 + p.gain);
        if (!fit_floor_) {
            kernels::loop_spectrum(band_.omega, p, model_);
            return;
        }
        kernels::LoopSpectrumParams pa = p, pb = p;
        pa.imprecision = 0.0;
        pb.thermal = 0.0;
        pb.imprecision = 1.0;
        kernels::loop_spectrum(band_.omega, pa, a_);
        kernels::loop_spectrum(band_.omega, pb, b_);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < a_.size(); ++i) {
            num += weight_[i] * b_[i] * (band_.data[i] - a_[i]);
            den += weight_[i] * b_[i] * b_[i];
        }
        floor_ = den > 0.0 ? std::max(num / den, 0.0) : 0.0;
        for (std::size_t i = 0; i < a_.size(); ++i) model_[i] = a_[i] + floor_ * b_[i];
    }

    double operator()(double t) {
        evaluate(t);
        return kernels::weighted_sq_residual(band_.data, model_, weight_);
    }

    void reweight(double t) {
        evaluate(t);
        for (std::size_t i = 0; i < model_.size(); ++i) weight_[i] = 1.0 / (model_[i] * model_[i]);
    }

    [[nodiscard]] double floor() const noexcept { return fit_floor_ ? floor_ : base_.imprecision; }
    [[nodiscard]] double normalized_chi2(double t) {
        evaluate(t);
        double acc = 0.0;
        for (std::size_t i = 0; i < model_.size(); ++i) {
            const double r = (band_.data[i] - model_[i]) / model_[i];
            acc += r * r;
        }
        return acc;
    }

private:
    const Band& band_;
    kernels::LoopSpectrumParams base_;
    InLoopForm form_;
    bool fit_floor_;
    std::vector<double> model_, weight_, a_, b_;
    double floor_ = 0.0;
};

struct Solution {
    double t;
    double floor;
    int iterations;
    bool clipped;
    double chi2;
};

Solution solve(const Band& band, const kernels::LoopSpectrumParams& base, const FitOptions& opts, double t0) {
    Objective obj(band, base, opts.in_loop, opts.fit_floor);
    double t = t0;
    constexpr int bits = 45;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        obj.reweight(t);
        double hi = std::max(t + 4.0, 2.0);
        double t_new = 0.0;
        for (int grow = 0; grow < 8; ++grow) {
            std::uintmax_t max_iter = 200;
            const auto r = boost::math::tools::brent_find_minima([&](double s) { return obj(s); }, 0.0, hi, bits,
                                                                 max_iter);
            t_new = r.first;
            if (t_new < hi - 1e-3) break;
            hi += 6.0;
        }
        // Brent never lands on the boundary itself.
        if (obj(0.0) <= obj(t_new)) t_new = 0.0;
        if (!std::isfinite(t_new)) throw FitError("closed-loop fit produced a non-finite gain", std::expm1(t));
        const bool done = std::abs(t_new - t) < opts.tolerance;
        t = t_new;
        if (done) {
            const double floor = (obj.evaluate(t), obj.floor());
            return Solution{t, floor, it, t == 0.0, obj.normalized_chi2(t)};
        }
    }
    throw FitError("closed-loop fit did not converge in " + std::to_string(opts.max_iterations) + " iterations",
                   std::expm1(t));
}

}  // namespace

FixedInputs fixed_inputs_from(const Oscillator& osc, const Measurement& meas, double phase,
                              const ModelOptions& model, const PhysicalConstants& k) {
    FixedInputs f{};
    f.n_th = thermal_occupation(osc, k);
    f.n_imp = imprecision_quanta(total_imprecision(meas, k), osc, k);
    if (model.include_backaction) f.n_th += backaction_quanta(meas, f.n_imp, model.backaction);
    f.gamma0 = osc.gamma0();
    f.phase = phase;
    return f;
}

FitResult fit_closed_loop(const Spectrum& spectrum, const Oscillator& osc, const Measurement& meas, double phase,
                          const FitOptions& opts, const ModelOptions& model, const PhysicalConstants& k) {
    return fit_closed_loop(spectrum, osc, fixed_inputs_from(osc, meas, phase, model, k), opts, k);
}

FitResult fit_closed_loop(const Spectrum& spectrum, const Oscillator& osc, const FixedInputs& fixed,
                          const FitOptions& opts, const PhysicalConstants& k) {
    osc.validate();
    if (!(fixed.n_th > 0.0 && fixed.n_imp > 0.0 && fixed.gamma0 > 0.0))
        throw DomainError("fit: n_th, n_imp and gamma0 must be > 0");
    if (!(std::sin(fixed.phase) > 0.0)) throw DomainError("fit: loop phase must lie in (0, pi)");
    if (!(opts.fit_linewidths > 0.0 && opts.max_detuning > 0.0 && opts.max_iterations > 0))
        throw DomainError("fit: invalid options");
    if (spectrum.psd.size() < 8) throw DomainError("fit: spectrum too short");

    const double f0 = osc.frequency();
    const double x_zp = zero_point_motion(osc, k);
    const double s_zp = 4.0 * x_zp * x_zp / fixed.gamma0;
    kernels::LoopSpectrumParams base{};
    base.omega0 = osc.omega0;
    base.gamma0 = fixed.gamma0;
    base.cot_phase = std::cos(fixed.phase) / std::sin(fixed.phase);
    base.thermal = 2.0 * s_zp * fixed.n_th;
    base.imprecision = 2.0 * s_zp * fixed.n_imp;
    const double fwhm0 = fixed.gamma0 / two_pi;
    const double max_half = opts.max_detuning * f0;

    // Starting point from the peak height above the floor.
    double g0;
    {
        const Band wide = select_band(spectrum, f0, max_half);
        if (wide.data.size() < 3) throw DomainError("fit: spectrum does not cover the resonance");
        double peak = 0.0;
        for (std::size_t i = 1; i + 1 < wide.data.size(); ++i)
            peak = std::max(peak, (wide.data[i - 1] + wide.data[i] + wide.data[i + 1]) / 3.0);
        const double excess = peak - base.imprecision;
        g0 = excess > 0.1 * base.imprecision ? std::sqrt(base.thermal / excess) - 1.0
                                              : std::sqrt(fixed.n_th / fixed.n_imp);
        g0 = std::max(g0, 0.0);
    }

    auto half_width = [&](double g) {
        const double h = opts.fit_linewidths * (1.0 + g) * fwhm0;
        return std::clamp(h, 5.0 * spectrum.bin_width, max_half);
    };

    double g = g0;
    double half = half_width(g);
    Solution sol{};
    Band band;
    for (int pass = 0; pass < 4; ++pass) {
        band = select_band(spectrum, f0, half);
        const std::size_t params = opts.fit_floor ? 2 : 1;
        if (band.data.size() <= params + 2) throw FitError("fit: too few bins in the fit band", g);
        sol = solve(band, base, opts, std::log1p(g));
        g = std::expm1(sol.t);
        const double next = half_width(g);
        if (std::abs(next - half) <= 0.1 * half) break;
        half = next;
    }

    FitResult r{};
    r.clipped = sol.clipped;
    r.gain = sol.clipped ? 0.0 : g;
    r.floor = sol.floor;
    r.fixed_inputs = fixed;
    const double n_imp = opts.fit_floor ? sol.floor / (2.0 * s_zp) : fixed.n_imp;
    r.fixed_inputs.n_imp = n_imp;
    r.occupancy = mean_phonon(fixed.n_th, n_imp, r.gain);
    r.effective_temperature = effective_temperature(r.occupancy, osc, k);
    const std::size_t params = opts.fit_floor ? 2 : 1;
    r.bins = band.data.size();
    r.residual = sol.chi2 * std::max(spectrum.averages, 1.0) / static_cast<double>(r.bins - params);
    const double resolution = std::max(spectrum.resolution_bandwidth, spectrum.bin_width);
    r.valid = base.thermal / ((1.0 + r.gain) * (1.0 + r.gain)) >= 2.0 * sol.floor &&
              (1.0 + r.gain) * fwhm0 >= 2.0 * resolution;
    r.iterations = sol.iterations;
    r.band_low = f0 - half;
    r.band_high = f0 + half;
    return r;
}

std::vector<double> fit_model(const FitResult& fit, const Oscillator& osc, std::span<const double> frequencies,
                              InLoopForm form, const PhysicalConstants& k) {
    const FixedInputs& in = fit.fixed_inputs;
    const double x_zp = zero_point_motion(osc, k);
    const double s_zp = 4.0 * x_zp * x_zp / in.gamma0;
    kernels::LoopSpectrumParams p{};
    p.omega0 = osc.omega0;
    p.gamma0 = in.gamma0;
    p.gain = fit.gain;
    p.cot_phase = std::cos(in.phase) / std::sin(in.phase);
    p.thermal = 2.0 * s_zp * in.n_th;
    p.imprecision = 2.0 * s_zp * in.n_imp;
    p.c1 = form == InLoopForm::exact ? 1.0 : (1.0 + p.gain) * (1.0 + p.gain);
    std::vector<double> omega(frequencies.size());
    for (std::size_t i = 0; i < omega.size(); ++i) omega[i] = two_pi * frequencies[i];
    std::vector<double> out(omega.size());
    kernels::loop_spectrum(omega, p, out);
    return out;
}

}  // namespace fbcool
