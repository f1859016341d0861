#include "fbcool/langevin.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fbcool/errors.hpp"
#include "fbcool/rng.hpp"

namespace fbcool {

using cplx = std::complex<double>;

double SimulationConfig::resolved_sample_rate(const Oscillator& osc) const {
    const double fs = sample_rate > 0.0 ? sample_rate : samples_per_period * osc.frequency();
    if (!(fs >= 10.0 * osc.frequency()))
        throw DomainError("sample rate must be at least 10 samples per mechanical period");
    return fs;
}

double SimulationConfig::resolved_settle_time(const Oscillator& osc, const FeedbackFilter& fb) const {
    if (settle_time >= 0.0) return settle_time;
    if (initial_displacement) return 0.0;
    const double g = fb.enabled ? fb.gain : 0.0;
    if (g <= 0.0) return 0.0;
    return 10.0 / ((1.0 + g) * osc.gamma0());
}

ExactPropagator::ExactPropagator(double omega0, double gamma0, double dt) {
    const double gamma = 0.5 * gamma0;
    const double wd = std::sqrt(omega0 * omega0 - gamma * gamma);

    // Column of the propagator acting on the velocity, e^{A u} (0, 1)^T.
    auto velocity_column = [&](double u, double& px, double& pv) {
        const double e = std::exp(-gamma * u);
        const double s = std::sin(wd * u);
        const double c = std::cos(wd * u);
        px = e * s / wd;
        pv = e * (c - gamma / wd * s);
    };

    {
        const double e = std::exp(-gamma * dt);
        const double s = std::sin(wd * dt);
        const double c = std::cos(wd * dt);
        phi[0][0] = e * (c + gamma / wd * s);
        phi[0][1] = e * s / wd;
        phi[1][0] = -e * omega0 * omega0 * s / wd;
        phi[1][1] = e * (c - gamma / wd * s);
    }

    // Composite Simpson over one step; the integrands are smooth on a small
    // fraction of a period, so this is exact to rounding.
    constexpr int intervals = 512;
    const double h = dt / intervals;
    double d0 = 0.0, d1 = 0.0, sxx = 0.0, sxv = 0.0, svv = 0.0;
    for (int i = 0; i <= intervals; ++i) {
        const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        double px = 0.0, pv = 0.0;
        velocity_column(i * h, px, pv);
        d0 += w * px;
        d1 += w * pv;
        sxx += w * px * px;
        sxv += w * px * pv;
        svv += w * pv * pv;
    }
    const double k = h / 3.0;
    drive[0] = d0 * k;
    drive[1] = d1 * k;
    sxx *= k;
    sxv *= k;
    svv *= k;
    l11 = std::sqrt(sxx);
    l21 = sxv / l11;
    l22 = std::sqrt(std::max(svv - l21 * l21, 0.0));
}

namespace {

struct Engine {
    ExactPropagator prop;
    double mass;
    double dt;
    double sample_rate;
    std::size_t total;
    std::size_t settle;
    FeedbackFilter fb;
    bool feedback_active;
    double force_scale;
    std::optional<double> max_force;
    double imp_sigma = 0.0;   // per-sample std of x_imp
    double th_sigma = 0.0;    // sqrt of thermal acceleration diffusion
    double ba_sigma = 0.0;
    std::uint64_t seed;
    double drive_amplitude = 0.0;  // N
    double drive_omega = 0.0;
    double x0 = 0.0, v0 = 0.0;
    double divergence_limit = 1e300;
    double diag_gain = 0.0, diag_phase = 0.0;

    // emit(n, x, y, f) is called for every step n >= settle.
    template <class Emit>
    void integrate(Emit&& emit) const {
        GaussianStream imp_noise(seed, "imprecision");
        GaussianStream th_noise(seed, "thermal");
        GaussianStream ba_noise(seed, "backaction");
        BandpassFilter bp(fb, sample_rate);
        DelayLine delay(fb.delay_samples);

        const double p00 = prop.phi[0][0], p01 = prop.phi[0][1];
        const double p10 = prop.phi[1][0], p11 = prop.phi[1][1];
        const double d0 = prop.drive[0], d1 = prop.drive[1];
        const double inv_m = 1.0 / mass;
        const double th11 = th_sigma * prop.l11, th21 = th_sigma * prop.l21, th22 = th_sigma * prop.l22;
        const double ba11 = ba_sigma * prop.l11, ba21 = ba_sigma * prop.l21, ba22 = ba_sigma * prop.l22;
        const bool use_imp = imp_sigma > 0.0, use_th = th_sigma > 0.0, use_ba = ba_sigma > 0.0;
        const bool use_drive = drive_amplitude != 0.0;

        double x = x0, v = v0;
        double peak = 0.0;
        for (std::size_t n = 0; n < total; ++n) {
            const double y = use_imp ? x + imp_sigma * imp_noise() : x;
            double f = 0.0;
            if (feedback_active) {
                f = force_scale * delay.process(bp.process(y));
                if (max_force) f = std::clamp(f, -*max_force, *max_force);
            }
            if (n >= settle) emit(n - settle, x, y, f);

            double a = f;
            if (use_drive) a += drive_amplitude * std::cos(drive_omega * static_cast<double>(n) * dt);
            a *= inv_m;
            double wx = 0.0, wv = 0.0;
            if (use_th) {
                const double z1 = th_noise(), z2 = th_noise();
                wx += th11 * z1;
                wv += th21 * z1 + th22 * z2;
            }
            if (use_ba) {
                const double z1 = ba_noise(), z2 = ba_noise();
                wx += ba11 * z1;
                wv += ba21 * z1 + ba22 * z2;
            }
            const double xn = p00 * x + p01 * v + d0 * a + wx;
            v = p10 * x + p11 * v + d1 * a + wv;
            x = xn;

            peak = std::max(peak, std::abs(x));
            if ((n & 0xfff) == 0xfff || n + 1 == total) {
                if (!std::isfinite(peak) || peak > divergence_limit) {
                    throw SimulationError("closed loop diverged after " + std::to_string(n + 1) +
                                              " steps (gain " + std::to_string(diag_gain) + ", loop phase " +
                                              std::to_string(diag_phase) + " rad)",
                                          diag_gain, diag_phase);
                }
                peak = 0.0;
            }
        }
    }
};

struct LoopSetup {
    LoopDiagnosis loop{};
    bool active = false;
};

LoopSetup resolve_loop(const Oscillator& osc, const FeedbackFilter& fb, double fs) {
    LoopSetup s;
    s.active = fb.enabled && fb.gain > 0.0;
    if (!s.active) {
        s.loop.gain = 0.0;
        s.loop.phase = pi / 2.0;
        return s;
    }
    const cplx t = filter_frequency_response(fb, fs, osc.frequency());
    const double phase = -std::arg(t);
    if (!(std::sin(phase) > 0.0)) {
        throw SimulationError("feedback lag at resonance (" + std::to_string(phase) +
                                  " rad) is outside (0, pi): the loop anti-damps the mode",
                              fb.gain, phase);
    }
    s.loop = effective_feedback(osc, fb, fs);
    return s;
}

}  // namespace

LangevinSimulator::LangevinSimulator(const Oscillator& osc, const Measurement& meas, const FeedbackFilter& fb,
                                     const SimulationConfig& cfg)
    : osc_(osc), fb_(fb), cfg_(cfg) {
    osc.validate();
    meas.validate();
    fb.validate();
    if (!(cfg.duration > 0.0)) throw DomainError("simulation duration must be > 0");
    sample_rate_ = cfg.resolved_sample_rate(osc);
    const double settle = cfg.resolved_settle_time(osc, fb);
    record_length_ = static_cast<std::size_t>(std::llround(cfg.duration * sample_rate_));
    settle_length_ = static_cast<std::size_t>(std::llround(settle * sample_rate_));
    const LoopSetup setup = resolve_loop(osc, fb, sample_rate_);
    loop_ = setup.loop;
    feedback_active_ = setup.active;

    n_th_ = cfg.thermal_noise ? thermal_occupation(osc) : 0.0;
    if (cfg.measurement_noise) {
        s_imp_ = total_imprecision(meas);
        n_imp_ = fbcool::imprecision_quanta(s_imp_, osc);
    }
    if (cfg.include_backaction) {
        // Back-action follows the readout even if its sampled noise is disabled.
        const double n_imp = fbcool::imprecision_quanta(total_imprecision(meas), osc);
        n_ba_ = fbcool::backaction_quanta(meas, n_imp, cfg.backaction_rule);
    }
}

Feedback LangevinSimulator::effective_feedback() const noexcept {
    return Feedback{loop_.gain, loop_.phase, feedback_active_};
}

void LangevinSimulator::run(const Sink& sink) const {
    const double dt = 1.0 / sample_rate_;
    const double hw = codata.hbar * osc_.omega0;
    Engine e{ExactPropagator(osc_.omega0, osc_.gamma0(), dt),
             osc_.mass,
             dt,
             sample_rate_,
             settle_length_ + record_length_,
             settle_length_,
             fb_,
             feedback_active_,
             loop_.force_scale,
             fb_.max_force,
             std::sqrt(s_imp_ * sample_rate_ / 2.0),
             // two-sided force intensity 2 k_B T m Gamma0 per m^2; back-action uses hbar Omega0 n_ba
             std::sqrt(2.0 * n_th_ * hw * osc_.gamma0() / osc_.mass),
             std::sqrt(2.0 * n_ba_ * hw * osc_.gamma0() / osc_.mass),
             cfg_.seed};
    e.diag_gain = loop_.gain;
    e.diag_phase = loop_.phase;

    const double w0 = osc_.omega0;
    double x_scale = 0.0;
    if (cfg_.initial_displacement) {
        e.x0 = *cfg_.initial_displacement;
        x_scale = std::abs(e.x0);
    } else {
        // Stationary thermal state (including back-action heating).
        const double var_x = (n_th_ + n_ba_) * hw / (osc_.mass * w0 * w0);
        GaussianStream init(cfg_.seed, "initial-state");
        e.x0 = std::sqrt(var_x) * init();
        e.v0 = w0 * std::sqrt(var_x) * init();
        x_scale = std::sqrt(var_x);
    }
    if (cfg_.calibration_tone) {
        const double w = two_pi * cfg_.calibration_tone->frequency;
        e.drive_omega = w;
        e.drive_amplitude = cfg_.calibration_tone->amplitude * osc_.mass *
                            std::abs(cplx(w0 * w0 - w * w, w * osc_.gamma0()));
        x_scale = std::max(x_scale, std::abs(cfg_.calibration_tone->amplitude));
    }
    x_scale = std::max({x_scale, std::sqrt(s_imp_ * sample_rate_ / 2.0), 1e-30});
    e.divergence_limit = 1e4 * x_scale;

    const std::size_t block = std::max<std::size_t>(cfg_.block_size, 1);
    std::vector<double> bx, by, bf;
    bx.reserve(block);
    by.reserve(block);
    bf.reserve(block);
    std::size_t offset = 0;
    auto flush = [&] {
        if (bx.empty()) return;
        sink(SampleBlock{offset, bx, by, bf});
        offset += bx.size();
        bx.clear();
        by.clear();
        bf.clear();
    };
    e.integrate([&](std::size_t, double x, double y, double f) {
        bx.push_back(x);
        by.push_back(y);
        bf.push_back(f);
        if (bx.size() == block) flush();
    });
    flush();
}

TimeSeries simulate(const Oscillator& osc, const Measurement& meas, const FeedbackFilter& fb,
                    const SimulationConfig& cfg) {
    const LangevinSimulator sim(osc, meas, fb, cfg);
    TimeSeries ts;
    ts.dt = 1.0 / sim.sample_rate();
    ts.x.reserve(sim.record_length());
    ts.y.reserve(sim.record_length());
    ts.f_fb.reserve(sim.record_length());
    sim.run([&](const SampleBlock& b) {
        ts.x.insert(ts.x.end(), b.x.begin(), b.x.end());
        ts.y.insert(ts.y.end(), b.y.begin(), b.y.end());
        ts.f_fb.insert(ts.f_fb.end(), b.f_fb.begin(), b.f_fb.end());
    });
    return ts;
}

cplx measure_loop_transfer(const Oscillator& osc, const Measurement& meas, const FeedbackFilter& fb,
                           const SimulationConfig& cfg, double drive_freq) {
    osc.validate();
    meas.validate();
    fb.validate();
    const double fs = cfg.resolved_sample_rate(osc);
    if (!(drive_freq > 0.0 && drive_freq < 0.5 * fs)) throw DomainError("drive frequency must be in (0, Nyquist)");
    const double dt = 1.0 / fs;
    const ExactPropagator prop(osc.omega0, osc.gamma0(), dt);
    const double w = two_pi * drive_freq;
    const double force = osc.mass * osc.omega0 * osc.gamma0() * 1e-12;

    // Exact periodic steady state of the sampled open-loop system:
    // S = (e^{i w dt} I - Phi)^-1 drive * F / m
    cplx s0, s1;
    {
        const cplx z = std::polar(1.0, w * dt);
        const cplx m00 = z - prop.phi[0][0], m01 = -prop.phi[0][1];
        const cplx m10 = -prop.phi[1][0], m11 = z - prop.phi[1][1];
        const cplx det = m00 * m11 - m01 * m10;
        const double b0 = prop.drive[0] * force / osc.mass, b1 = prop.drive[1] * force / osc.mass;
        s0 = (m11 * b0 - m01 * b1) / det;
        s1 = (-m10 * b0 + m00 * b1) / det;
    }

    const std::size_t periods = 400;
    const std::size_t lockin = static_cast<std::size_t>(std::llround(periods * fs / drive_freq));

    auto response = [&](const FeedbackFilter& loop_fb) {
        const LoopSetup setup = resolve_loop(osc, loop_fb, fs);
        double settle = cfg.settle_time >= 0.0 ? cfg.settle_time : 0.0;
        if (setup.active && cfg.settle_time < 0.0) settle = 18.5 / ((1.0 + setup.loop.gain) * osc.gamma0());
        Engine e{prop, osc.mass, dt, fs, 0, static_cast<std::size_t>(std::llround(settle * fs)), loop_fb,
                 setup.active, setup.loop.force_scale, loop_fb.max_force, 0.0, 0.0, 0.0, cfg.seed};
        e.total = e.settle + lockin;
        e.drive_amplitude = force;
        e.drive_omega = w;
        e.x0 = s0.real();
        e.v0 = s1.real();
        e.divergence_limit = 1e6 * std::abs(s0);
        e.diag_gain = setup.loop.gain;
        e.diag_phase = setup.loop.phase;
        // Demodulate against the absolute time of each recorded sample.
        cplx sum = 0.0;
        const std::size_t settle_steps = e.settle;
        e.integrate([&](std::size_t n, double x, double, double) {
            sum += x * std::polar(1.0, -w * static_cast<double>(n + settle_steps) * dt);
        });
        return sum;
    };

    FeedbackFilter open = fb;
    open.enabled = false;
    return response(fb) / response(open);
}

}  // namespace fbcool
