#include "fbcool/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "fbcool/errors.hpp"
#include "fbcool/kernels.hpp"
#include "fbcool/rng.hpp"

namespace fbcool {

std::string_view sweep_variable_name(SweepVariable v) noexcept {
    switch (v) {
        case SweepVariable::power: return "power";
        case SweepVariable::gain: return "gain";
        case SweepVariable::temperature: return "temperature";
    }
    return "unknown";
}

std::string_view regime_name(Regime r) noexcept {
    switch (r) {
        case Regime::shot: return "shot";
        case Regime::transition: return "transition";
        case Regime::extraneous: return "extraneous";
    }
    return "unknown";
}

void SweepSpec::validate() const {
    if (values.empty()) throw DomainError("sweep: values must not be empty");
    const bool up = values.size() < 2 || values[1] > values[0];
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (up ? !(values[i] > values[i - 1]) : !(values[i] < values[i - 1]))
            throw DomainError("sweep: values must be strictly monotone");
    }
    if (replicas < 1) throw DomainError("sweep: replicas must be >= 1");
    if (parallelism < 1) throw DomainError("sweep: parallelism must be >= 1");
}

std::size_t auto_segment_length(const Oscillator& osc, double realized_gain, double sample_rate,
                                std::size_t record_length) {
    const double linewidth = (1.0 + realized_gain) * osc.gamma0() / two_pi;
    const double wanted = 8.0 * sample_rate / linewidth;
    std::size_t cap = 256;
    while (cap * 2 <= record_length / 4) cap *= 2;
    std::size_t n = 256;
    while (static_cast<double>(n) < wanted && n < cap) n *= 2;
    if (n > record_length) throw DomainError("record too short for spectral analysis");
    return n;
}

RunAnalysis run_and_analyze(const Oscillator& osc, const Measurement& meas, const FeedbackFilter& fb,
                            const SimulationConfig& sim_cfg, const AnalysisSettings& analysis,
                            const LangevinSimulator::Sink& tap) {
    const LangevinSimulator sim(osc, meas, fb, sim_cfg);
    RunAnalysis out;
    out.sample_rate = sim.sample_rate();
    out.realized_gain = sim.loop().gain;
    out.loop_phase = sim.loop().phase;
    out.n_th = sim.thermal_quanta() + sim.backaction_quanta();
    out.n_imp = sim.imprecision_quanta();

    WelchOptions welch = analysis.welch;
    if (welch.segment_length == 0)
        welch.segment_length = auto_segment_length(osc, out.realized_gain, sim.sample_rate(), sim.record_length());
    WelchAccumulator acc_y(sim.sample_rate(), welch);
    WelchAccumulator acc_x(sim.sample_rate(), welch);
    double sum_sq = 0.0;
    std::size_t count = 0;
    sim.run([&](const SampleBlock& b) {
        acc_y.push(b.y);
        acc_x.push(b.x);
        sum_sq += kernels::moments(b.x).sum_sq;
        count += b.x.size();
        if (tap) tap(b);
    });
    out.y_spectrum = acc_y.result();
    out.x_spectrum = acc_x.result();

    const double x_zp = zero_point_motion(osc);
    out.n_sim = std::max(sum_sq / static_cast<double>(count) / (2.0 * x_zp * x_zp) - 0.5, 0.0);
    out.n_analytic = mean_phonon(out.n_th, out.n_imp, out.realized_gain);

    const Spectrum& sy = out.y_spectrum;
    const double f0 = osc.frequency();
    const double fl = analysis.floor_band_low > 0.0 ? analysis.floor_band_low : 2.0 * f0;
    const double fh = analysis.floor_band_high > 0.0 ? analysis.floor_band_high : 4.0 * f0;
    if (!(fl < fh)) throw DomainError("analysis: floor band must have low < high");
    out.floor_psd = sy.band_mean(fl, fh);
    if (!std::isfinite(out.floor_psd)) throw DomainError("analysis: floor band lies outside the spectrum");
    const double band_bins = std::max((fh - fl) / sy.resolution_bandwidth, 1.0);
    const double k_eff = std::max(sy.averages, 1.0);
    out.floor_sigma = out.floor_psd / std::sqrt(k_eff * band_bins);
    out.resonance_psd = sy.psd[sy.bin(f0)];
    out.resonance_sigma = out.resonance_psd / std::sqrt(k_eff);
    // Null hypothesis: the resonance bin sits at the floor.
    const double null_sigma = std::hypot(out.floor_psd / std::sqrt(k_eff), out.floor_sigma);
    out.squashed = out.floor_psd - out.resonance_psd >= 3.0 * null_sigma;

    if (analysis.fit) {
        FixedInputs fixed = analysis.fixed_inputs.value_or(
            FixedInputs{out.n_th, out.n_imp, osc.gamma0(), out.loop_phase});
        try {
            out.fit = fit_closed_loop(sy, osc, fixed, analysis.fit_options);
        } catch (const FitError& e) {
            out.fit_error = e.what();
        } catch (const DomainError& e) {
            out.fit_error = e.what();
        }
    }
    return out;
}

std::uint64_t point_seed(std::uint64_t master, std::size_t index, int replica, int replicas) {
    return split_seed(master, static_cast<std::uint64_t>(index) * static_cast<std::uint64_t>(replicas) +
                                  static_cast<std::uint64_t>(replica));
}

namespace {

template <class Body>
SweepResult run_points(const SweepSpec& spec, Body&& body) {
    spec.validate();
    SweepResult res;
    res.variable = spec.variable;
    res.config_hash = spec.config_hash;
    res.master_seed = spec.sim.seed;
    const std::size_t n = spec.values.size() * static_cast<std::size_t>(spec.replicas);
    res.points.resize(n);
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        for (int r = 0; r < spec.replicas; ++r) {
            SweepPoint& p = res.points[i * static_cast<std::size_t>(spec.replicas) + static_cast<std::size_t>(r)];
            p.index = i;
            p.replica = r;
            p.value = spec.values[i];
            p.seed = point_seed(spec.sim.seed, i, r, spec.replicas);
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < n; j = next++) {
            SweepPoint& p = res.points[j];
            try {
                body(p);
                p.ok = true;
            } catch (const SimulationError& e) {
                p.error = e.what();
                p.error_kind = "simulation";
            } catch (const FitError& e) {
                p.error = e.what();
                p.error_kind = "fit";
            } catch (const Error& e) {
                p.error = e.what();
                p.error_kind = "domain";
            }
            if (!spec.keep_spectra) {
                p.run.y_spectrum = Spectrum{};
                p.run.x_spectrum = Spectrum{};
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(spec.parallelism), n);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return res;
}

void summarize_gain(SweepResult& res) {
    std::optional<std::size_t> best;
    double best_n = 0.0;
    for (const SweepPoint& p : res.points) {
        if (!p.ok || !p.run.fit) continue;
        if (!best || p.run.fit->occupancy < best_n) {
            best = p.index;
            best_n = p.run.fit->occupancy;
        }
    }
    res.minimum_index = best;
    if (!best) return;
    for (const SweepPoint& p : res.points) {
        if (p.index > *best && p.ok && p.run.fit && !p.run.fit->valid) {
            res.degradation_gain = p.value;
            break;
        }
    }
}

}  // namespace

SweepResult power_sweep(const SweepSpec& spec) {
    if (spec.fb.enabled && spec.fb.gain > 0.0) throw DomainError("power sweep requires the loop open (gain 0)");
    for (double v : spec.values)
        if (!(v > 0.0)) throw DomainError("power sweep: powers must be > 0");
    SweepResult res = run_points(spec, [&](SweepPoint& p) {
        Measurement meas = spec.meas;
        meas.power = p.value;
        p.shot_imprecision = shot_noise_imprecision(meas);
        p.analytic_imprecision = total_imprecision(meas);
        const double ext = meas.extraneous_imprecision;
        p.regime = p.shot_imprecision >= 2.0 * ext   ? Regime::shot
                   : ext >= 2.0 * p.shot_imprecision ? Regime::extraneous
                                                     : Regime::transition;
        SimulationConfig sim = spec.sim;
        sim.seed = p.seed;
        AnalysisSettings analysis = spec.analysis;
        analysis.fit = false;
        FeedbackFilter fb = spec.fb;
        fb.enabled = false;
        p.run = run_and_analyze(spec.osc, meas, fb, sim, analysis);
    });
    if (spec.meas.extraneous_imprecision > 0.0) res.crossover_analytic = shot_extraneous_crossover_power(spec.meas);

    // floor(P) = C / P + E by weighted least squares with relative errors.
    double s11 = 0.0, s12 = 0.0, s22 = 0.0, b1 = 0.0, b2 = 0.0;
    std::size_t used = 0;
    for (const SweepPoint& p : res.points) {
        if (!p.ok || !(p.run.floor_psd > 0.0)) continue;
        const double w = 1.0 / (p.run.floor_psd * p.run.floor_psd);
        const double a = 1.0 / p.value;
        s11 += w * a * a;
        s12 += w * a;
        s22 += w;
        b1 += w * a * p.run.floor_psd;
        b2 += w * p.run.floor_psd;
        ++used;
    }
    const double det = s11 * s22 - s12 * s12;
    if (used >= 2 && det > 0.0) {
        const double c = (b1 * s22 - b2 * s12) / det;
        const double e = (s11 * b2 - s12 * b1) / det;
        res.extraneous_estimate = e;
        if (c > 0.0 && e > 0.0) res.crossover_estimate = c / e;
    }
    return res;
}

SweepResult gain_sweep(const SweepSpec& spec) {
    for (double v : spec.values)
        if (!(v >= 0.0)) throw DomainError("gain sweep: gains must be >= 0");
    SweepResult res = run_points(spec, [&](SweepPoint& p) {
        FeedbackFilter fb = spec.fb;
        fb.gain = p.value;
        fb.enabled = p.value > 0.0;
        SimulationConfig sim = spec.sim;
        sim.seed = p.seed;
        p.run = run_and_analyze(spec.osc, spec.meas, fb, sim, spec.analysis);
    });
    summarize_gain(res);
    return res;
}

SweepResult temperature_sweep(const SweepSpec& spec) {
    for (double v : spec.values)
        if (!(v >= 0.0)) throw DomainError("temperature sweep: temperatures must be >= 0");
    return run_points(spec, [&](SweepPoint& p) {
        Oscillator osc = spec.osc;
        osc.bath_temperature = p.value;
        SimulationConfig sim = spec.sim;
        sim.seed = p.seed;
        p.run = run_and_analyze(osc, spec.meas, spec.fb, sim, spec.analysis);
    });
}

SweepResult run_sweep(const SweepSpec& spec) {
    switch (spec.variable) {
        case SweepVariable::power: return power_sweep(spec);
        case SweepVariable::gain: return gain_sweep(spec);
        case SweepVariable::temperature: return temperature_sweep(spec);
    }
    throw DomainError("unknown sweep variable");
}

std::vector<double> log_ladder(double start, double stop, std::size_t points) {
    if (!(start > 0.0 && stop > 0.0) || points == 0) throw DomainError("log_ladder: need start, stop > 0");
    std::vector<double> v(points);
    if (points == 1) {
        v[0] = start;
        return v;
    }
    const double a = std::log(start), b = std::log(stop);
    for (std::size_t i = 0; i < points; ++i)
        v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    v.front() = start;
    v.back() = stop;
    return v;
}

std::vector<double> default_gain_ladder(const Oscillator& osc, std::size_t points) {
    const double g_min = two_pi * 1.0 / osc.gamma0() - 1.0;
    std::vector<double> out;
    for (double g : log_ladder(1e2, 1e6, points))
        if (g >= g_min) out.push_back(g);
    return out;
}

DesignReport design_report(const Oscillator& osc, const DeviceGeometry& geom, const Measurement& meas,
                           const PhysicalConstants& k) {
    osc.validate();
    geom.validate();
    meas.validate();
    const NoiseBudget b = noise_budget(osc, k);
    DesignReport r;
    auto row = [&](std::string name, double value, std::string unit) {
        r.rows.push_back(DesignRow{std::move(name), value, std::move(unit)});
    };
    row("frequency", osc.frequency(), "Hz");
    row("quality_factor", osc.q0, "");
    row("mass", osc.mass, "kg");
    row("bath_temperature", osc.bath_temperature, "K");
    row("gamma0", osc.gamma0(), "rad/s");
    row("n_th", b.n_th, "");
    row("gamma_th", b.gamma_th, "rad/s");
    row("gamma_th_over_omega0", b.gamma_th / osc.omega0, "");
    row("x_zp", b.x_zp, "m");
    row("sqrt_s_xx_zp", std::sqrt(b.s_xx_zp), "m/rtHz");
    row("sqrt_s_ff_th", std::sqrt(b.s_ff_th), "N/rtHz");
    row("sqrt_s_xx_imp_gs", std::sqrt(b.s_xx_imp_gs), "m/rtHz");

    double s_imp = meas.extraneous_imprecision;
    if (meas.power > 0.0) {
        const double shot = shot_noise_imprecision(meas, k);
        s_imp = shot + meas.extraneous_imprecision;
        row("sqrt_s_xx_shot", std::sqrt(shot), "m/rtHz");
    }
    row("sqrt_s_xx_imp", std::sqrt(s_imp), "m/rtHz");
    if (meas.extraneous_imprecision > 0.0) row("crossover_power", shot_extraneous_crossover_power(meas, k), "W");
    const double n_imp = imprecision_quanta(s_imp, osc, k);
    row("n_imp", n_imp, "");
    if (n_imp > 0.0 && b.n_th > 0.0) {
        const OptimalGain opt = optimal_gain(b.n_th, n_imp);
        row("optimal_gain", opt.gain, "");
        row("minimum_occupancy", opt.occupancy, "");
        row("occupancy_bound", opt.bound, "");
        row("minimum_effective_temperature", effective_temperature(opt.occupancy, osc, k), "K");
        row("n_ba", backaction_quanta(meas, n_imp), "");
    }
    const double heating = absorption_heating(geom);
    row("heating", heating, "K/W");
    row("heating_per_mW", heating * 1e-3, "K/mW");
    row("probe_heating", heating * meas.power, "K");
    row("q_scaling_estimate", q_scaling_estimate(geom), "");
    r.decoherence_condition = b.gamma_th < osc.omega0;
    r.imprecision_condition = b.s_xx_imp_gs > 0.0 && s_imp <= b.s_xx_imp_gs;
    return r;
}

}  // namespace fbcool
