// Acceptance suite: one PASS/FAIL line per criterion, tolerances fixed here.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fbcool/cli.hpp"
#include "fbcool/core_model.hpp"
#include "fbcool/experiments.hpp"
#include "fbcool/fit.hpp"

using namespace fbcool;
namespace fs = std::filesystem;

namespace {

const fs::path configs = FBCOOL_CONFIG_DIR;

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        notes.push_back((ok ? "" : "!! ") + what);
    }
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

const Oscillator device{two_pi * 39.9e3, 2.6e7, 12e-12, 300.0};

Measurement device_readout(double extraneous_amplitude) {
    Measurement m;
    m.power = 3e-3;
    m.wavelength = 850e-9;
    m.reflectance = 0.3;
    m.efficiency = 0.1;
    m.extraneous_imprecision = extraneous_amplitude * extraneous_amplitude;
    return m;
}

FeedbackFilter device_filter(double gain) {
    FeedbackFilter fb;  // 10-50 kHz, second order
    fb.gain = gain;
    fb.delay_samples = tune_delay(fb, 32 * device.frequency(), device.frequency());
    return fb;
}

// Criterion 1 ---------------------------------------------------------------
Outcome device_budget() {
    Outcome o;
    const NoiseBudget b = noise_budget(device);
    o.check(rel(b.x_zp, 4e-15) <= 0.10, fmt::format("x_zp {:.4g} fm vs 4 fm (10%)", b.x_zp * 1e15));
    o.check(rel(std::sqrt(b.s_xx_zp), 86e-15) <= 0.03,
            fmt::format("sqrt S_zp {:.4g} fm/rtHz vs 86 (3%)", std::sqrt(b.s_xx_zp) * 1e15));
    o.check(rel(std::sqrt(b.s_ff_th), 43e-18) <= 0.03,
            fmt::format("sqrt S_FF {:.4g} aN/rtHz vs 43 (3%)", std::sqrt(b.s_ff_th) * 1e18));
    o.check(rel(std::sqrt(b.s_xx_imp_gs), 0.68e-17) <= 0.03,
            fmt::format("sqrt S_imp,gs {:.4g}e-17 m/rtHz vs 0.68e-17 (3%)", std::sqrt(b.s_xx_imp_gs) * 1e17));
    o.check(b.n_th >= 1.56e8 * 0.97 && b.n_th <= 1.6e8 * 1.03,
            fmt::format("n_th {:.4g} vs 1.56e8..1.6e8 (3%)", b.n_th));
    return o;
}

// Criterion 2 ---------------------------------------------------------------
Outcome cooling_formula() {
    Outcome o;
    const double n_th = 1.56e8, n_imp = 0.013;
    const double n = mean_phonon(n_th, n_imp, 1.4e5);
    o.check(rel(n, 3.0e3) <= 0.05, fmt::format("<n>(g=1.4e5) {:.5g} vs 3.0e3 (5%)", n));
    // Independent minimum: dense log grid refined by golden section.
    auto f = [&](double lg) { return (n_th + std::exp(2 * lg) * n_imp) / (1.0 + std::exp(lg)) - 0.5; };
    double best = 0.0;
    double best_v = 1e300;
    for (double lg = 0.0; lg < 25.0; lg += 0.01)
        if (f(lg) < best_v) best_v = f(lg), best = lg;
    double a = best - 0.01, c = best + 0.01;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int i = 0; i < 200; ++i) {
        const double x1 = c - phi * (c - a), x2 = a + phi * (c - a);
        (f(x1) < f(x2) ? c : a) = f(x1) < f(x2) ? x2 : x1;
    }
    const double numeric_min = f(0.5 * (a + c));
    const OptimalGain opt = optimal_gain(n_th, n_imp);
    const double closed = 2.0 * std::sqrt(n_th * n_imp);
    o.check(rel(opt.bound, 2.85e3) <= 0.01, fmt::format("bound 2 sqrt(n_th n_imp) {:.5g} vs 2.85e3 (1%)", opt.bound));
    o.check(rel(numeric_min, closed) <= 0.01,
            fmt::format("numeric min {:.5g} vs closed form {:.5g} (1%)", numeric_min, closed));
    o.check(rel(opt.occupancy, numeric_min) <= 1e-6,
            fmt::format("optimal_gain occupancy {:.6g} at g* {:.5g}", opt.occupancy, opt.gain));
    return o;
}

// Criterion 3 ---------------------------------------------------------------
Outcome heating() {
    Outcome o;
    const double k_per_mw = absorption_heating(DeviceGeometry{}) * 1e-3;
    o.check(rel(k_per_mw, 3.7) <= 0.02, fmt::format("dT/dP {:.4g} K/mW vs 3.7 (2%)", k_per_mw));
    o.check(k_per_mw < 10.0, "below the 10 K/mW bound");
    return o;
}

// Criterion 4 ---------------------------------------------------------------
Outcome toy_oracles() {
    Outcome o;
    const Oscillator toy{two_pi * 1e3, 1000, 12e-12, 300.0};
    FeedbackFilter fb;
    fb.band_low = 250.0;
    fb.band_high = 1250.0;
    fb.delay_samples = tune_delay(fb, 32e3, 1e3);

    // Open loop: equipartition and the Lorentzian line shape.
    {
        Measurement meas;
        meas.extraneous_imprecision = 1e-30;
        FeedbackFilter open = fb;
        open.enabled = false;
        SimulationConfig sim;
        sim.duration = 12000.0;
        sim.seed = 404;
        AnalysisSettings a;
        a.fit = false;
        a.welch.segment_length = 1 << 18;
        const RunAnalysis run = run_and_analyze(toy, meas, open, sim, a);
        const double ms = 2.0 * std::pow(zero_point_motion(toy), 2) * (run.n_sim + 0.5);
        const double kt = codata.k_B * 300.0 / (toy.mass * toy.omega0 * toy.omega0);
        o.check(rel(ms, kt) <= 0.05, fmt::format("<x^2> / (kT/m w0^2) = {:.4f} (5%)", ms / kt));

        const Spectrum& s = run.x_spectrum;
        const double fwhm = toy.gamma0() / two_pi;
        double worst = 0.0, sum2 = 0.0;
        int bins = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (std::abs(s.frequencies[i] - 1e3) > 10.0 * fwhm) continue;
            const double model = spectrum_x_model(toy, meas, Feedback{0.0, pi / 2.0, false}, two_pi * s.frequencies[i]);
            const double d = s.psd[i] / model - 1.0;
            worst = std::max(worst, std::abs(d));
            sum2 += d * d;
            ++bins;
        }
        o.check(worst <= 0.10, fmt::format("Welch/Lorentzian over +-10 linewidths: max dev {:.3f}, rms {:.3f}, {} bins "
                                           "(10%)",
                                           worst, std::sqrt(sum2 / bins), bins));
    }

    // Closed loop at three gains spanning two decades.
    {
        Measurement meas;
        meas.extraneous_imprecision = 1.5e-21;  // makes g^2 n_imp visible at the top gain
        for (double g : {0.3, 3.0, 30.0}) {
            FeedbackFilter closed = fb;
            closed.gain = g;
            SimulationConfig sim;
            sim.duration = 400.0;
            sim.seed = 500 + static_cast<std::uint64_t>(g * 10);
            AnalysisSettings a;
            a.fit = false;
            const RunAnalysis run = run_and_analyze(toy, meas, closed, sim, a);
            o.check(rel(run.n_sim, run.n_analytic) <= 0.10,
                    fmt::format("g={}: n_sim {:.4g} vs formula {:.4g} ({:+.2f}%, 10%)", g, run.n_sim, run.n_analytic,
                                100.0 * (run.n_sim / run.n_analytic - 1.0)));
        }
    }
    return o;
}

// Criterion 5 ---------------------------------------------------------------
Outcome device_scale_fit() {
    Outcome o;
    const double g = 3300.0;
    const Measurement meas = device_readout(10e-15);
    SimulationConfig sim;
    sim.duration = 60.0;
    sim.seed = 2020;
    const RunAnalysis run = run_and_analyze(device, meas, device_filter(g), sim, AnalysisSettings{});
    o.check(run.fit.has_value(), run.fit ? "fit converged" : "fit failed: " + run.fit_error);
    if (!run.fit) return o;
    const double linewidth = (1.0 + g) * device.gamma0() / two_pi;
    const double n_eq = mean_phonon(run.n_th, run.n_imp, g);
    o.check(linewidth >= 1.0 && linewidth <= 10.0, fmt::format("(1+g) Gamma0 / 2pi = {:.3g} Hz", linewidth));
    o.check(rel(run.fit->gain, g) <= 0.10, fmt::format("fitted g {:.5g} vs {} (10%)", run.fit->gain, g));
    o.check(rel(run.fit->occupancy, n_eq) <= 0.15,
            fmt::format("fitted <n> {:.5g} vs formula {:.5g} (15%)", run.fit->occupancy, n_eq));
    o.notes.push_back(fmt::format("n from x {:.5g}, reduced chi2 {:.3g}", run.n_sim, run.fit->residual));
    return o;
}

// Criterion 6 ---------------------------------------------------------------
Outcome squashing() {
    Outcome o;
    const Measurement meas = device_readout(13.7e-15);
    const double n_th = thermal_occupation(device);
    const double n_imp = imprecision_quanta(total_imprecision(meas), device);
    const OptimalGain opt = optimal_gain(n_th, n_imp);
    o.notes.push_back(fmt::format("n_imp {:.4g}, g* {:.4g}, minimum <n> {:.4g}", n_imp, opt.gain, opt.occupancy));

    auto run_at = [&](double g, std::uint64_t seed) {
        SimulationConfig sim;
        sim.duration = 4.0;
        sim.seed = seed;
        return run_and_analyze(device, meas, device_filter(g), sim, AnalysisSettings{});
    };
    const RunAnalysis low = run_at(opt.gain / 10.0, 61);
    const RunAnalysis mid = run_at(opt.gain, 62);
    const RunAnalysis high = run_at(3.0 * opt.gain, 63);

    const double k = std::max(high.y_spectrum.averages, 1.0);
    const double sigma = std::hypot(high.floor_psd / std::sqrt(k), high.floor_sigma);
    o.check(high.squashed, fmt::format("at 3 g*: S_yy(f0) / floor = {:.3f}, {:.1f} sigma below (>= 3)",
                                       high.resonance_psd / high.floor_psd,
                                       (high.floor_psd - high.resonance_psd) / sigma));
    o.check(!mid.squashed || mid.resonance_psd > high.resonance_psd, "squashing deepens with gain");
    // Mean-square estimates of x carry about 1/sqrt(Gamma T) relative error.
    const double err = 1.0 / std::sqrt((1.0 + 3.0 * opt.gain) * device.gamma0() * 4.0);
    o.check(high.n_sim > opt.occupancy * (1.0 + 3.0 * err) && high.n_sim > mid.n_sim,
            fmt::format("<n> from x: {:.4g} at 3 g* vs {:.4g} at g* (minimum {:.4g})", high.n_sim, mid.n_sim,
                        opt.occupancy));
    o.check(rel(high.n_sim, high.n_analytic) <= 0.10,
            fmt::format("<n> at 3 g* matches the formula: {:.4g} vs {:.4g} (10%)", high.n_sim, high.n_analytic));
    o.check(low.fit && low.fit->valid, "fit valid at g*/10");
    o.check(high.fit && !high.fit->valid, "fit flagged invalid at 3 g*");
    return o;
}

// Criterion 7 ---------------------------------------------------------------
Outcome power_sweep_structure() {
    Outcome o;
    SweepSpec s;
    s.variable = SweepVariable::power;
    s.values = log_ladder(1e-6, 1e-2, 17);
    s.osc = device;
    s.meas = device_readout(10e-15);
    s.fb = device_filter(0.0);
    s.fb.enabled = false;
    s.sim.duration = 0.5;
    s.sim.seed = 3;
    s.analysis.fit = false;
    s.analysis.welch.segment_length = 16384;
    s.analysis.floor_band_low = 2.0 * device.frequency();
    s.analysis.floor_band_high = 4.0 * device.frequency();
    const SweepResult r = power_sweep(s);
    const double ext = *r.extraneous_estimate;

    // Shot-noise component scales as 1/P below 100 uW.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& p : r.points) {
        if (p.value > 100e-6 * (1 + 1e-9)) continue;
        const double x = std::log(p.value), y = std::log(p.run.floor_psd - ext);
        sx += x, sy += y, sxx += x * x, sxy += x * y, ++n;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    o.check(std::abs(slope + 1.0) <= 0.1, fmt::format("log-log slope of shot component below 100 uW: {:.3f} (-1 +- 0.1)",
                                                    slope));
    double worst = 0.0;
    for (const auto& p : r.points)
        if (p.value >= 1e-3 * (1 - 1e-9)) worst = std::max(worst, rel(p.run.floor_psd, s.meas.extraneous_imprecision));
    o.check(worst <= 0.05, fmt::format("floor above 1 mW within {:.2f}% of the extraneous level (5%)", 100 * worst));
    const double step = std::log10(s.values[1] / s.values[0]);
    const double miss = std::abs(std::log10(*r.crossover_estimate / *r.crossover_analytic));
    o.check(miss <= step, fmt::format("crossover {:.4g} W vs analytic {:.4g} W ({:.3g} decades, grid {:.3g})",
                                      *r.crossover_estimate, *r.crossover_analytic, miss, step));
    o.check(r.points.front().regime == Regime::shot && r.points.back().regime == Regime::extraneous,
            "regimes run from shot to extraneous");
    return o;
}

// Criterion 8 ---------------------------------------------------------------
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"fbcool"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome determinism() {
    Outcome o;
    const fs::path root = fs::temp_directory_path() / "fbcool_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);

    // Short variants of the bundled configs, with the time series switched on.
    auto shorten = [&](const std::string& name, const std::string& from, const std::string& to) {
        std::string text = slurp(configs / (name + ".json"));
        const auto at = text.find(from);
        if (at != std::string::npos) text.replace(at, from.size(), to);
        const fs::path p = root / (name + ".json");
        std::ofstream(p, std::ios::binary) << text;
        return p.string();
    };
    const std::string demo =
        shorten("closed_loop_demo", "\"duration\": \"200 s\"", "\"duration\": \"5 s\"");
    {
        std::string text = slurp(demo);
        text.replace(text.find("\"write_timeseries\": false"), 25, "\"write_timeseries\": true");
        std::ofstream(demo, std::ios::binary) << text;
    }
    const std::string power_sweep = shorten("power_sweep", "\"duration\": \"0.5 s\"", "\"duration\": \"0.05 s\"");
    const std::string trampoline = (configs / "trampoline.json").string();

    int runs = 0, codes = 0;
    for (const char* tag : {"a", "b"}) {
        const fs::path d = root / tag;
        codes |= cli({"design", "--config", trampoline, "--out", (d / "design").string()});
        codes |= cli({"simulate", "--config", demo, "--out", (d / "simulate").string(), "--seed", "77"});
        // The report records the input path, so both analyses read the same file.
        codes |= cli({"analyze", "--config", demo, "--input", (root / "a" / "simulate" / "spectrum_y.csv").string(),
                      "--out", (d / "analyze").string()});
        codes |= cli({"sweep", "--config", power_sweep, "--out", (d / "sweep").string(), "--parallelism",
                      std::string(tag) == "a" ? "1" : "4"});
        runs += 4;
    }
    o.check(codes == 0, fmt::format("{} commands exited 0", runs));

    int files = 0, differ = 0;
    for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
        if (!e.is_regular_file()) continue;
        const fs::path other = root / "b" / fs::relative(e.path(), root / "a");
        ++files;
        if (!fs::exists(other) || slurp(e.path()) != slurp(other)) {
            ++differ;
            o.notes.push_back("!! differs: " + fs::relative(e.path(), root / "a").string());
        }
    }
    o.check(files > 20 && differ == 0, fmt::format("{} output files compared, {} differ", files, differ));
    fs::remove_all(root);
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "device noise budget", device_budget},
        {2, "cooling formula and its minimum", cooling_formula},
        {3, "absorption heating bound", heating},
        {4, "simulation against theory at toy scale", toy_oracles},
        {5, "device-scale closed-loop fit", device_scale_fit},
        {6, "noise squashing beyond the optimal gain", squashing},
        {7, "power sweep structure", power_sweep_structure},
        {8, "end-to-end determinism", determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        fmt::print("{} criterion {}: {} ({:.3g} s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs);
        for (const auto& n : o.notes) fmt::print("    {}\n", n);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
