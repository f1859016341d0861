#include "fbcool/cli.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fbcool/calibration.hpp"
#include "fbcool/config.hpp"
#include "fbcool/errors.hpp"
#include "fbcool/experiments.hpp"
#include "fbcool/fit.hpp"
#include "fbcool/io.hpp"
#include "json.hpp"

namespace fbcool::cli {

namespace fs = std::filesystem;

namespace {

using Rows = std::vector<std::pair<std::string, std::string>>;
using io::num;

struct Common {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> parallelism;
};

RunConfig load(const Common& c) {
    RunConfig cfg = load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (c.parallelism) {
        if (*c.parallelism < 1) throw ConfigError("--parallelism must be >= 1");
        if (cfg.sweep) cfg.sweep->parallelism = *c.parallelism;
    }
    return cfg;
}

io::Provenance provenance(const RunConfig& cfg, std::string kind, std::uint64_t seed) {
    // Embedded config matches the hashed content, which leaves out parallelism.
    auto j = nlohmann::json::parse(canonical_json(cfg, -1));
    if (j.contains("sweep")) j["sweep"].erase("parallelism");
    return io::Provenance{std::move(kind), config_hash(cfg), seed, j.dump()};
}

const char* yes_no(bool b) { return b ? "yes" : "no"; }

void append_fit(Rows& rows, const FitResult& f) {
    rows.emplace_back("fit_gain", num(f.gain));
    rows.emplace_back("fit_linewidth_hz", num((1.0 + f.gain) * f.fixed_inputs.gamma0 / two_pi));
    rows.emplace_back("fit_occupancy", num(f.occupancy));
    rows.emplace_back("fit_effective_temperature_k", num(f.effective_temperature));
    rows.emplace_back("fit_residual", num(f.residual));
    rows.emplace_back("fit_valid", yes_no(f.valid));
    rows.emplace_back("fit_clipped", yes_no(f.clipped));
    rows.emplace_back("fit_floor_psd", num(f.floor));
    rows.emplace_back("fit_bins", std::to_string(f.bins));
    rows.emplace_back("fit_band_hz", fmt::format("{} {}", f.band_low, f.band_high));
    rows.emplace_back("fit_fixed_n_th", num(f.fixed_inputs.n_th));
    rows.emplace_back("fit_fixed_n_imp", num(f.fixed_inputs.n_imp));
    rows.emplace_back("fit_fixed_gamma0_rad_s", num(f.fixed_inputs.gamma0));
    rows.emplace_back("fit_fixed_phase_rad", num(f.fixed_inputs.phase));
    const OptimalGain best = optimal_gain(f.fixed_inputs.n_th, f.fixed_inputs.n_imp);
    rows.emplace_back("optimal_gain", num(best.gain));
    rows.emplace_back("minimum_occupancy", num(best.occupancy));
    rows.emplace_back("fit_gain_over_optimal", num(f.gain / best.gain));
}

int cmd_design(const Common& c, std::ostream& out) {
    const RunConfig cfg = load(c);
    const Oscillator osc = cfg.oscillator();
    const DesignReport rep = design_report(osc, cfg.geometry, cfg.measurement);
    const fs::path dir(c.out);
    const io::Provenance p = provenance(cfg, "design", cfg.seed);

    std::string csv = io::header(p) + "name,value,unit\n";
    Rows rows;
    std::size_t width = 0;
    for (const auto& r : rep.rows) width = std::max(width, r.name.size());
    for (const auto& r : rep.rows) {
        csv += fmt::format("{},{},{}\n", r.name, r.value, r.unit);
        rows.emplace_back(r.name, r.unit.empty() ? num(r.value) : fmt::format("{} {}", r.value, r.unit));
    }
    rows.emplace_back("decoherence_condition", rep.decoherence_condition ? "met" : "not met");
    rows.emplace_back("imprecision_condition", rep.imprecision_condition ? "met" : "not met");
    io::write_text(dir / "design.csv", csv);
    io::write_text(dir / "design_report.txt", io::report(p, rows));
    for (const auto& r : rep.rows) fmt::print(out, "{:<{}}  {:.6g} {}\n", r.name, width, r.value, r.unit);
    fmt::print(out, "wrote {}\n", (dir / "design_report.txt").string());
    return ok;
}

int cmd_simulate(const Common& c, std::ostream& out) {
    const RunConfig cfg = load(c);
    const fs::path dir(c.out);
    const Oscillator osc = cfg.oscillator();
    const FeedbackFilter fb = cfg.feedback_filter();
    SimulationConfig sim = cfg.simulation();
    // Same derivation as point 0 of a one-point sweep.
    sim.seed = point_seed(cfg.seed, 0, 0, 1);
    const AnalysisSettings analysis = cfg.analysis();

    std::optional<io::TimeSeriesWriter> ts;
    LangevinSimulator::Sink tap;
    if (cfg.write_timeseries) {
        ts.emplace(dir / "timeseries.csv", provenance(cfg, "timeseries", sim.seed), cfg.resolved_sample_rate());
        tap = [&ts](const SampleBlock& b) { ts->write(b); };
    }
    const RunAnalysis run = run_and_analyze(osc, cfg.measurement, fb, sim, analysis, tap);

    io::write_spectrum_csv(dir / "spectrum_y.csv", run.y_spectrum, provenance(cfg, "spectrum_y", sim.seed));
    io::write_spectrum_csv(dir / "spectrum_x.csv", run.x_spectrum, provenance(cfg, "spectrum_x", sim.seed));

    Rows rows{
        {"sample_rate_hz", num(run.sample_rate)},
        {"duration_s", num(cfg.duration)},
        {"delay_samples", std::to_string(fb.delay_samples)},
        {"feedback", fb.enabled && fb.gain > 0.0 ? "closed" : "open"},
        {"realized_gain", num(run.realized_gain)},
        {"loop_phase_rad", num(run.loop_phase)},
        {"n_th", num(run.n_th)},
        {"n_imp", num(run.n_imp)},
        {"occupancy_simulated", num(run.n_sim)},
        {"occupancy_analytic", num(run.n_analytic)},
        {"effective_temperature_simulated_k", num(effective_temperature(run.n_sim, osc))},
        {"floor_psd", num(run.floor_psd)},
        {"floor_sigma", num(run.floor_sigma)},
        {"resonance_psd", num(run.resonance_psd)},
        {"squashed", yes_no(run.squashed)},
        {"welch_segment_length", std::to_string(run.y_spectrum.segment_length)},
        {"welch_averages", num(run.y_spectrum.averages)},
    };
    if (run.fit) append_fit(rows, *run.fit);
    if (!run.fit_error.empty()) rows.emplace_back("fit_error", run.fit_error);

    if (cfg.calibrate) {
        if (!cfg.calibration_tone) throw ConfigError("analysis.calibrate requires simulation.calibration_tone");
        const CalibrationResult cal = calibrate(run.y_spectrum, cfg.calibration_tone->frequency, osc);
        rows.emplace_back("calibration_meters_per_unit", num(cal.meters_per_unit));
        rows.emplace_back("calibration_tone_frequency_hz", num(cal.tone_frequency));
        rows.emplace_back("calibration_tone_amplitude_m", num(cal.tone_amplitude));
        rows.emplace_back("calibration_tone_amplitude_configured_m", num(cfg.calibration_tone->amplitude));
        rows.emplace_back("calibration_thermal_area_m2", num(cal.inferred_thermal_area));
        rows.emplace_back("calibration_insufficient_averaging", yes_no(cal.insufficient_averaging));
    }
    io::write_text(dir / "report.txt", io::report(provenance(cfg, "simulate", sim.seed), rows));

    fmt::print(out, "n_sim {:.6g}  n_analytic {:.6g}", run.n_sim, run.n_analytic);
    if (run.fit) fmt::print(out, "  fit g {:.6g}  fit n {:.6g}", run.fit->gain, run.fit->occupancy);
    fmt::print(out, "\nwrote {}\n", dir.string());
    if (analysis.fit && !run.fit) throw FitError(run.fit_error, 0.0);
    return ok;
}

int cmd_analyze(const Common& c, const std::string& input, std::ostream& out) {
    const RunConfig cfg = load(c);
    const fs::path dir(c.out);
    const Oscillator osc = cfg.oscillator();
    const io::SpectrumFile file = io::read_spectrum_csv(input);
    const AnalysisSettings analysis = cfg.analysis();

    FixedInputs fixed;
    if (analysis.fixed_inputs) {
        fixed = *analysis.fixed_inputs;
    } else {
        const LoopDiagnosis loop = effective_feedback(osc, cfg.feedback_filter(), cfg.resolved_sample_rate());
        fixed = fixed_inputs_from(osc, cfg.measurement, loop.phase, cfg.model_options());
    }
    // Config values are range-checked at load, so a domain error here comes from the data.
    const FitResult fit = [&] {
        try {
            return fit_closed_loop(file.spectrum, osc, fixed, analysis.fit_options);
        } catch (const DomainError& e) {
            throw FitError(e.what(), 0.0);
        }
    }();

    Rows rows{{"input", input}};
    if (const auto it = file.meta.find("config_hash"); it != file.meta.end())
        rows.emplace_back("input_config_hash", it->second);
    if (const auto it = file.meta.find("seed"); it != file.meta.end()) rows.emplace_back("input_seed", it->second);
    append_fit(rows, fit);
    const io::Provenance p = provenance(cfg, "analyze", cfg.seed);
    io::write_text(dir / "fit_report.txt", io::report(p, rows));

    const Spectrum& s = file.spectrum;
    std::vector<double> freqs, data;
    for (std::size_t i = 0; i < s.psd.size(); ++i) {
        if (s.frequencies[i] < fit.band_low || s.frequencies[i] > fit.band_high) continue;
        freqs.push_back(s.frequencies[i]);
        data.push_back(s.psd[i]);
    }
    const std::vector<double> model = fit_model(fit, osc, freqs, analysis.fit_options.in_loop);
    std::string csv = io::header(p) + "frequency_hz,psd,model\n";
    for (std::size_t i = 0; i < freqs.size(); ++i) csv += fmt::format("{},{},{}\n", freqs[i], data[i], model[i]);
    io::write_text(dir / "fit_model.csv", csv);

    fmt::print(out, "fit g {:.6g}  occupancy {:.6g}  T_eff {:.6g} K  valid {}\nwrote {}\n", fit.gain, fit.occupancy,
               fit.effective_temperature, yes_no(fit.valid), dir.string());
    return ok;
}

int cmd_sweep(const Common& c, std::ostream& out) {
    const RunConfig cfg = load(c);
    const SweepSpec spec = cfg.sweep_spec();
    const SweepResult res = run_sweep(spec);
    io::write_sweep(c.out, res, provenance(cfg, "sweep", cfg.seed));

    std::size_t failed = 0;
    std::string first_kind;
    for (const auto& p : res.points)
        if (!p.ok) {
            if (first_kind.empty()) first_kind = p.error_kind;
            ++failed;
        }
    fmt::print(out, "{} points, {} failed\n", res.points.size(), failed);
    if (res.crossover_analytic) fmt::print(out, "crossover (analytic) {:.6g} W\n", *res.crossover_analytic);
    if (res.crossover_estimate) fmt::print(out, "crossover (simulated) {:.6g} W\n", *res.crossover_estimate);
    if (res.minimum_index) {
        for (const auto& p : res.points)
            if (p.index == *res.minimum_index) {
                fmt::print(out, "minimum occupancy at {:.6g}\n", p.value);
                break;
            }
    }
    if (res.degradation_gain) fmt::print(out, "fit invalid from gain {:.6g}\n", *res.degradation_gain);
    fmt::print(out, "wrote {}\n", c.out);
    if (failed == res.points.size()) {
        if (first_kind == "simulation") return simulation_unstable;
        if (first_kind == "fit") return fit_failed;
        return config_error;
    }
    return ok;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Feedback cooling design, simulation and analysis toolkit"};
    app.require_subcommand(1);
    Common common;
    std::string input;

    auto add_common = [&common](CLI::App* sub) {
        sub->add_option("--config", common.config, "JSON configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", common.out, "output directory")->capture_default_str();
        sub->add_option("--seed", common.seed, "override simulation.seed");
        sub->add_option("--parallelism", common.parallelism, "override sweep.parallelism");
    };
    CLI::App* design = app.add_subcommand("design", "noise budget and device scaling report");
    CLI::App* simulate = app.add_subcommand("simulate", "simulate one run and analyze its spectra");
    CLI::App* analyze = app.add_subcommand("analyze", "fit an existing spectrum file");
    CLI::App* sweep = app.add_subcommand("sweep", "power, gain or temperature sweep");
    for (CLI::App* sub : {design, simulate, analyze, sweep}) add_common(sub);
    analyze->add_option("--input", input, "spectrum CSV written by simulate or sweep")
        ->required()
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return ok;
        }
        fmt::print(err, "error: {}\n", e.what());
        return other_error;
    }

    try {
        if (*design) return cmd_design(common, out);
        if (*simulate) return cmd_simulate(common, out);
        if (*analyze) return cmd_analyze(common, input, out);
        if (*sweep) return cmd_sweep(common, out);
    } catch (const ConfigError& e) {
        fmt::print(err, "config error: {}\n", e.what());
        return config_error;
    } catch (const SimulationError& e) {
        fmt::print(err, "simulation unstable: {} (loop gain {:.6g}, phase {:.6g} rad)\n", e.what(), e.loop_gain(),
                   e.loop_phase());
        return simulation_unstable;
    } catch (const FitError& e) {
        fmt::print(err, "fit failed: {}\n", e.what());
        return fit_failed;
    } catch (const DomainError& e) {
        fmt::print(err, "invalid parameters: {}\n", e.what());
        return config_error;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return other_error;
    }
    return other_error;
}

}  // namespace fbcool::cli
