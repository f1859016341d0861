#include "fbcool/config.hpp"

#include <fmt/format.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fbcool/errors.hpp"
#include "fbcool/rng.hpp"
#include "fbcool/units.hpp"
#include "json.hpp"

namespace fbcool {

using json = nlohmann::json;

namespace {

// Maps dotted key paths ("oscillator.mass") to the line where the key appears.
class LineMap {
public:
    explicit LineMap(std::string_view text) {
        std::vector<std::string> path;
        std::vector<char> kind;
        std::vector<bool> expect_key;
        std::string pending;
        int line = 1;
        for (std::size_t i = 0; i < text.size(); ++i) {
            const char c = text[i];
            if (c == '\n') {
                ++line;
            } else if (c == '"') {
                std::string s;
                for (++i; i < text.size() && text[i] != '"'; ++i) {
                    if (text[i] == '\\' && i + 1 < text.size()) ++i;
                    s += text[i];
                }
                if (!kind.empty() && kind.back() == '{' && expect_key.back()) {
                    lines_.emplace(join(path, s), line);
                    pending = s;
                    expect_key.back() = false;
                }
            } else if (c == '{' || c == '[') {
                const bool in_object = !kind.empty() && kind.back() == '{';
                path.push_back(kind.empty() ? "" : in_object ? pending : "[]");
                kind.push_back(c);
                expect_key.push_back(c == '{');
            } else if ((c == '}' || c == ']') && !kind.empty()) {
                path.pop_back();
                kind.pop_back();
                expect_key.pop_back();
            } else if (c == ',' && !kind.empty() && kind.back() == '{') {
                expect_key.back() = true;
            }
        }
    }

    [[nodiscard]] int line(const std::string& path) const {
        const auto it = lines_.find(path);
        return it == lines_.end() ? 0 : it->second;
    }

private:
    static std::string join(const std::vector<std::string>& path, const std::string& key) {
        std::string out;
        for (const auto& p : path) {
            if (p.empty()) continue;
            out += p;
            out += '.';
        }
        return out + key;
    }
    std::map<std::string, int> lines_;
};

class Section {
public:
    Section(const json& root, std::string name, const LineMap& lines, bool required)
        : name_(std::move(name)), lines_(lines) {
        const auto it = root.find(name_);
        if (it == root.end()) {
            if (required) throw ConfigError("missing required section '" + name_ + "'", 1);
            return;
        }
        if (!it->is_object()) throw ConfigError("section '" + name_ + "' must be an object", lines.line(name_));
        obj_ = &*it;
    }

    [[nodiscard]] bool present() const noexcept { return obj_ != nullptr; }
    [[nodiscard]] std::string path(const std::string& key) const { return name_ + "." + key; }
    [[nodiscard]] int line(const std::string& key) const {
        const int l = lines_.line(path(key));
        return l > 0 ? l : lines_.line(name_);
    }

    const json* get(const std::string& key) {
        used_.insert(key);
        if (!obj_) return nullptr;
        const auto it = obj_->find(key);
        return it == obj_->end() ? nullptr : &*it;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ConfigError(path(key) + ": " + msg, line(key));
    }

    const json& require(const std::string& key) {
        const json* v = get(key);
        if (!v) throw ConfigError(path(key) + ": missing required field", lines_.line(name_) > 0 ? lines_.line(name_) : 1);
        return *v;
    }

    double to_quantity(const std::string& key, const json& v, const units::Dimension& dim) const {
        if (v.is_number()) {
            if (dim == units::dimensionless) return v.get<double>();
            fail(key, "expected a quantity with unit (" + units::describe(dim) + "), e.g. \"1.5 " +
                          example_unit(dim) + "\"");
        }
        if (!v.is_string()) fail(key, "expected a quantity string");
        try {
            return units::parse_as(v.get<std::string>(), dim, path(key));
        } catch (const DomainError& e) {
            throw ConfigError(e.what(), line(key));
        }
    }

    void quantity(const std::string& key, const units::Dimension& dim, double& out) {
        if (const json* v = get(key)) out = to_quantity(key, *v, dim);
    }
    void quantity(const std::string& key, const units::Dimension& dim, std::optional<double>& out) {
        if (const json* v = get(key)) out = to_quantity(key, *v, dim);
    }
    double required_quantity(const std::string& key, const units::Dimension& dim) {
        return to_quantity(key, require(key), dim);
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = get(key)) {
            if (!v->is_boolean()) fail(key, "expected true or false");
            out = v->get<bool>();
        }
    }

    template <class Int>
    void integer(const std::string& key, Int& out, long long lo, long long hi) {
        if (const json* v = get(key)) out = to_integer<Int>(key, *v, lo, hi);
    }

    template <class Int>
    Int to_integer(const std::string& key, const json& v, long long lo, long long hi) const {
        if (!v.is_number_integer()) fail(key, "expected an integer");
        if (v.is_number_unsigned()) {
            const auto u = v.get<unsigned long long>();
            if (hi >= 0 && u > static_cast<unsigned long long>(hi)) fail(key, "out of range");
            return static_cast<Int>(u);
        }
        const auto i = v.get<long long>();
        if (i < lo || i > hi) fail(key, "out of range");
        return static_cast<Int>(i);
    }

    std::optional<std::string> string(const std::string& key) {
        const json* v = get(key);
        if (!v) return std::nullopt;
        if (!v->is_string()) fail(key, "expected a string");
        return v->get<std::string>();
    }

    void finish() const {
        if (!obj_) return;
        for (const auto& [k, _] : obj_->items())
            if (!used_.count(k)) throw ConfigError("unknown key '" + path(k) + "'", line(k));
    }

private:
    static std::string example_unit(const units::Dimension& d) {
        if (d == units::length) return "nm";
        if (d == units::mass) return "ng";
        if (d == units::frequency) return "kHz";
        if (d == units::power) return "mW";
        if (d == units::temperature) return "K";
        if (d == units::time) return "s";
        return "<unit>";
    }

    std::string name_;
    const LineMap& lines_;
    const json* obj_ = nullptr;
    std::set<std::string> used_;
};

BackactionRule parse_backaction_rule(Section& s, const std::string& key, const std::string& v) {
    if (v == "as_published") return BackactionRule::as_published;
    if (v == "inefficient_detection") return BackactionRule::inefficient_detection;
    s.fail(key, "expected \"as_published\" or \"inefficient_detection\"");
}

std::string_view backaction_rule_name(BackactionRule r) {
    return r == BackactionRule::as_published ? "as_published" : "inefficient_detection";
}

std::string_view in_loop_name(InLoopForm f) { return f == InLoopForm::exact ? "exact" : "as_published"; }

SweepVariable parse_variable(Section& s, const std::string& v) {
    if (v == "power") return SweepVariable::power;
    if (v == "gain") return SweepVariable::gain;
    if (v == "temperature") return SweepVariable::temperature;
    s.fail("variable", "expected \"power\", \"gain\" or \"temperature\"");
}

units::Dimension variable_dimension(SweepVariable v) {
    switch (v) {
        case SweepVariable::power: return units::power;
        case SweepVariable::temperature: return units::temperature;
        case SweepVariable::gain: return units::dimensionless;
    }
    return units::dimensionless;
}

std::string_view variable_unit(SweepVariable v) {
    switch (v) {
        case SweepVariable::power: return "W";
        case SweepVariable::temperature: return "K";
        case SweepVariable::gain: return "";
    }
    return "";
}

// Wraps DomainError from model validation into a line-anchored ConfigError.
template <class F>
void check(const Section& s, const std::string& key, F&& f) {
    try {
        f();
    } catch (const DomainError& e) {
        throw ConfigError(s.path(key) + ": " + e.what(), s.line(key));
    }
}

}  // namespace

Oscillator RunConfig::oscillator() const {
    Oscillator o;
    o.omega0 = two_pi * frequency;
    o.q0 = quality_factor;
    o.mass = mass;
    o.bath_temperature = temperature;
    return o;
}

double RunConfig::resolved_sample_rate() const { return simulation().resolved_sample_rate(oscillator()); }

FeedbackFilter RunConfig::feedback_filter() const {
    FeedbackFilter fb;
    fb.band_low = band_low;
    fb.band_high = band_high;
    fb.order = order;
    fb.gain = gain;
    fb.enabled = feedback_enabled;
    fb.max_force = max_force;
    if (delay_samples) {
        fb.delay_samples = *delay_samples;
    } else {
        fb.delay_samples = tune_delay(fb, resolved_sample_rate(), frequency, target_phase);
    }
    return fb;
}

SimulationConfig RunConfig::simulation() const {
    SimulationConfig s;
    s.sample_rate = sample_rate.value_or(0.0);
    s.samples_per_period = samples_per_period;
    s.duration = duration;
    s.seed = seed;
    s.include_backaction = include_backaction;
    s.backaction_rule = backaction_rule;
    s.calibration_tone = calibration_tone;
    s.thermal_noise = thermal_noise;
    s.measurement_noise = measurement_noise;
    s.initial_displacement = initial_displacement;
    s.settle_time = settle_time.value_or(-1.0);
    return s;
}

AnalysisSettings RunConfig::analysis() const {
    AnalysisSettings a;
    a.welch.segment_length = segment_length.value_or(0);
    a.welch.window = window;
    a.welch.overlap = overlap;
    a.fit = fit;
    a.fit_options.fit_linewidths = fit_linewidths;
    a.fit_options.max_detuning = max_detuning;
    a.fit_options.fit_floor = fit_floor;
    a.fit_options.in_loop = in_loop_form;
    if (fixed_inputs) {
        a.fixed_inputs = FixedInputs{fixed_inputs->n_th, fixed_inputs->n_imp, two_pi * fixed_inputs->linewidth,
                                     pi / 2.0 + fixed_inputs->phase_deviation};
    }
    a.floor_band_low = floor_band_low.value_or(0.0);
    a.floor_band_high = floor_band_high.value_or(0.0);
    return a;
}

ModelOptions RunConfig::model_options() const {
    ModelOptions m;
    m.include_backaction = include_backaction;
    m.backaction = backaction_rule;
    m.in_loop = in_loop_form;
    return m;
}

SweepSpec RunConfig::sweep_spec() const {
    if (!sweep) throw ConfigError("config has no 'sweep' section", 1);
    SweepSpec s;
    s.variable = sweep->variable;
    s.values = sweep->values;
    s.osc = oscillator();
    s.meas = measurement;
    s.fb = feedback_filter();
    s.sim = simulation();
    s.analysis = analysis();
    s.replicas = sweep->replicas;
    s.parallelism = sweep->parallelism;
    s.config_hash = config_hash(*this);
    return s;
}

RunConfig parse_config(std::string_view text) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        int line = 1;
        for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
            if (text[i] == '\n') ++line;
        throw ConfigError(std::string("invalid JSON: ") + e.what(), line);
    }
    if (!root.is_object()) throw ConfigError("top level must be an object", 1);
    const LineMap lines(text);
    static const std::set<std::string> sections{"oscillator", "measurement", "feedback_filter", "simulation",
                                                "analysis",   "sweep",       "geometry"};
    for (const auto& [k, _] : root.items())
        if (!sections.count(k)) throw ConfigError("unknown section '" + k + "'", lines.line(k));

    RunConfig c;

    Section osc(root, "oscillator", lines, true);
    c.frequency = osc.required_quantity("frequency", units::frequency);
    c.quality_factor = osc.required_quantity("quality_factor", units::dimensionless);
    c.mass = osc.required_quantity("mass", units::mass);
    c.temperature = osc.required_quantity("temperature", units::temperature);
    osc.finish();
    check(osc, "frequency", [&] { c.oscillator().validate(); });

    Section meas(root, "measurement", lines, false);
    meas.quantity("power", units::power, c.measurement.power);
    meas.quantity("wavelength", units::length, c.measurement.wavelength);
    meas.quantity("reflectance", units::dimensionless, c.measurement.reflectance);
    meas.quantity("efficiency", units::dimensionless, c.measurement.efficiency);
    if (const json* v = meas.get("extraneous_imprecision")) {
        // Either a PSD (m^2/Hz) or an amplitude density (m/rtHz).
        if (!v->is_string()) meas.fail("extraneous_imprecision", "expected a quantity string");
        units::Quantity q{};
        try {
            q = units::parse_quantity(v->get<std::string>());
        } catch (const DomainError& e) {
            meas.fail("extraneous_imprecision", e.what());
        }
        if (q.dim == units::displacement_psd) {
            c.measurement.extraneous_imprecision = q.value;
        } else if (q.dim == units::displacement_amplitude) {
            c.measurement.extraneous_imprecision = q.value * q.value;
        } else {
            meas.fail("extraneous_imprecision", "expected m^2/Hz or m/rtHz");
        }
    }
    meas.boolean("include_backaction", c.include_backaction);
    if (auto r = meas.string("backaction_rule")) c.backaction_rule = parse_backaction_rule(meas, "backaction_rule", *r);
    meas.finish();
    check(meas, "power", [&] { c.measurement.validate(); });

    Section fb(root, "feedback_filter", lines, false);
    fb.boolean("enabled", c.feedback_enabled);
    fb.quantity("gain", units::dimensionless, c.gain);
    fb.quantity("band_low", units::frequency, c.band_low);
    fb.quantity("band_high", units::frequency, c.band_high);
    fb.integer("order", c.order, 1, 8);
    if (const json* v = fb.get("delay_samples")) {
        if (v->is_string() && v->get<std::string>() == "auto") {
            c.delay_samples.reset();
        } else {
            c.delay_samples = fb.to_integer<int>("delay_samples", *v, 0, 1 << 20);
        }
    }
    fb.quantity("target_phase", units::dimensionless, c.target_phase);
    fb.quantity("max_force", units::force, c.max_force);
    fb.finish();

    Section sim(root, "simulation", lines, false);
    sim.quantity("duration", units::time, c.duration);
    sim.quantity("sample_rate", units::frequency, c.sample_rate);
    sim.quantity("samples_per_period", units::dimensionless, c.samples_per_period);
    if (const json* v = sim.get("seed")) c.seed = sim.to_integer<std::uint64_t>("seed", *v, 0, -1);
    if (const json* v = sim.get("settle_time")) {
        if (v->is_string() && v->get<std::string>() == "auto")
            c.settle_time.reset();
        else
            c.settle_time = sim.to_quantity("settle_time", *v, units::time);
    }
    sim.boolean("thermal_noise", c.thermal_noise);
    sim.boolean("measurement_noise", c.measurement_noise);
    if (const json* v = sim.get("calibration_tone")) {
        if (!v->is_object()) sim.fail("calibration_tone", "expected an object with frequency and amplitude");
        CalibrationTone t{};
        for (const auto& [k, val] : v->items()) {
            if (k == "frequency")
                t.frequency = sim.to_quantity("calibration_tone." + k, val, units::frequency);
            else if (k == "amplitude")
                t.amplitude = sim.to_quantity("calibration_tone." + k, val, units::length);
            else
                throw ConfigError("unknown key 'simulation.calibration_tone." + k + "'",
                                  sim.line("calibration_tone." + k));
        }
        if (!v->contains("frequency") || !v->contains("amplitude"))
            sim.fail("calibration_tone", "needs both frequency and amplitude");
        c.calibration_tone = t;
    }
    sim.quantity("initial_displacement", units::length, c.initial_displacement);
    sim.boolean("write_timeseries", c.write_timeseries);
    sim.finish();
    if (!(c.duration > 0.0)) sim.fail("duration", "must be > 0");
    check(sim, "sample_rate", [&] { (void)c.resolved_sample_rate(); });
    check(fb, "band_high", [&] {
        FeedbackFilter f = c.feedback_filter();
        f.validate();
        if (!(f.band_high < 0.5 * c.resolved_sample_rate())) throw DomainError("band_high must be below Nyquist");
    });

    Section an(root, "analysis", lines, false);
    if (const json* v = an.get("segment_length")) {
        if (v->is_string() && v->get<std::string>() == "auto")
            c.segment_length.reset();
        else
            c.segment_length = an.to_integer<std::size_t>("segment_length", *v, 8, 1LL << 40);
    }
    if (auto w = an.string("window")) check(an, "window", [&] { c.window = window_from_name(*w); });
    an.quantity("overlap", units::dimensionless, c.overlap);
    an.boolean("fit", c.fit);
    an.boolean("fit_floor", c.fit_floor);
    if (auto f = an.string("in_loop_form")) {
        if (*f == "exact")
            c.in_loop_form = InLoopForm::exact;
        else if (*f == "as_published")
            c.in_loop_form = InLoopForm::as_published;
        else
            an.fail("in_loop_form", "expected \"exact\" or \"as_published\"");
    }
    an.quantity("fit_linewidths", units::dimensionless, c.fit_linewidths);
    an.quantity("max_detuning", units::dimensionless, c.max_detuning);
    an.quantity("floor_band_low", units::frequency, c.floor_band_low);
    an.quantity("floor_band_high", units::frequency, c.floor_band_high);
    an.boolean("calibrate", c.calibrate);
    if (const json* v = an.get("fixed_inputs")) {
        if (!v->is_object()) an.fail("fixed_inputs", "expected an object");
        FixedInputsConfig f{};
        std::set<std::string> seen;
        for (const auto& [k, val] : v->items()) {
            const std::string key = "fixed_inputs." + k;
            if (k == "n_th")
                f.n_th = an.to_quantity(key, val, units::dimensionless);
            else if (k == "n_imp")
                f.n_imp = an.to_quantity(key, val, units::dimensionless);
            else if (k == "linewidth")
                f.linewidth = an.to_quantity(key, val, units::frequency);
            else if (k == "phase_deviation")
                f.phase_deviation = an.to_quantity(key, val, units::dimensionless);
            else
                throw ConfigError("unknown key 'analysis." + key + "'", an.line(key));
            seen.insert(k);
        }
        for (const char* k : {"n_th", "n_imp", "linewidth", "phase_deviation"})
            if (!seen.count(k)) an.fail("fixed_inputs", std::string("missing '") + k + "'");
        if (!(f.n_th > 0.0 && f.n_imp > 0.0 && f.linewidth > 0.0))
            an.fail("fixed_inputs", "n_th, n_imp and linewidth must be > 0");
        if (!(std::abs(f.phase_deviation) < pi / 2.0)) an.fail("fixed_inputs", "|phase_deviation| must be < 90 deg");
        c.fixed_inputs = f;
    }
    an.finish();
    check(an, "overlap", [&] {
        WelchOptions w;
        w.segment_length = c.segment_length.value_or(8);
        w.overlap = c.overlap;
        w.validate();
        if (!(c.fit_linewidths > 0.0 && c.max_detuning > 0.0)) throw DomainError("fit band settings must be > 0");
    });

    Section sw(root, "sweep", lines, false);
    if (sw.present()) {
        SweepSection s;
        const auto var = sw.string("variable");
        if (!var) sw.fail("variable", "missing required field");
        s.variable = parse_variable(sw, *var);
        const units::Dimension dim = variable_dimension(s.variable);
        const json& values = sw.require("values");
        if (values.is_array()) {
            for (const auto& v : values) s.values.push_back(sw.to_quantity("values", v, dim));
        } else if (values.is_object()) {
            double start = 0.0, stop = 0.0;
            std::size_t points = 0;
            for (const auto& [k, val] : values.items()) {
                if (k == "start")
                    start = sw.to_quantity("values.start", val, dim);
                else if (k == "stop")
                    stop = sw.to_quantity("values.stop", val, dim);
                else if (k == "points")
                    points = sw.to_integer<std::size_t>("values.points", val, 1, 100000);
                else
                    throw ConfigError("unknown key 'sweep.values." + k + "'", sw.line("values." + k));
            }
            check(sw, "values", [&] { s.values = log_ladder(start, stop, points); });
        } else if (values.is_string() && values.get<std::string>() == "default" &&
                   s.variable == SweepVariable::gain) {
            s.values = default_gain_ladder(c.oscillator());
        } else {
            sw.fail("values", "expected a list, {start, stop, points} or \"default\" (gain)");
        }
        sw.integer("replicas", s.replicas, 1, 1000000);
        sw.integer("parallelism", s.parallelism, 1, 4096);
        sw.finish();
        check(sw, "values", [&] {
            SweepSpec probe;
            probe.values = s.values;
            probe.replicas = s.replicas;
            probe.parallelism = s.parallelism;
            probe.validate();
        });
        c.sweep = s;
    }

    Section geo(root, "geometry", lines, false);
    geo.quantity("tether_length", units::length, c.geometry.tether_length);
    geo.quantity("tether_width", units::length, c.geometry.tether_width);
    geo.quantity("thickness", units::length, c.geometry.thickness);
    geo.quantity("stress", units::pressure, c.geometry.stress);
    geo.quantity("q_material", units::dimensionless, c.geometry.q_material);
    geo.quantity("thermal_conductivity", units::thermal_conductivity, c.geometry.thermal_conductivity);
    geo.quantity("absorption", units::dimensionless, c.geometry.absorption);
    geo.quantity("window_size", units::length, c.geometry.window_size);
    geo.finish();
    check(geo, "tether_length", [&] { c.geometry.validate(); });

    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

namespace {

std::string q(double v, std::string_view unit) {
    return unit.empty() ? fmt::format("{}", v) : fmt::format("{} {}", v, unit);
}

json to_json(const RunConfig& c) {
    json j;
    j["oscillator"] = {{"frequency", q(c.frequency, "Hz")},
                       {"quality_factor", c.quality_factor},
                       {"mass", q(c.mass, "kg")},
                       {"temperature", q(c.temperature, "K")}};
    j["measurement"] = {{"power", q(c.measurement.power, "W")},
                        {"wavelength", q(c.measurement.wavelength, "m")},
                        {"reflectance", c.measurement.reflectance},
                        {"efficiency", c.measurement.efficiency},
                        {"extraneous_imprecision", q(c.measurement.extraneous_imprecision, "m^2/Hz")},
                        {"include_backaction", c.include_backaction},
                        {"backaction_rule", backaction_rule_name(c.backaction_rule)}};
    json fb = {{"enabled", c.feedback_enabled},
               {"gain", c.gain},
               {"band_low", q(c.band_low, "Hz")},
               {"band_high", q(c.band_high, "Hz")},
               {"order", c.order},
               {"target_phase", c.target_phase}};
    fb["delay_samples"] = c.delay_samples ? json(*c.delay_samples) : json("auto");
    if (c.max_force) fb["max_force"] = q(*c.max_force, "N");
    j["feedback_filter"] = fb;

    json sim = {{"duration", q(c.duration, "s")},
                {"samples_per_period", c.samples_per_period},
                {"seed", c.seed},
                {"thermal_noise", c.thermal_noise},
                {"measurement_noise", c.measurement_noise},
                {"write_timeseries", c.write_timeseries}};
    if (c.sample_rate) sim["sample_rate"] = q(*c.sample_rate, "Hz");
    sim["settle_time"] = c.settle_time ? json(q(*c.settle_time, "s")) : json("auto");
    if (c.calibration_tone)
        sim["calibration_tone"] = {{"frequency", q(c.calibration_tone->frequency, "Hz")},
                                   {"amplitude", q(c.calibration_tone->amplitude, "m")}};
    if (c.initial_displacement) sim["initial_displacement"] = q(*c.initial_displacement, "m");
    j["simulation"] = sim;

    json an = {{"window", window_name(c.window)},
               {"overlap", c.overlap},
               {"fit", c.fit},
               {"fit_floor", c.fit_floor},
               {"in_loop_form", in_loop_name(c.in_loop_form)},
               {"fit_linewidths", c.fit_linewidths},
               {"max_detuning", c.max_detuning},
               {"calibrate", c.calibrate}};
    an["segment_length"] = c.segment_length ? json(*c.segment_length) : json("auto");
    if (c.floor_band_low) an["floor_band_low"] = q(*c.floor_band_low, "Hz");
    if (c.floor_band_high) an["floor_band_high"] = q(*c.floor_band_high, "Hz");
    if (c.fixed_inputs)
        an["fixed_inputs"] = {{"n_th", c.fixed_inputs->n_th},
                              {"n_imp", c.fixed_inputs->n_imp},
                              {"linewidth", q(c.fixed_inputs->linewidth, "Hz")},
                              {"phase_deviation", c.fixed_inputs->phase_deviation}};
    j["analysis"] = an;

    if (c.sweep) {
        json values = json::array();
        const std::string_view unit = variable_unit(c.sweep->variable);
        for (double v : c.sweep->values) values.push_back(unit.empty() ? json(v) : json(q(v, unit)));
        j["sweep"] = {{"variable", sweep_variable_name(c.sweep->variable)},
                      {"values", values},
                      {"replicas", c.sweep->replicas},
                      {"parallelism", c.sweep->parallelism}};
    }

    j["geometry"] = {{"tether_length", q(c.geometry.tether_length, "m")},
                     {"tether_width", q(c.geometry.tether_width, "m")},
                     {"thickness", q(c.geometry.thickness, "m")},
                     {"stress", q(c.geometry.stress, "Pa")},
                     {"q_material", c.geometry.q_material},
                     {"thermal_conductivity", q(c.geometry.thermal_conductivity, "W/(m K)")},
                     {"absorption", c.geometry.absorption},
                     {"window_size", q(c.geometry.window_size, "m")}};
    return j;
}

}  // namespace

std::string canonical_json(const RunConfig& cfg, int indent) { return to_json(cfg).dump(indent); }

std::string config_hash(const RunConfig& cfg) {
    // Parallelism does not change results, so it does not enter the hash.
    RunConfig c = cfg;
    if (c.sweep) c.sweep->parallelism = 1;
    return fmt::format("{:016x}", fnv1a64(canonical_json(c, -1)));
}

}  // namespace fbcool
