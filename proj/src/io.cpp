#include "fbcool/io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <sstream>

#include "fbcool/errors.hpp"
#include "json.hpp"

namespace fbcool::io {

namespace fs = std::filesystem;

std::string num(double v) { return fmt::format("{}", v); }

std::string header(const Provenance& p, const std::vector<std::pair<std::string, std::string>>& extra) {
    std::string out = fmt::format("# fbcool {}\n# config_hash: {}\n# seed: {}\n", p.kind, p.config_hash, p.seed);
    for (const auto& [k, v] : extra) out += fmt::format("# {}: {}\n", k, v);
    if (!p.config_json.empty()) out += fmt::format("# config: {}\n", p.config_json);
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

void write_spectrum_csv(const fs::path& path, const Spectrum& s, const Provenance& p) {
    std::string text = header(p, {{"sample_rate_hz", num(s.sample_rate)},
                                  {"bin_width_hz", num(s.bin_width)},
                                  {"resolution_bandwidth_hz", num(s.resolution_bandwidth)},
                                  {"averages", num(s.averages)},
                                  {"segments", std::to_string(s.segments)},
                                  {"segment_length", std::to_string(s.segment_length)},
                                  {"overlap", num(s.overlap)},
                                  {"window", std::string(window_name(s.window))},
                                  {"duration_s", num(s.duration)}});
    text += "frequency_hz,psd\n";
    for (std::size_t i = 0; i < s.psd.size(); ++i) text += fmt::format("{},{}\n", s.frequencies[i], s.psd[i]);
    write_text(path, text);
}

namespace {

double to_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw Error("bad number for " + what + ": '" + s + "'");
    return v;
}

}  // namespace

SpectrumFile read_spectrum_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path.string() + "'");
    SpectrumFile f;
    std::string line;
    bool columns = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto colon = line.find(": ");
            if (colon != std::string::npos && colon > 2) f.meta[line.substr(2, colon - 2)] = line.substr(colon + 2);
            continue;
        }
        if (!columns) {
            if (line != "frequency_hz,psd") throw Error(path.string() + ": expected 'frequency_hz,psd' header");
            columns = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw Error(path.string() + ":" + std::to_string(lineno) + ": bad row");
        const std::string where = path.string() + ":" + std::to_string(lineno);
        f.spectrum.frequencies.push_back(to_double(line.substr(0, comma), where));
        f.spectrum.psd.push_back(to_double(line.substr(comma + 1), where));
    }
    Spectrum& s = f.spectrum;
    if (s.psd.size() < 2) throw Error(path.string() + ": no spectrum rows");
    auto meta = [&](const char* key, double fallback) {
        const auto it = f.meta.find(key);
        return it == f.meta.end() ? fallback : to_double(it->second, key);
    };
    s.bin_width = meta("bin_width_hz", s.frequencies[1] - s.frequencies[0]);
    s.sample_rate = meta("sample_rate_hz", 2.0 * s.frequencies.back());
    s.resolution_bandwidth = meta("resolution_bandwidth_hz", s.bin_width);
    s.averages = meta("averages", 1.0);
    s.segments = static_cast<std::size_t>(meta("segments", 1.0));
    s.segment_length = static_cast<std::size_t>(meta("segment_length", 2.0 * static_cast<double>(s.psd.size() - 1)));
    s.overlap = meta("overlap", 0.0);
    s.duration = meta("duration_s", 0.0);
    if (const auto it = f.meta.find("window"); it != f.meta.end()) s.window = window_from_name(it->second);
    return f;
}

TimeSeriesWriter::TimeSeriesWriter(const fs::path& path, const Provenance& p, double sample_rate)
    : dt_(1.0 / sample_rate) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot write '" + path.string() + "'");
    out_ << header(p, {{"sample_rate_hz", num(sample_rate)}}) << "t,x,y,f_fb\n";
}

void TimeSeriesWriter::write(const SampleBlock& b) {
    buffer_.clear();
    for (std::size_t i = 0; i < b.x.size(); ++i) {
        const double t = static_cast<double>(b.offset + i) * dt_;
        fmt::format_to(std::back_inserter(buffer_), "{},{},{},{}\n", t, b.x[i], b.y[i], b.f_fb[i]);
    }
    out_ << buffer_;
    if (!out_) throw Error("time series write failed");
}

std::string report(const Provenance& p, const std::vector<std::pair<std::string, std::string>>& rows) {
    std::string out = header(p);
    for (const auto& [k, v] : rows) out += fmt::format("{}: {}\n", k, v);
    return out;
}

void write_sweep(const fs::path& dir, const SweepResult& r, const Provenance& p) {
    fs::create_directories(dir / "spectra");
    const bool power = r.variable == SweepVariable::power;

    nlohmann::json manifest;
    manifest["config"] = p.config_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(p.config_json);
    manifest["config_hash"] = r.config_hash;
    manifest["master_seed"] = r.master_seed;
    manifest["variable"] = std::string(sweep_variable_name(r.variable));
    nlohmann::json points = nlohmann::json::array();

    std::string summary = header(p);
    if (power) {
        summary += "power_w,replica,seed,ok,shot_imprecision,analytic_imprecision,simulated_floor,floor_sigma,regime,"
                   "error\n";
    } else {
        summary += fmt::format(
            "{},replica,seed,ok,realized_gain,loop_phase,n_fit,n_sim,n_analytic,fit_gain,fit_valid,fit_clipped,"
            "fit_residual,squashed,resonance_psd,floor_psd,error\n",
            r.variable == SweepVariable::gain ? "gain" : "temperature_k");
    }

    for (const SweepPoint& pt : r.points) {
        const std::string file = fmt::format("point_{}_r{}.csv", pt.index, pt.replica);
        nlohmann::json entry = {{"index", pt.index},  {"replica", pt.replica}, {"value", pt.value},
                                {"seed", pt.seed},    {"ok", pt.ok},           {"error", pt.error},
                                {"error_kind", pt.error_kind}};
        if (pt.ok && !pt.run.y_spectrum.psd.empty()) {
            Provenance sp = p;
            sp.kind = "spectrum_y";
            sp.seed = pt.seed;
            sp.config_json.clear();
            write_spectrum_csv(dir / "spectra" / file, pt.run.y_spectrum, sp);
            entry["spectrum"] = "spectra/" + file;
        }
        points.push_back(entry);

        std::string err = pt.error;
        for (char& c : err)
            if (c == ',' || c == '\n') c = ';';
        if (pt.ok && !pt.run.fit_error.empty() && err.empty()) err = "fit: " + pt.run.fit_error;
        for (char& c : err)
            if (c == ',' || c == '\n') c = ';';
        if (power) {
            summary += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", pt.value, pt.replica, pt.seed, pt.ok ? 1 : 0,
                                   pt.shot_imprecision, pt.analytic_imprecision, pt.run.floor_psd,
                                   pt.run.floor_sigma, regime_name(pt.regime), err);
        } else {
            const auto& f = pt.run.fit;
            summary += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", pt.value, pt.replica,
                                   pt.seed, pt.ok ? 1 : 0, pt.run.realized_gain, pt.run.loop_phase,
                                   f ? num(f->occupancy) : "", pt.run.n_sim, pt.run.n_analytic,
                                   f ? num(f->gain) : "", f ? (f->valid ? "1" : "0") : "",
                                   f ? (f->clipped ? "1" : "0") : "", f ? num(f->residual) : "",
                                   pt.run.squashed ? 1 : 0, pt.run.resonance_psd, pt.run.floor_psd, err);
        }
    }
    manifest["points"] = points;
    if (r.crossover_analytic) manifest["crossover_power_analytic_w"] = *r.crossover_analytic;
    if (r.crossover_estimate) manifest["crossover_power_estimate_w"] = *r.crossover_estimate;
    if (r.extraneous_estimate) manifest["extraneous_imprecision_estimate"] = *r.extraneous_estimate;
    if (r.minimum_index) {
        manifest["minimum_index"] = *r.minimum_index;
        for (const SweepPoint& pt : r.points)
            if (pt.index == *r.minimum_index) {
                manifest["minimum_value"] = pt.value;
                break;
            }
    }
    if (r.degradation_gain) manifest["degradation_gain"] = *r.degradation_gain;

    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    write_text(dir / "summary.csv", summary);
}

}  // namespace fbcool::io
