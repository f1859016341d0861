#pragma once

// CSV and text artifacts. Every file starts with '#'-prefixed provenance
// lines (kind, config hash, seed, canonical config) and contains no
// timestamps, so reruns are byte-identical. Numbers use the shortest
// representation that round-trips.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fbcool/experiments.hpp"
#include "fbcool/langevin.hpp"
#include "fbcool/spectrum.hpp"

namespace fbcool::io {

[[nodiscard]] std::string num(double v);

struct Provenance {
    std::string kind;            // e.g. "spectrum_y", "timeseries"
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string config_json;     // compact canonical config; omitted if empty
};

/// "# key: value" lines.
[[nodiscard]] std::string header(const Provenance& p,
                                 const std::vector<std::pair<std::string, std::string>>& extra = {});

/// Columns frequency_hz, psd; spectrum metadata goes in the header.
void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& s, const Provenance& p);

struct SpectrumFile {
    Spectrum spectrum;
    std::map<std::string, std::string> meta;  // header key/values
};
/// Reads a file written by write_spectrum_csv. Throws Error on malformed input.
[[nodiscard]] SpectrumFile read_spectrum_csv(const std::filesystem::path& path);

/// Streams t, x, y, f_fb rows as blocks arrive.
class TimeSeriesWriter {
public:
    TimeSeriesWriter(const std::filesystem::path& path, const Provenance& p, double sample_rate);
    void write(const SampleBlock& block);

private:
    std::ofstream out_;
    double dt_;
    std::string buffer_;
};

void write_text(const std::filesystem::path& path, const std::string& text);

/// "key: value" report lines after the provenance header.
[[nodiscard]] std::string report(const Provenance& p, const std::vector<std::pair<std::string, std::string>>& rows);

/// Sweep directory: manifest.json, summary.csv, spectra/point_<i>_r<j>.csv.
void write_sweep(const std::filesystem::path& dir, const SweepResult& result, const Provenance& p);

}  // namespace fbcool::io
