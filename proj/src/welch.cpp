#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <string>

#include "fbcool/errors.hpp"
#include "fbcool/kernels.hpp"
#include "fbcool/spectrum.hpp"

namespace fbcool {

namespace {

// FFTW's planner is not thread safe; execution of distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

std::string_view window_name(Window w) noexcept {
    switch (w) {
        case Window::rectangular: return "rectangular";
        case Window::hann: return "hann";
        case Window::blackman_harris: return "blackman_harris";
    }
    return "unknown";
}

Window window_from_name(std::string_view name) {
    if (name == "rectangular") return Window::rectangular;
    if (name == "hann") return Window::hann;
    if (name == "blackman_harris") return Window::blackman_harris;
    throw DomainError("unknown window '" + std::string(name) + "'");
}

std::vector<double> make_window(Window w, std::size_t n) {
    std::vector<double> out(n, 1.0);
    const double step = two_pi / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = step * static_cast<double>(i);
        switch (w) {
            case Window::rectangular: break;
            case Window::hann: out[i] = 0.5 - 0.5 * std::cos(t); break;
            case Window::blackman_harris:
                out[i] = 0.35875 - 0.48829 * std::cos(t) + 0.14128 * std::cos(2 * t) - 0.01168 * std::cos(3 * t);
                break;
        }
    }
    return out;
}

std::size_t Spectrum::bin(double freq) const noexcept {
    if (psd.empty() || !(bin_width > 0.0)) return 0;
    const double k = std::round((freq - frequencies.front()) / bin_width);
    if (k <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(k), psd.size() - 1);
}

double Spectrum::integrate(double f_lo, double f_hi) const noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < psd.size(); ++i)
        if (frequencies[i] >= f_lo && frequencies[i] <= f_hi) acc += psd[i];
    return acc * bin_width;
}

double Spectrum::band_mean(double f_lo, double f_hi) const noexcept {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < psd.size(); ++i) {
        if (frequencies[i] >= f_lo && frequencies[i] <= f_hi) {
            acc += psd[i];
            ++n;
        }
    }
    return n ? acc / static_cast<double>(n) : std::nan("");
}

void Spectrum::scale(double factor) noexcept {
    for (double& v : psd) v *= factor;
}

void WelchOptions::validate() const {
    if (segment_length < 8) throw DomainError("welch: segment_length must be >= 8");
    if (!(overlap >= 0.0 && overlap <= 0.9)) throw DomainError("welch: overlap must be in [0, 0.9]");
}

double welch_effective_averages(std::span<const double> window, std::size_t hop, std::size_t segments) {
    if (segments == 0) return 0.0;
    const std::size_t n = window.size();
    double w2 = 0.0;
    for (double w : window) w2 += w * w;
    const double k = static_cast<double>(segments);
    double sum = 0.0;
    for (std::size_t j = 1; j < segments && j * hop < n; ++j) {
        double c = 0.0;
        for (std::size_t i = 0; i + j * hop < n; ++i) c += window[i] * window[i + j * hop];
        const double rho = c / w2;
        sum += (1.0 - static_cast<double>(j) / k) * rho * rho;
    }
    return k / (1.0 + 2.0 * sum);
}

struct WelchAccumulator::Impl {
    double fs;
    WelchOptions opts;
    std::size_t hop;
    std::vector<double> window;
    double window_power;
    std::vector<double> pending;  // samples not yet consumed by a full segment
    std::vector<double> acc;
    std::size_t segments = 0;
    double* in = nullptr;
    fftw_complex* out = nullptr;
    fftw_plan plan = nullptr;

    Impl(double sample_rate, const WelchOptions& o) : fs(sample_rate), opts(o) {
        opts.validate();
        if (!(fs > 0.0)) throw DomainError("welch: sample_rate must be > 0");
        const std::size_t n = opts.segment_length;
        hop = n - static_cast<std::size_t>(std::llround(opts.overlap * static_cast<double>(n)));
        if (hop == 0) hop = 1;
        window = make_window(opts.window, n);
        window_power = std::inner_product(window.begin(), window.end(), window.begin(), 0.0);
        acc.assign(n / 2 + 1, 0.0);
        in = fftw_alloc_real(n);
        out = fftw_alloc_complex(n / 2 + 1);
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    ~Impl() {
        {
            std::lock_guard lock(planner_mutex());
            if (plan) fftw_destroy_plan(plan);
        }
        fftw_free(in);
        fftw_free(out);
    }

    void segment(const double* data) {
        const std::size_t n = opts.segment_length;
        kernels::apply_window(std::span<const double>(data, n), window, std::span<double>(in, n));
        fftw_execute(plan);
        kernels::accumulate_power(std::span<const double>(reinterpret_cast<const double*>(out), 2 * acc.size()),
                                  acc);
        ++segments;
    }

    void push(std::span<const double> s) {
        const std::size_t n = opts.segment_length;
        pending.insert(pending.end(), s.begin(), s.end());
        std::size_t start = 0;
        while (pending.size() - start >= n) {
            segment(pending.data() + start);
            start += hop;
        }
        if (start > 0) {
            const std::size_t drop = std::min(start, pending.size());
            pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(drop));
        }
    }
};

WelchAccumulator::WelchAccumulator(double sample_rate, const WelchOptions& opts)
    : impl_(std::make_unique<Impl>(sample_rate, opts)) {}
WelchAccumulator::~WelchAccumulator() = default;
WelchAccumulator::WelchAccumulator(WelchAccumulator&&) noexcept = default;
WelchAccumulator& WelchAccumulator::operator=(WelchAccumulator&&) noexcept = default;

void WelchAccumulator::push(std::span<const double> samples) { impl_->push(samples); }
std::size_t WelchAccumulator::segments() const noexcept { return impl_->segments; }

Spectrum WelchAccumulator::result() const {
    const Impl& d = *impl_;
    if (d.segments == 0) throw DomainError("welch: record shorter than one segment");
    const std::size_t n = d.opts.segment_length;
    Spectrum s;
    s.sample_rate = d.fs;
    s.segment_length = n;
    s.overlap = d.opts.overlap;
    s.window = d.opts.window;
    s.segments = d.segments;
    s.bin_width = d.fs / static_cast<double>(n);
    double w_sum = 0.0;
    for (double w : d.window) w_sum += w;
    s.resolution_bandwidth = d.fs * d.window_power / (w_sum * w_sum);
    s.averages = welch_effective_averages(d.window, d.hop, d.segments);
    s.duration = static_cast<double>((d.segments - 1) * d.hop + n) / d.fs;
    const double norm = 1.0 / (d.fs * d.window_power * static_cast<double>(d.segments));
    s.frequencies.resize(d.acc.size());
    s.psd.resize(d.acc.size());
    for (std::size_t k = 0; k < d.acc.size(); ++k) {
        s.frequencies[k] = s.bin_width * static_cast<double>(k);
        const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
        s.psd[k] = (edge ? 1.0 : 2.0) * d.acc[k] * norm;
    }
    return s;
}

Spectrum welch_psd(std::span<const double> series, double sample_rate, const WelchOptions& opts) {
    opts.validate();
    if (series.size() < opts.segment_length) throw DomainError("welch: record shorter than one segment");
    WelchAccumulator acc(sample_rate, opts);
    acc.push(series);
    return acc.result();
}

OccupancyEstimate occupancy_from_variance(std::span<const double> x, const Oscillator& osc, double meters_per_unit,
                                          const PhysicalConstants& k) {
    if (x.empty()) throw DomainError("occupancy_from_variance: empty record");
    const kernels::Moments m = kernels::moments(x);
    const double mean_sq = m.sum_sq / static_cast<double>(x.size()) * meters_per_unit * meters_per_unit;
    const double zp = zero_point_motion(osc, k);
    const double n = mean_sq / (2.0 * zp * zp) - 0.5;
    if (n <= 0.0) return {0.0, true};
    return {n, false};
}

}  // namespace fbcool
