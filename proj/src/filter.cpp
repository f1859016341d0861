#include "fbcool/filter.hpp"

#include <algorithm>
#include <cmath>

#include "fbcool/errors.hpp"

namespace fbcool {

using cplx = std::complex<double>;

void FeedbackFilter::validate() const {
    if (!(band_low > 0.0 && band_low < band_high)) throw DomainError("feedback filter: need 0 < band_low < band_high");
    if (order < 1 || order > 8) throw DomainError("feedback filter: order must be in [1, 8]");
    if (delay_samples < 0) throw DomainError("feedback filter: delay_samples must be >= 0");
    if (!(gain >= 0.0) || !std::isfinite(gain)) throw DomainError("feedback filter: gain must be >= 0");
    if (max_force && !(*max_force > 0.0)) throw DomainError("feedback filter: max_force must be > 0");
}

BandpassFilter::BandpassFilter(const FeedbackFilter& spec, double sample_rate) : sample_rate_(sample_rate) {
    spec.validate();
    if (!(spec.band_high < 0.5 * sample_rate))
        throw DomainError("feedback filter: band_high must be below Nyquist");

    const double k = 2.0 * sample_rate;
    const double w_lo = k * std::tan(pi * spec.band_low / sample_rate);
    const double w_hi = k * std::tan(pi * spec.band_high / sample_rate);
    const double bw = w_hi - w_lo;
    const double w0_sq = w_lo * w_hi;
    center_ = std::atan(std::sqrt(w0_sq) / k) * sample_rate / pi;

    // Low-pass prototype poles in the upper half plane; their conjugates are
    // implied by the real-coefficient sections built below.
    const int n = spec.order;
    std::vector<cplx> s_poles;
    for (int i = 0; i < n; ++i) {
        const cplx p = std::polar(1.0, pi * (2.0 * i + n + 1.0) / (2.0 * n));
        const cplx disc = std::sqrt(p * p * bw * bw - 4.0 * w0_sq);
        s_poles.push_back(0.5 * (p * bw + disc));
        s_poles.push_back(0.5 * (p * bw - disc));
    }

    // Keep one representative of each conjugate pair (imag >= 0); pair up
    // any purely real poles.
    std::vector<cplx> upper, reals;
    for (const cplx& s : s_poles) {
        const cplx z = (k + s) / (k - s);
        if (std::abs(z.imag()) < 1e-12 * std::abs(z)) {
            reals.push_back(cplx(z.real(), 0.0));
        } else if (z.imag() > 0.0) {
            upper.push_back(z);
        }
    }
    std::sort(reals.begin(), reals.end(), [](cplx a, cplx b) { return a.real() < b.real(); });

    auto add_section = [&](double a1, double a2) {
        // Zeros at z = +1 and z = -1 per section: numerator 1 - z^-2.
        sections_.push_back(Biquad{1.0, 0.0, -1.0, a1, a2});
    };
    for (const cplx& z : upper) add_section(-2.0 * z.real(), std::norm(z));
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2)
        add_section(-(reals[i].real() + reals[i + 1].real()), reals[i].real() * reals[i + 1].real());

    // Unit magnitude at the center, spread evenly over the sections.
    const cplx zc = std::polar(1.0, two_pi * center_ / sample_rate);
    const cplx zi = 1.0 / zc;
    for (auto& s : sections_) {
        const cplx h = (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
        const double g = 1.0 / std::abs(h);
        s.b0 *= g;
        s.b1 *= g;
        s.b2 *= g;
    }
}

void BandpassFilter::reset() noexcept {
    for (auto& s : sections_) s.z1 = s.z2 = 0.0;
}

cplx BandpassFilter::response(double freq) const {
    const cplx zi = std::polar(1.0, -two_pi * freq / sample_rate_);
    cplx h = 1.0;
    for (const auto& s : sections_)
        h *= (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
    return h;
}

cplx filter_frequency_response(const FeedbackFilter& fb, double sample_rate, double freq, Hold hold) {
    if (!(freq >= 0.0 && freq < 0.5 * sample_rate))
        throw DomainError("filter response requested at or above Nyquist");
    const BandpassFilter bp(fb, sample_rate);
    const double w_dt = two_pi * freq / sample_rate;
    cplx h = bp.response(freq) * std::polar(1.0, -w_dt * fb.delay_samples);
    if (hold == Hold::zero_order && w_dt > 0.0) h *= (1.0 - std::polar(1.0, -w_dt)) / cplx(0.0, w_dt);
    return h;
}

LoopDiagnosis effective_feedback(const Oscillator& osc, const FeedbackFilter& fb, double sample_rate) {
    osc.validate();
    LoopDiagnosis d{};
    d.transfer = filter_frequency_response(fb, sample_rate, osc.frequency());
    d.phase = -std::arg(d.transfer);
    const double s = std::sin(d.phase);
    if (!(s > 0.0))
        throw DomainError("feedback loop lag at resonance is outside (0, pi); retune the delay");
    d.gain = fb.enabled ? fb.gain : 0.0;
    // |T| sin(phi) = g m Gamma0 Omega0
    d.force_scale = d.gain * osc.mass * osc.gamma0() * osc.omega0 / (std::abs(d.transfer) * s);
    return d;
}

int tune_delay(const FeedbackFilter& fb, double sample_rate, double f0, double target_phase) {
    FeedbackFilter probe = fb;
    const int max_delay = static_cast<int>(std::ceil(sample_rate / f0));
    int best = 0;
    double best_err = 1e300;
    for (int d = 0; d <= max_delay; ++d) {
        probe.delay_samples = d;
        const double lag = -std::arg(filter_frequency_response(probe, sample_rate, f0));
        const double err = std::abs(std::remainder(lag - target_phase, two_pi));
        if (err < best_err - 1e-12) {
            best_err = err;
            best = d;
        }
    }
    return best;
}

}  // namespace fbcool
