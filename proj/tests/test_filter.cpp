#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "fbcool/errors.hpp"
#include "fbcool/filter.hpp"

using namespace fbcool;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using cplx = std::complex<double>;

namespace {

constexpr double fs = 32 * 39.9e3;

// DTFT of the measured impulse response.
cplx impulse_dtft(const FeedbackFilter& spec, double f, int taps = 200000) {
    BandpassFilter bp(spec, fs);
    cplx acc = 0.0;
    for (int n = 0; n < taps; ++n) {
        const double h = bp.process(n == 0 ? 1.0 : 0.0);
        acc += h * std::polar(1.0, -two_pi * f / fs * n);
    }
    return acc;
}

}  // namespace

TEST_CASE("band-pass response matches its impulse response") {
    const FeedbackFilter spec{};
    const BandpassFilter bp(spec, fs);
    CHECK(bp.sections() == 2);
    for (double f : {1e3, 10e3, 22e3, 39.9e3, 50e3, 200e3}) {
        CAPTURE(f);
        const cplx a = bp.response(f), b = impulse_dtft(spec, f);
        CHECK(std::abs(a - b) < 1e-9);
    }
}

TEST_CASE("Butterworth band edges and center") {
    for (int order : {1, 2, 3}) {
        FeedbackFilter spec{};
        spec.order = order;
        const BandpassFilter bp(spec, fs);
        CHECK_THAT(std::abs(bp.response(10e3)), WithinRel(1.0 / std::sqrt(2.0), 1e-9));
        CHECK_THAT(std::abs(bp.response(50e3)), WithinRel(1.0 / std::sqrt(2.0), 1e-9));
        CHECK_THAT(std::abs(bp.response(bp.center_frequency())), WithinRel(1.0, 1e-9));
        CHECK(std::abs(bp.response(1e3)) < 0.2);
        CHECK(std::abs(bp.response(300e3)) < 0.3);
    }
}

TEST_CASE("invalid filter specs") {
    FeedbackFilter spec{};
    spec.band_low = 60e3;
    CHECK_THROWS_AS(spec.validate(), DomainError);
    spec = FeedbackFilter{};
    spec.band_high = fs;
    CHECK_THROWS_AS(BandpassFilter(spec, fs), DomainError);
    spec = FeedbackFilter{};
    spec.order = 0;
    CHECK_THROWS_AS(spec.validate(), DomainError);
    spec = FeedbackFilter{};
    spec.delay_samples = -1;
    CHECK_THROWS_AS(spec.validate(), DomainError);
}

TEST_CASE("delay line") {
    DelayLine d(3);
    std::vector<double> out;
    for (int i = 1; i <= 6; ++i) out.push_back(d.process(i));
    CHECK(out == std::vector<double>{0, 0, 0, 1, 2, 3});
    DelayLine none(0);
    CHECK(none.process(5.0) == 5.0);
}

TEST_CASE("loop transfer includes delay and hold") {
    FeedbackFilter spec{};
    spec.delay_samples = 3;
    const double f = 39.9e3;
    const double wdt = two_pi * f / fs;
    const cplx bare = BandpassFilter(spec, fs).response(f);
    const cplx none = filter_frequency_response(spec, fs, f, Hold::none);
    CHECK(std::abs(none - bare * std::polar(1.0, -3.0 * wdt)) < 1e-12);
    const cplx zoh = filter_frequency_response(spec, fs, f, Hold::zero_order);
    const cplx hold = (1.0 - std::polar(1.0, -wdt)) / cplx(0.0, wdt);
    CHECK(std::abs(zoh - none * hold) < 1e-12);
    CHECK_THROWS_AS(filter_frequency_response(spec, fs, fs / 2, Hold::none), DomainError);
}

TEST_CASE("delay tuning reaches quadrature") {
    const Oscillator osc{two_pi * 39.9e3, 2.6e7, 12e-12, 300.0};
    FeedbackFilter spec{};
    spec.delay_samples = tune_delay(spec, fs, 39.9e3);
    const LoopDiagnosis d = effective_feedback(osc, spec, fs);
    // One sample is 2 pi / 32 of phase; the best integer delay is within half of it.
    CHECK(std::abs(d.phase - pi / 2.0) <= pi / 32.0 + 1e-12);
    CHECK(spec.delay_samples == 2);

    // Requested gain is realized through |T| sin(phi).
    spec.gain = 1e4;
    const LoopDiagnosis g = effective_feedback(osc, spec, fs);
    CHECK_THAT(g.force_scale * std::abs(g.transfer) * std::sin(g.phase),
               WithinRel(1e4 * osc.mass * osc.gamma0() * osc.omega0, 1e-12));
    CHECK(g.gain == 1e4);
}

TEST_CASE("a lag outside (0, pi) is rejected") {
    const Oscillator osc{two_pi * 39.9e3, 2.6e7, 12e-12, 300.0};
    FeedbackFilter spec{};
    spec.delay_samples = tune_delay(spec, fs, 39.9e3, -pi / 2.0);
    CHECK_THROWS_AS(effective_feedback(osc, spec, fs), DomainError);
}
