#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <numeric>

#include "fbcool/errors.hpp"
#include "fbcool/langevin.hpp"

using namespace fbcool;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

using Mat = std::array<std::array<long double, 4>, 4>;

Mat mul(const Mat& a, const Mat& b) {
    Mat c{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

// exp(M) by scaling and squaring with a long Taylor series.
Mat expm(Mat m) {
    int squarings = 0;
    long double norm = 0;
    for (auto& r : m)
        for (auto v : r) norm = std::max(norm, std::fabs(v));
    while (norm > 0.01L) {
        norm /= 2;
        ++squarings;
    }
    const long double scale = std::ldexp(1.0L, -squarings);
    for (auto& r : m)
        for (auto& v : r) v *= scale;
    Mat result{}, term{};
    for (int i = 0; i < 4; ++i) result[i][i] = term[i][i] = 1;
    for (int k = 1; k < 30; ++k) {
        term = mul(term, m);
        for (auto& r : term)
            for (auto& v : r) v /= k;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) result[i][j] += term[i][j];
    }
    for (int s = 0; s < squarings; ++s) result = mul(result, result);
    return result;
}

Oscillator toy(double q = 100.0) { return Oscillator{two_pi * 1e3, q, 12e-12, 300.0}; }

FeedbackFilter toy_filter() {
    FeedbackFilter fb;
    fb.band_low = 250.0;
    fb.band_high = 1250.0;
    fb.delay_samples = tune_delay(fb, 32e3, 1e3);
    return fb;
}

}  // namespace

TEST_CASE("exact propagator against the Van Loan matrix exponential") {
    const double w0 = two_pi * 39.9e3, g0 = w0 / 2.6e7, dt = 1.0 / (32 * 39.9e3);
    const ExactPropagator p(w0, g0, dt);

    // A = [[0, 1], [-w0^2, -g0]]; noise enters the velocity with unit diffusion.
    Mat vl{};
    vl[0][1] = -1;
    vl[1][0] = (long double)w0 * w0;
    vl[1][1] = g0;
    vl[1][3] = 1;  // Q block
    vl[2][3] = -(long double)w0 * w0;
    vl[3][2] = 1;
    vl[3][3] = -g0;
    for (auto& r : vl)
        for (auto& v : r) v *= dt;
    const Mat e = expm(vl);
    // Phi = (lower-right block)^T, covariance = Phi * upper-right block.
    long double phi[2][2] = {{e[2][2], e[3][2]}, {e[2][3], e[3][3]}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK_THAT(p.phi[i][j], WithinRel((double)phi[i][j], 1e-10));
    long double cov[2][2]{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) cov[i][j] += phi[i][k] * e[k][2 + j];
    CHECK_THAT(p.l11 * p.l11, WithinRel((double)cov[0][0], 1e-8));
    CHECK_THAT(p.l11 * p.l21, WithinRel((double)cov[0][1], 1e-8));
    CHECK_THAT(p.l21 * p.l21 + p.l22 * p.l22, WithinRel((double)cov[1][1], 1e-8));

    // Drive vector: integral of exp(A s) ds applied to (0, 1).
    Mat dv{};
    dv[0][1] = 1;
    dv[1][0] = -(long double)w0 * w0;
    dv[1][1] = -g0;
    dv[1][2] = 1;
    for (auto& r : dv)
        for (auto& v : r) v *= dt;
    const Mat d = expm(dv);
    CHECK_THAT(p.drive[0], WithinRel((double)d[0][2], 1e-9));
    CHECK_THAT(p.drive[1], WithinRel((double)d[1][2], 1e-9));
}

TEST_CASE("noise-free ringdown follows the damped solution") {
    const Oscillator osc = toy(50.0);
    Measurement meas;
    SimulationConfig cfg;
    cfg.duration = 0.05;
    cfg.thermal_noise = false;
    cfg.measurement_noise = false;
    cfg.initial_displacement = 1e-12;
    FeedbackFilter fb = toy_filter();
    fb.enabled = false;
    const TimeSeries ts = simulate(osc, meas, fb, cfg);
    const double g = osc.gamma0(), wd = std::sqrt(osc.omega0 * osc.omega0 - g * g / 4.0);
    double worst = 0.0;
    for (std::size_t n = 0; n < ts.size(); n += 37) {
        const double t = n * ts.dt;
        const double x = 1e-12 * std::exp(-g * t / 2.0) * (std::cos(wd * t) + g / (2.0 * wd) * std::sin(wd * t));
        worst = std::max(worst, std::abs(ts.x[n] - x));
        CHECK(ts.y[n] == ts.x[n]);
        CHECK(ts.f_fb[n] == 0.0);
    }
    CHECK(worst < 1e-12 * 1e-9);
}

TEST_CASE("equipartition at toy scale") {
    const Oscillator osc = toy(100.0);
    Measurement meas;
    SimulationConfig cfg;
    cfg.duration = 100.0;
    cfg.seed = 5;
    FeedbackFilter fb = toy_filter();
    fb.enabled = false;
    const TimeSeries ts = simulate(osc, meas, fb, cfg);
    const double ms = std::inner_product(ts.x.begin(), ts.x.end(), ts.x.begin(), 0.0) / ts.size();
    // Relative standard error is about 1 / sqrt(Gamma0 T) = 1.3 %.
    CHECK_THAT(ms, WithinRel(codata.k_B * 300.0 / (osc.mass * osc.omega0 * osc.omega0), 0.05));
}

TEST_CASE("imprecision noise has the configured density") {
    const Oscillator osc = toy(100.0);
    Measurement meas;
    meas.extraneous_imprecision = 1e-24;
    SimulationConfig cfg;
    cfg.duration = 5.0;
    FeedbackFilter fb = toy_filter();
    fb.enabled = false;
    const LangevinSimulator sim(osc, meas, fb, cfg);
    CHECK_THAT(sim.imprecision_psd(), WithinRel(total_imprecision(meas), 1e-12));
    const TimeSeries ts = simulate(osc, meas, fb, cfg);
    double s2 = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) s2 += (ts.y[i] - ts.x[i]) * (ts.y[i] - ts.x[i]);
    s2 /= ts.size();
    CHECK_THAT(s2, WithinRel(total_imprecision(meas) * sim.sample_rate() / 2.0, 0.01));
}

TEST_CASE("runs are deterministic and independent of block size") {
    const Oscillator osc = toy(100.0);
    Measurement meas;
    meas.extraneous_imprecision = 1e-26;
    FeedbackFilter fb = toy_filter();
    fb.gain = 5.0;
    SimulationConfig cfg;
    cfg.duration = 0.5;
    cfg.seed = 99;
    const TimeSeries a = simulate(osc, meas, fb, cfg);
    cfg.block_size = 1000;
    const TimeSeries b = simulate(osc, meas, fb, cfg);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.f_fb == b.f_fb);
    cfg.seed = 100;
    const TimeSeries c = simulate(osc, meas, fb, cfg);
    CHECK(a.x != c.x);
}

TEST_CASE("measured loop transfer matches the closed-loop susceptibility") {
    const Oscillator osc = toy(1e4);
    Measurement meas;
    FeedbackFilter fb = toy_filter();
    fb.gain = 20.0;
    SimulationConfig cfg;
    const LangevinSimulator sim(osc, meas, fb, cfg);
    const Feedback model = sim.effective_feedback();
    const double w = (1.0 + fb.gain) * osc.gamma0();
    for (double u : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
        CAPTURE(u);
        const double f = (osc.omega0 + u * w / 2.0) / two_pi;
        const auto measured = measure_loop_transfer(osc, meas, fb, cfg, f);
        Feedback open = model;
        open.enabled = false;
        const auto expected = closed_loop_susceptibility(osc, model, two_pi * f) /
                              closed_loop_susceptibility(osc, open, two_pi * f);
        CHECK(std::abs(measured - expected) < 0.03 * std::abs(expected));
    }
}

TEST_CASE("a loop that cannot damp is reported as unstable") {
    const Oscillator osc = toy(100.0);
    Measurement meas;
    FeedbackFilter fb = toy_filter();
    fb.gain = 10.0;
    fb.delay_samples = tune_delay(fb, 32e3, 1e3, -pi / 2.0);
    SimulationConfig cfg;
    cfg.duration = 0.1;
    CHECK_THROWS_AS(LangevinSimulator(osc, meas, fb, cfg), SimulationError);
}

TEST_CASE("runaway loop raises SimulationError with diagnostics") {
    const Oscillator osc = toy(100.0);
    Measurement meas;
    FeedbackFilter fb = toy_filter();
    fb.gain = 1e5;
    SimulationConfig cfg;
    cfg.duration = 2.0;
    cfg.settle_time = 0.0;
    try {
        (void)simulate(osc, meas, fb, cfg);
        FAIL("expected divergence");
    } catch (const SimulationError& e) {
        CHECK(e.loop_gain() == 1e5);
        CHECK(e.loop_phase() > 0.0);
    }
}

TEST_CASE("timing parameters") {
    const Oscillator osc = toy(100.0);
    SimulationConfig cfg;
    CHECK_THAT(cfg.resolved_sample_rate(osc), WithinRel(32e3, 1e-12));
    cfg.sample_rate = 5e3;
    CHECK_THROWS_AS(cfg.resolved_sample_rate(osc), DomainError);
    cfg.sample_rate = 0.0;
    FeedbackFilter fb = toy_filter();
    fb.gain = 9.0;
    CHECK_THAT(cfg.resolved_settle_time(osc, fb), WithinRel(10.0 / (10.0 * osc.gamma0()), 1e-12));
    fb.enabled = false;
    CHECK(cfg.resolved_settle_time(osc, fb) == 0.0);
}
