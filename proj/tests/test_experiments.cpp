#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "fbcool/errors.hpp"
#include "fbcool/experiments.hpp"

using namespace fbcool;
using Catch::Matchers::WithinRel;

namespace {

const Oscillator device{two_pi * 39.9e3, 2.6e7, 12e-12, 300.0};
const Oscillator toy{two_pi * 1e3, 1000, 12e-12, 300.0};

FeedbackFilter toy_filter() {
    FeedbackFilter fb;
    fb.band_low = 250.0;
    fb.band_high = 1250.0;
    fb.delay_samples = tune_delay(fb, 32e3, 1e3);
    return fb;
}

double row(const DesignReport& r, const std::string& name) {
    for (const auto& x : r.rows)
        if (x.name == name) return x.value;
    FAIL("missing row " << name);
    return 0.0;
}

}  // namespace

TEST_CASE("point seeds") {
    std::set<std::uint64_t> seen;
    for (std::size_t i = 0; i < 20; ++i)
        for (int r = 0; r < 3; ++r) seen.insert(point_seed(42, i, r, 3));
    CHECK(seen.size() == 60);
    CHECK(point_seed(42, 2, 1, 3) == point_seed(42, 2, 1, 3));
    CHECK(point_seed(42, 0, 0, 1) != point_seed(43, 0, 0, 1));
}

TEST_CASE("ladders") {
    const auto l = log_ladder(1e-6, 1e-2, 9);
    REQUIRE(l.size() == 9);
    CHECK(l.front() == 1e-6);
    CHECK(l.back() == 1e-2);
    CHECK_THAT(l[4], WithinRel(1e-4, 1e-12));
    CHECK(std::is_sorted(l.begin(), l.end()));
    CHECK_THROWS_AS(log_ladder(0.0, 1.0, 3), DomainError);

    const auto g = default_gain_ladder(device);
    REQUIRE_FALSE(g.empty());
    CHECK(g.back() == 1e6);
    for (double x : g) CHECK((1.0 + x) * device.gamma0() >= two_pi * 1.0 * (1 - 1e-12));
    CHECK(default_gain_ladder(toy).size() == 17);
}

TEST_CASE("automatic Welch segment") {
    const std::size_t n = auto_segment_length(device, 5000.0, 32 * 39.9e3, 60 * 32 * 39900);
    CHECK((n & (n - 1)) == 0);
    const double bins_per_line = (5001.0 * device.gamma0() / two_pi) / (32 * 39.9e3 / n);
    CHECK(bins_per_line >= 8.0);
    CHECK(auto_segment_length(device, 0.0, 1.28e6, 100000) <= 100000 / 4);
    CHECK_THROWS_AS(auto_segment_length(device, 0.0, 1.28e6, 100), DomainError);
}

TEST_CASE("sweep spec validation") {
    SweepSpec s;
    s.values = {};
    CHECK_THROWS_AS(s.validate(), DomainError);
    s.values = {1.0, 1.0};
    CHECK_THROWS_AS(s.validate(), DomainError);
    s.values = {1.0, 2.0};
    s.replicas = 0;
    CHECK_THROWS_AS(s.validate(), DomainError);
}

TEST_CASE("power sweep regimes and crossover") {
    SweepSpec s;
    s.variable = SweepVariable::power;
    s.values = log_ladder(1e-6, 1e-2, 9);
    s.osc = device;
    s.meas.extraneous_imprecision = 1e-28;
    s.fb.enabled = false;
    s.sim.duration = 0.05;
    s.sim.seed = 3;
    s.analysis.fit = false;
    s.analysis.welch.segment_length = 4096;
    const SweepResult r = power_sweep(s);
    REQUIRE(r.points.size() == 9);
    CHECK(r.points.front().regime == Regime::shot);
    CHECK(r.points.back().regime == Regime::extraneous);
    for (std::size_t i = 1; i < r.points.size(); ++i) CHECK(r.points[i].regime >= r.points[i - 1].regime);
    for (const auto& p : r.points) {
        CHECK(p.ok);
        CHECK_THAT(p.run.floor_psd, WithinRel(p.analytic_imprecision, 0.05));
    }
    REQUIRE(r.crossover_analytic);
    REQUIRE(r.crossover_estimate);
    CHECK_THAT(*r.crossover_estimate, WithinRel(*r.crossover_analytic, 0.1));
    CHECK_THAT(*r.extraneous_estimate, WithinRel(1e-28, 0.05));

    s.fb.enabled = true;
    s.fb.gain = 10.0;
    CHECK_THROWS_AS(power_sweep(s), DomainError);
}

TEST_CASE("sweep results do not depend on parallelism") {
    SweepSpec s;
    s.variable = SweepVariable::gain;
    s.values = {1.0, 10.0, 30.0};
    s.replicas = 2;
    s.osc = toy;
    s.meas.extraneous_imprecision = 4e-24;
    s.fb = toy_filter();
    s.sim.duration = 20.0;
    s.sim.seed = 8;
    s.parallelism = 1;
    const SweepResult a = gain_sweep(s);
    s.parallelism = 3;
    const SweepResult b = gain_sweep(s);
    REQUIRE(a.points.size() == 6);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].index == i / 2);
        CHECK(a.points[i].replica == static_cast<int>(i % 2));
        CHECK(a.points[i].seed == b.points[i].seed);
        CHECK(a.points[i].run.n_sim == b.points[i].run.n_sim);
        CHECK(a.points[i].run.y_spectrum.psd == b.points[i].run.y_spectrum.psd);
    }
    CHECK(a.points[0].seed != a.points[1].seed);
}

TEST_CASE("failing sweep points are recorded, not thrown") {
    SweepSpec s;
    s.variable = SweepVariable::gain;
    s.values = {5.0, 1e5};
    s.osc = {two_pi * 1e3, 100, 12e-12, 300.0};
    s.fb = toy_filter();
    s.sim.duration = 2.0;
    s.sim.settle_time = 0.0;
    const SweepResult r = gain_sweep(s);
    REQUIRE(r.points.size() == 2);
    CHECK(r.points[0].ok);
    CHECK_FALSE(r.points[1].ok);
    CHECK(r.points[1].error_kind == "simulation");
}

TEST_CASE("temperature sweep scales the thermal occupation") {
    SweepSpec s;
    s.variable = SweepVariable::temperature;
    s.values = {30.0, 300.0};
    s.osc = toy;
    s.meas.extraneous_imprecision = 4e-24;
    s.fb = toy_filter();
    s.fb.gain = 10.0;
    s.sim.duration = 20.0;
    const SweepResult r = temperature_sweep(s);
    REQUIRE(r.points.size() == 2);
    CHECK_THAT(r.points[1].run.n_th / r.points[0].run.n_th, WithinRel(10.0, 1e-9));
    CHECK_THAT(r.points[1].run.n_sim / r.points[0].run.n_sim, WithinRel(10.0, 0.15));
}

TEST_CASE("design report for the trampoline") {
    Measurement m;
    m.extraneous_imprecision = 1e-28;
    const DesignReport r = design_report(device, DeviceGeometry{}, m);
    CHECK_THAT(row(r, "x_zp"), WithinRel(4.1865e-15, 1e-4));
    CHECK_THAT(row(r, "n_th"), WithinRel(1.5667e8, 1e-4));
    CHECK_THAT(row(r, "heating_per_mW"), WithinRel(3.748, 1e-3));
    CHECK_THAT(row(r, "crossover_power"), WithinRel(16.04e-6, 1e-3));
    CHECK_THAT(row(r, "q_scaling_estimate"), WithinRel(4.4e7, 1e-9));
    CHECK_FALSE(r.decoherence_condition);
    CHECK_FALSE(r.imprecision_condition);
}
