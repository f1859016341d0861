#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "fbcool/errors.hpp"
#include "fbcool/kernels.hpp"

using namespace fbcool;
namespace k = fbcool::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

// Lengths exercising empty input, pure tails and several full vectors.
const std::size_t sizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 1000, 4097};

k::LoopSpectrumParams params() {
    return k::LoopSpectrumParams{2.5e5, 0.01, 3e3, 0.02, 2e-18, 1e-28, 0.0, 1.0};
}

}  // namespace

TEST_CASE("dispatcher") {
    CHECK(k::isa_supported(k::Isa::scalar));
    k::force_isa(k::Isa::scalar);
    CHECK(k::active_isa() == k::Isa::scalar);
    k::reset_isa();
    if (!k::isa_supported(k::Isa::avx2)) CHECK_THROWS_AS(k::force_isa(k::Isa::avx2), DomainError);
    CHECK(k::isa_name(k::Isa::avx2) == "avx2");
}

TEST_CASE("scalar kernels against direct loops") {
    const auto a = random_vec(101, 1), w = random_vec(101, 2);
    std::vector<double> out(101);
    k::scalar::apply_window(a, w, out);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(out[i] == a[i] * w[i]);

    const auto m = k::scalar::moments(a);
    double s = 0, s2 = 0;
    for (double x : a) {
        s += x;
        s2 += x * x;
    }
    CHECK_THAT(m.sum, Catch::Matchers::WithinAbs(s, 1e-12));
    CHECK_THAT(m.sum_sq, Catch::Matchers::WithinRel(s2, 1e-12));

    const auto spec = random_vec(2 * 50, 3);
    std::vector<double> acc(50, 1.0);
    k::scalar::accumulate_power(spec, acc);
    for (std::size_t i = 0; i < 50; ++i)
        CHECK_THAT(acc[i], Catch::Matchers::WithinRel(1.0 + spec[2 * i] * spec[2 * i] + spec[2 * i + 1] * spec[2 * i + 1],
                                                      1e-15));

    const auto p = params();
    std::vector<double> omega{p.omega0 - 1.0, p.omega0, p.omega0 + 2.0};
    std::vector<double> lo(3);
    k::scalar::loop_spectrum(omega, p, lo);
    for (std::size_t i = 0; i < 3; ++i) {
        const double u = 2.0 * (omega[i] - p.omega0) / p.gamma0;
        const double den = (1 + p.gain) * (1 + p.gain) + (u + p.gain * p.cot_phase) * (u + p.gain * p.cot_phase);
        CHECK_THAT(lo[i], Catch::Matchers::WithinRel((p.thermal + p.imprecision * (1 + u * u)) / den, 1e-14));
    }
}

TEST_CASE("AVX2 kernels match the scalar reference") {
    if (!k::isa_supported(k::Isa::avx2)) SKIP("host lacks AVX2/FMA");
    for (std::size_t n : sizes) {
        CAPTURE(n);
        const auto a = random_vec(n, 10 + n), w = random_vec(n, 20 + n, 0.0, 1.0);
        std::vector<double> o1(n), o2(n);
        k::scalar::apply_window(a, w, o1);
        k::avx2::apply_window(a, w, o2);
        CHECK(o1 == o2);

        const auto m1 = k::scalar::moments(a), m2 = k::avx2::moments(a);
        CHECK_THAT(m2.sum, Catch::Matchers::WithinAbs(m1.sum, 1e-12));
        CHECK_THAT(m2.sum_sq, Catch::Matchers::WithinRel(m1.sum_sq, 1e-13) || Catch::Matchers::WithinAbs(0.0, 0.0));

        const auto spec = random_vec(2 * n, 30 + n);
        std::vector<double> acc1(n, 0.5), acc2(n, 0.5);
        k::scalar::accumulate_power(spec, acc1);
        k::avx2::accumulate_power(spec, acc2);
        for (std::size_t i = 0; i < n; ++i) CHECK_THAT(acc2[i], Catch::Matchers::WithinRel(acc1[i], 1e-15));

        const auto p = params();
        auto omega = random_vec(n, 40 + n, p.omega0 - 5.0, p.omega0 + 5.0);
        std::vector<double> s1(n), s2(n);
        k::scalar::loop_spectrum(omega, p, s1);
        k::avx2::loop_spectrum(omega, p, s2);
        for (std::size_t i = 0; i < n; ++i) CHECK_THAT(s2[i], Catch::Matchers::WithinRel(s1[i], 1e-13));

        const auto wt = random_vec(n, 50 + n, 0.0, 2.0);
        const double r1 = k::scalar::weighted_sq_residual(a, w, wt);
        const double r2 = k::avx2::weighted_sq_residual(a, w, wt);
        CHECK_THAT(r2, Catch::Matchers::WithinRel(r1, 1e-13) || Catch::Matchers::WithinAbs(0.0, 0.0));
    }
}

TEST_CASE("dispatched kernels follow the pinned ISA") {
    const auto a = random_vec(777, 5);
    k::force_isa(k::Isa::scalar);
    const auto ms = k::moments(a);
    k::reset_isa();
    const auto md = k::moments(a);
    CHECK_THAT(md.sum_sq, Catch::Matchers::WithinRel(ms.sum_sq, 1e-13));
}

TEST_CASE("mismatched spans are rejected") {
    std::vector<double> a(4), b(5), out(4);
    CHECK_THROWS_AS(k::apply_window(a, b, out), DomainError);
}
