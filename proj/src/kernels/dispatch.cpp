#include <atomic>
#include <cstdlib>
#include <string_view>

#include "fbcool/errors.hpp"
#include "fbcool/kernels.hpp"

namespace fbcool::kernels {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(FBCOOL_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa detect() noexcept {
    const Isa best = cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
    if (const char* env = std::getenv("FBCOOL_ISA")) {
        const std::string_view v(env);
        if (v == "scalar") return Isa::scalar;
        if (v == "avx2" && best == Isa::avx2) return Isa::avx2;
    }
    return best;
}

// -1: not yet resolved
std::atomic<int> g_isa{-1};

Isa current() noexcept {
    int v = g_isa.load(std::memory_order_relaxed);
    if (v < 0) {
        v = static_cast<int>(detect());
        g_isa.store(v, std::memory_order_relaxed);
    }
    return static_cast<Isa>(v);
}

}  // namespace

bool isa_supported(Isa isa) noexcept { return isa == Isa::scalar || cpu_has_avx2(); }

Isa active_isa() noexcept { return current(); }

void force_isa(Isa isa) {
    if (!isa_supported(isa)) throw DomainError("requested ISA is not supported on this host");
    g_isa.store(static_cast<int>(isa), std::memory_order_relaxed);
}

void reset_isa() noexcept { g_isa.store(-1, std::memory_order_relaxed); }

std::string_view isa_name(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void apply_window(std::span<const double> in, std::span<const double> window, std::span<double> out) {
    if (window.size() != in.size() || out.size() != in.size()) throw DomainError("apply_window: length mismatch");
    if (current() == Isa::avx2) return avx2::apply_window(in, window, out);
    scalar::apply_window(in, window, out);
}

void accumulate_power(std::span<const double> spectrum, std::span<double> acc) {
    if (spectrum.size() != 2 * acc.size()) throw DomainError("accumulate_power: length mismatch");
    if (current() == Isa::avx2) return avx2::accumulate_power(spectrum, acc);
    scalar::accumulate_power(spectrum, acc);
}

Moments moments(std::span<const double> x) {
    return current() == Isa::avx2 ? avx2::moments(x) : scalar::moments(x);
}

void loop_spectrum(std::span<const double> omega, const LoopSpectrumParams& p, std::span<double> out) {
    if (out.size() != omega.size()) throw DomainError("loop_spectrum: length mismatch");
    if (current() == Isa::avx2) return avx2::loop_spectrum(omega, p, out);
    scalar::loop_spectrum(omega, p, out);
}

double weighted_sq_residual(std::span<const double> data, std::span<const double> model,
                            std::span<const double> weight) {
    if (model.size() != data.size() || weight.size() != data.size())
        throw DomainError("weighted_sq_residual: length mismatch");
    return current() == Isa::avx2 ? avx2::weighted_sq_residual(data, model, weight)
                                  : scalar::weighted_sq_residual(data, model, weight);
}

}  // namespace fbcool::kernels
