#pragma once

// Data-parallel inner loops used by the spectral estimator and the
// closed-loop fit. Each kernel has a scalar reference implementation and an
// AVX2/FMA variant; the variant is picked once at runtime from CPUID and can
// be pinned (tests, reproducibility across hosts) with force_isa().

#include <span>
#include <string_view>

namespace fbcool::kernels {

enum class Isa { scalar, avx2 };

[[nodiscard]] bool isa_supported(Isa isa) noexcept;
/// Best supported ISA unless pinned via force_isa() or FBCOOL_ISA=scalar|avx2.
[[nodiscard]] Isa active_isa() noexcept;
/// Pins the dispatcher. Throws DomainError if the host cannot run `isa`.
void force_isa(Isa isa);
void reset_isa() noexcept;
[[nodiscard]] std::string_view isa_name(Isa isa) noexcept;

struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
};

/// Closed-loop Lorentzian family
///   S(w) = (thermal + imprecision * (c0 + c1 (1 + u^2))) / ((1 + g)^2 + (u + g cot phi)^2)
/// with u = 2 (w - omega0) / gamma0. Covers the x spectrum (c0 = g^2, c1 = 0)
/// and both in-loop forms (c0 = 0, c1 = 1 or (1 + g)^2).
struct LoopSpectrumParams {
    double omega0;
    double gamma0;
    double gain;
    double cot_phase;
    double thermal;       // 2 S_zp n_th
    double imprecision;   // 2 S_zp n_imp
    double c0;
    double c1;
};

// out[i] = in[i] * window[i]
void apply_window(std::span<const double> in, std::span<const double> window, std::span<double> out);
// acc[k] += re_k^2 + im_k^2 for interleaved (re, im) pairs; spectrum.size() == 2 * acc.size()
void accumulate_power(std::span<const double> spectrum, std::span<double> acc);
[[nodiscard]] Moments moments(std::span<const double> x);
void loop_spectrum(std::span<const double> omega, const LoopSpectrumParams& p, std::span<double> out);
// sum_i weight[i] * (data[i] - model[i])^2
[[nodiscard]] double weighted_sq_residual(std::span<const double> data, std::span<const double> model,
                                          std::span<const double> weight);

namespace scalar {
void apply_window(std::span<const double> in, std::span<const double> window, std::span<double> out);
void accumulate_power(std::span<const double> spectrum, std::span<double> acc);
Moments moments(std::span<const double> x);
void loop_spectrum(std::span<const double> omega, const LoopSpectrumParams& p, std::span<double> out);
double weighted_sq_residual(std::span<const double> data, std::span<const double> model,
                            std::span<const double> weight);
}  // namespace scalar

namespace avx2 {
void apply_window(std::span<const double> in, std::span<const double> window, std::span<double> out);
void accumulate_power(std::span<const double> spectrum, std::span<double> acc);
Moments moments(std::span<const double> x);
void loop_spectrum(std::span<const double> omega, const LoopSpectrumParams& p, std::span<double> out);
double weighted_sq_residual(std::span<const double> data, std::span<const double> model,
                            std::span<const double> weight);
}  // namespace avx2

}  // namespace fbcool::kernels
