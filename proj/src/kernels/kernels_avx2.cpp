#include <cstddef>

#include "fbcool/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace fbcool::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void apply_window(std::span<const double> in, std::span<const double> window, std::span<double> out) {
    const std::size_t n = in.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a = _mm256_loadu_pd(in.data() + i);
        const __m256d w = _mm256_loadu_pd(window.data() + i);
        _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(a, w));
    }
    for (; i < n; ++i) out[i] = in[i] * window[i];
}

void accumulate_power(std::span<const double> spectrum, std::span<double> acc) {
    const std::size_t n = acc.size();
    const double* s = spectrum.data();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d v0 = _mm256_loadu_pd(s + 2 * k);
        const __m256d v1 = _mm256_loadu_pd(s + 2 * k + 4);
        // (p_k, p_k+2, p_k+1, p_k+3) -> natural order
        const __m256d h = _mm256_hadd_pd(_mm256_mul_pd(v0, v0), _mm256_mul_pd(v1, v1));
        const __m256d p = _mm256_permute4x64_pd(h, 0b11011000);
        _mm256_storeu_pd(acc.data() + k, _mm256_add_pd(_mm256_loadu_pd(acc.data() + k), p));
    }
    for (; k < n; ++k) {
        const double re = s[2 * k];
        const double im = s[2 * k + 1];
        acc[k] += re * re + im * im;
    }
}

Moments moments(std::span<const double> x) {
    const std::size_t n = x.size();
    __m256d sum = _mm256_setzero_pd();
    __m256d sq = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x.data() + i);
        sum = _mm256_add_pd(sum, v);
        sq = _mm256_fmadd_pd(v, v, sq);
    }
    Moments m{hsum(sum), hsum(sq)};
    for (; i < n; ++i) {
        m.sum += x[i];
        m.sum_sq += x[i] * x[i];
    }
    return m;
}

void loop_spectrum(std::span<const double> omega, const LoopSpectrumParams& p, std::span<double> out) {
    const double scale = 2.0 / p.gamma0;
    const double shift = p.gain * p.cot_phase;
    const double damp_sq = (1.0 + p.gain) * (1.0 + p.gain);
    const __m256d v_w0 = _mm256_set1_pd(p.omega0);
    const __m256d v_scale = _mm256_set1_pd(scale);
    const __m256d v_shift = _mm256_set1_pd(shift);
    const __m256d v_damp = _mm256_set1_pd(damp_sq);
    const __m256d v_th = _mm256_set1_pd(p.thermal);
    const __m256d v_imp = _mm256_set1_pd(p.imprecision);
    const __m256d v_c0 = _mm256_set1_pd(p.c0);
    const __m256d v_c1 = _mm256_set1_pd(p.c1);
    const __m256d one = _mm256_set1_pd(1.0);
    const std::size_t n = omega.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d u = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(omega.data() + i), v_w0), v_scale);
        const __m256d us = _mm256_add_pd(u, v_shift);
        const __m256d inv_chi0 = _mm256_fmadd_pd(u, u, one);
        const __m256d shape = _mm256_fmadd_pd(v_c1, inv_chi0, v_c0);
        const __m256d num = _mm256_fmadd_pd(v_imp, shape, v_th);
        const __m256d den = _mm256_fmadd_pd(us, us, v_damp);
        _mm256_storeu_pd(out.data() + i, _mm256_div_pd(num, den));
    }
    if (i < n) scalar::loop_spectrum(omega.subspan(i), p, out.subspan(i));
}

double weighted_sq_residual(std::span<const double> data, std::span<const double> model,
                            std::span<const double> weight) {
    const std::size_t n = data.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_sub_pd(_mm256_loadu_pd(data.data() + i), _mm256_loadu_pd(model.data() + i));
        acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(weight.data() + i), r), r, acc);
    }
    double total = hsum(acc);
    for (; i < n; ++i) {
        const double r = data[i] - model[i];
        total += weight[i] * r * r;
    }
    return total;
}

}  // namespace fbcool::kernels::avx2

#else

// Non-x86 builds: the AVX2 entry points forward to the reference kernels so
// the dispatcher and the equivalence tests still link.
namespace fbcool::kernels::avx2 {

void apply_window(std::span<const double> in, std::span<const double> window, std::span<double> out) {
    scalar::apply_window(in, window, out);
}
void accumulate_power(std::span<const double> spectrum, std::span<double> acc) {
    scalar::accumulate_power(spectrum, acc);
}
Moments moments(std::span<const double> x) { return scalar::moments(x); }
void loop_spectrum(std::span<const double> omega, const LoopSpectrumParams& p, std::span<double> out) {
    scalar::loop_spectrum(omega, p, out);
}
double weighted_sq_residual(std::span<const double> data, std::span<const double> model,
                            std::span<const double> weight) {
    return scalar::weighted_sq_residual(data, model, weight);
}

}  // namespace fbcool::kernels::avx2

#endif
