#include <cstddef>

#include "fbcool/kernels.hpp"

namespace fbcool::kernels::scalar {

void apply_window(std::span<const double> in, std::span<const double> window, std::span<double> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * window[i];
}

void accumulate_power(std::span<const double> spectrum, std::span<double> acc) {
    for (std::size_t k = 0; k < acc.size(); ++k) {
        const double re = spectrum[2 * k];
        const double im = spectrum[2 * k + 1];
        acc[k] += re * re + im * im;
    }
}

Moments moments(std::span<const double> x) {
    Moments m;
    for (double v : x) {
        m.sum += v;
        m.sum_sq += v * v;
    }
    return m;
}

void loop_spectrum(std::span<const double> omega, const LoopSpectrumParams& p, std::span<double> out) {
    const double scale = 2.0 / p.gamma0;
    const double shift = p.gain * p.cot_phase;
    const double damp_sq = (1.0 + p.gain) * (1.0 + p.gain);
    for (std::size_t i = 0; i < omega.size(); ++i) {
        const double u = (omega[i] - p.omega0) * scale;
        const double us = u + shift;
        const double num = p.thermal + p.imprecision * (p.c0 + p.c1 * (1.0 + u * u));
        out[i] = num / (damp_sq + us * us);
    }
}

double weighted_sq_residual(std::span<const double> data, std::span<const double> model,
                            std::span<const double> weight) {
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double r = data[i] - model[i];
        acc += weight[i] * r * r;
    }
    return acc;
}

}  // namespace fbcool::kernels::scalar
