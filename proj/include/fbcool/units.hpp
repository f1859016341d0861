#pragma once

#include <string>
#include <string_view>

namespace fbcool::units {

/// Exponents of m, kg, s, K, stored doubled so that rtHz (s^-1/2) is exact.
struct Dimension {
    int m = 0;
    int kg = 0;
    int s = 0;
    int K = 0;

    friend bool operator==(const Dimension&, const Dimension&) = default;
    Dimension& operator+=(const Dimension& o) noexcept {
        m += o.m;
        kg += o.kg;
        s += o.s;
        K += o.K;
        return *this;
    }
    [[nodiscard]] Dimension scaled(int p) const noexcept { return {m * p, kg * p, s * p, K * p}; }
};

inline constexpr Dimension dimensionless{};
inline constexpr Dimension length{2, 0, 0, 0};
inline constexpr Dimension mass{0, 2, 0, 0};
inline constexpr Dimension time{0, 0, 2, 0};
inline constexpr Dimension temperature{0, 0, 0, 2};
inline constexpr Dimension frequency{0, 0, -2, 0};
inline constexpr Dimension power{4, 2, -6, 0};
inline constexpr Dimension force{2, 2, -4, 0};
inline constexpr Dimension pressure{-2, 2, -4, 0};
inline constexpr Dimension displacement_psd{4, 0, 2, 0};        // m^2/Hz
inline constexpr Dimension displacement_amplitude{2, 0, 1, 0};  // m/rtHz
inline constexpr Dimension thermal_conductivity{2, 2, -6, -2};  // W/(m K)

[[nodiscard]] std::string describe(const Dimension& d);

struct Quantity {
    double value;  // SI
    Dimension dim;
};

/// Parses "<number> [unit expression]", e.g. "12 ng", "10 fm/rtHz",
/// "3 W/(m K)", "90 deg", "10 ppm". Units: m g s K W Pa Hz N J rtHz rad deg
/// ppm %, SI prefixes y..T (u and the micro sign both mean 1e-6), products by
/// space, * or a middle dot, one level of '/' per factor, parentheses and
/// integer powers with '^'. Throws DomainError on malformed input.
[[nodiscard]] Quantity parse_quantity(std::string_view text);

/// Parses and checks the dimension. Throws DomainError naming `field`.
[[nodiscard]] double parse_as(std::string_view text, const Dimension& expected, std::string_view field);

}  // namespace fbcool::units
