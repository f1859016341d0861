#pragma once

#include <numbers>

namespace fbcool {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct PhysicalConstants {
    double hbar;  // J s
    double k_B;   // J/K
    double c;     // m/s
};

// CODATA 2018 exact/recommended values.
inline constexpr PhysicalConstants codata{1.054571817e-34, 1.380649e-23, 299792458.0};

}  // namespace fbcool
