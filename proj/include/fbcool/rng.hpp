#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fbcool {

/// 64-bit FNV-1a; used for labelled seed splits and config hashes.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes,
                                    std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

/// Derives an independent seed for the stream `label` of `master`. The split
/// is a pure function of (master, label) so results never depend on the order
/// in which streams or sweep points are created.
[[nodiscard]] std::uint64_t split_seed(std::uint64_t master, std::string_view label) noexcept;
[[nodiscard]] std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Seeded standard-normal stream.
class GaussianStream {
public:
    GaussianStream(std::uint64_t master, std::string_view label) : engine_(split_seed(master, label)) {}
    double operator()() { return dist_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace fbcool
