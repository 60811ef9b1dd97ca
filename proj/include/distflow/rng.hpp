#pragma once

#include <cstdint>
#include <random>

namespace distflow {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Per-sample random stream: mt19937_64 seeded with splitmix64(seed ^ splitmix64(index)).
///
/// The generator and the conversion to doubles are both fully specified, so a
/// given (seed, index) yields the same numbers on every platform.
class SampleStream {
public:
    SampleStream(std::uint64_t seed, std::uint64_t index) : engine_(splitmix64(seed ^ splitmix64(index))) {}

    /// Uniform double in [0, 1) from the top 53 bits of one engine draw.
    [[nodiscard]] double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    [[nodiscard]] double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace distflow
