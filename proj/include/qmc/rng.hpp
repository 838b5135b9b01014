// rng.hpp — reproducible random streams.
//
// Engine: std::mt19937_64, whose output sequence is fixed by the C++
// standard. Stream splitting: the engine for (seed, stream) is seeded with
//
//     splitmix64(seed ^ splitmix64(stream + 1))
//
// where splitmix64 is the finalizer of Steele, Lea & Flood. Uniform doubles
// are built from the top 53 bits by hand, since the standard distributions
// are implementation-defined.

#pragma once

#include <cstdint>
#include <random>

namespace qmc {

inline constexpr std::uint64_t kDefaultSeed = 20240601;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class RngStream {
public:
    explicit RngStream(std::uint64_t seed = kDefaultSeed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream), engine_(splitmix64(seed ^ splitmix64(stream + 1))) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on the open interval (0, 1).
    double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Independent child stream, e.g. one per Monte Carlo block.
    [[nodiscard]] RngStream substream(std::uint64_t index) const {
        return RngStream(splitmix64(seed_ ^ splitmix64(stream_ + 0x632BE59BD9B4E019ULL)), index);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

}  // namespace qmc
