// Seeded random streams with platform-independent draw mappings.
//
// The standard distributions (std::uniform_int_distribution and friends) are
// implementation-defined, so every mapping from raw 64-bit words to a variate
// is written out here. Each call below consumes a fixed number of engine words
// (below() may consume more than one on rejection, deterministically).
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dpd {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stream seed from a master seed and a list of context labels, folded left:
// s = mix64(master); s = mix64(s ^ label) for each label.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> labels);

// Label for a short ASCII tag ("placement", "ensemble", ...), FNV-1a 64.
std::uint64_t label(const char* tag);

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer on [0, n); n must be positive. Lemire's multiply-shift
    // with rejection.
    std::uint64_t below(std::uint64_t n);

    bool bit() { return (next() >> 63) != 0; }

    // Exponential with the given rate, by inversion: -log(1 - U) / rate.
    double exponential(double rate);

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace dpd
