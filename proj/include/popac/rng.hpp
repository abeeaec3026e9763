#pragma once

#include "popac/linalg.hpp"

#include <cstdint>
#include <random>

namespace popac {

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of substream `stream` under a root seed. Episodes, restarts and
/// experiment cells each draw from their own substream so that sharded and
/// serial runs see identical randomness.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

    double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }

    /// Index drawn from an (approximately) normalized weight vector.
    std::size_t categorical(const Vector& p);

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace popac
