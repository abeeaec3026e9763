#include "popac/rng.hpp"

namespace popac {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

std::size_t Rng::categorical(const Vector& p) {
    double total = p.sum();
    double u = uniform() * total;
    std::size_t last = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p(i) <= 0.0) continue;
        last = static_cast<std::size_t>(i);
        if (u < p(i)) return last;
        u -= p(i);
    }
    return last;
}

}  // namespace popac
