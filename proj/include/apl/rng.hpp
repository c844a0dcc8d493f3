#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace apl {

// Seed mixing (splitmix64 finalizer). Derived streams are a function of the
// parent's seed and a tag, never of consumed state, so stream structure is
// stable no matter how much the parent has been used.
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t hash_tag(std::string_view tag) {
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Deterministic random stream. All distributions are implemented here rather
// than with std::*_distribution, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), gen_(mix64(seed)) {}

    uint64_t u64() { return gen_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform in [0, n)
    int uniform_int(int n) {
        return static_cast<int>((static_cast<unsigned __int128>(u64()) *
                                 static_cast<unsigned __int128>(n)) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // standard normal via Box-Muller (one value per pair of uniforms)
    double normal() {
        double u1 = static_cast<double>((u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
            std::swap(v[i], v[uniform_int(i + 1)]);
    }

    Rng child(std::string_view tag) const { return Rng(mix64(seed_ ^ hash_tag(tag))); }

    Rng child(std::string_view tag, uint64_t index) const {
        return Rng(mix64(mix64(seed_ ^ hash_tag(tag)) + index));
    }

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace apl
