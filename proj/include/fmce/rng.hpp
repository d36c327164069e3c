#pragma once

#include <cmath>
#include <cstdint>

namespace fmce {

// splitmix64 (Vigna). Used for seeding and for deriving per-stage seeds.
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

// xoshiro256++ (Blackman/Vigna), state seeded through splitmix64.
// Hand-rolled so that every random draw in the artifact is reproducible
// bit-for-bit from a seed, independent of the standard library.
class Xoshiro256pp {
  public:
    explicit Xoshiro256pp(uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& word : s_) word = sm.next();
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1), 53-bit resolution
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform in [0, 1), 24-bit resolution
    float next_float() { return static_cast<float>(next() >> 40) * 0x1.0p-24f; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    float uniform_float(float lo, float hi) { return lo + (hi - lo) * next_float(); }

    // unbiased integer in [0, n)
    uint64_t next_below(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t r;
        do {
            r = next();
        } while (r >= limit);
        return r % n;
    }

    // standard normal via Box-Muller; draws two uniforms per call
    double gaussian() {
        const double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Fisher-Yates; deterministic across platforms unlike std::shuffle
    template <typename Vec>
    void shuffle(Vec& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4];
};

// i-th derived seed of a base seed; used to give pipeline stages
// independent deterministic streams.
inline uint64_t derive_seed(uint64_t base, int index) {
    SplitMix64 sm(base);
    uint64_t v = 0;
    for (int i = 0; i <= index; ++i) v = sm.next();
    return v;
}

}  // namespace fmce
