#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace chgnn {

// Counter-based deterministic generator: draw k of a stream is a pure
// function of (seed, k), so identical seeds and operation order reproduce
// identical values on any platform.
class RngState {
public:
    explicit RngState(std::uint64_t seed = 0) : seed_(seed), counter_(0) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() {
        std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in the open interval (0, 1); never returns an endpoint, so
    // log(u) and log(-log(u)) are always finite.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard Gumbel(0,1) noise.
    double gumbel() { return -std::log(-std::log(uniform01())); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent child stream; distinct tags give distinct streams.
    RngState fork(std::uint64_t tag) {
        RngState child(seed_ ^ (0xD1B54A32D192ED03ULL * (tag + 1)) ^ next_u64());
        return child;
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

}  // namespace chgnn
