#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sot {

// Deterministic, platform-independent randomness.
//
// Every random quantity in the library flows from an explicit 64-bit seed
// through this wrapper.  We use std::mt19937_64 (whose output sequence is
// fixed by the standard) and do our own uint64 -> double / Gaussian
// conversions, because the distributions in <random> are implementation
// defined and would break bit-for-bit reproducibility across standard
// libraries.
//
// Stream splitting: independent substreams are derived with SplitMix64 on
// (seed, stream_id).  The convention used across the library:
//   dataset seed  -> stream 0:        cluster centers
//                 -> stream 1 + c:    noise for cluster c
//   k-means seed  -> stream r:        restart r (init sampling)
//   episode seed  -> stream 0:        class choice and per-class sampling
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Collapse (seed, stream) into one well-mixed 64-bit value.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    Rng(std::uint64_t seed, std::uint64_t stream) : gen_(derive_stream_seed(seed, stream)) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform double in [0, 1): top 53 bits of the generator output.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Uniform double in (0, 1] (safe as a log() argument).
    double uniform_pos() {
        return 1.0 - uniform();
    }

    // Uniform integer in [0, n) by rejection (unbiased, reproducible).
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller; the paired deviate is cached.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace sot
