#pragma once

#include <cstdint>
#include <stdexcept>

namespace stochad {

namespace detail {

// Philox 2x64-10 round constants (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3").
inline constexpr std::uint64_t philox_mult = 0xD2B74407B1CE6E93ull;
inline constexpr std::uint64_t philox_weyl = 0x9E3779B97F4A7C15ull;

struct Block {
    std::uint64_t x0;
    std::uint64_t x1;
};

inline Block philox2x64(std::uint64_t c0, std::uint64_t c1, std::uint64_t key) {
    std::uint64_t x0 = c0;
    std::uint64_t x1 = c1;
    std::uint64_t k = key;
    for (int round = 0; round < 10; ++round) {
        const unsigned __int128 prod =
            static_cast<unsigned __int128>(x0) * philox_mult;
        const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
        const std::uint64_t lo = static_cast<std::uint64_t>(prod);
        x0 = hi ^ k ^ x1;
        x1 = lo;
        k += philox_weyl;
    }
    return {x0, x1};
}

// SplitMix64 finalizer, used to derive child streams.
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

}  // namespace detail

/// Derive an independent child stream id from a parent stream id.
inline std::uint64_t derive_stream(std::uint64_t stream, std::uint64_t child) {
    return detail::mix64(stream + detail::philox_weyl * (child + 1));
}

/// Counter-based random source keyed by (seed, stream).
///
/// Identical (seed, stream) pairs always produce identical sequences, and
/// distinct streams under one seed are statistically independent, which makes
/// per-sample streams safe to fan out across threads.
///
/// Draws come from two lanes that consume disjoint counter ranges:
///  - the primary lane feeds ordinary sampling,
///  - the auxiliary lane feeds bookkeeping draws needed only when
///    differentiating (perturbation couplings and pruning decisions).
/// Keeping those on a separate lane means a primal run and a derivative run
/// with the same (seed, stream) see the exact same primary sequence.
class RandomSource {
  public:
    RandomSource(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    /// Independent source for a child task (sample index, node index, ...).
    RandomSource sub(std::uint64_t child) const {
        return RandomSource(seed_, derive_stream(stream_, child));
    }

    std::uint64_t next_u64() { return draw(ctr_, cache_, has_cache_); }

    /// Uniform in [0, 1).
    double next_double() { return to_unit(next_u64()); }

    /// Uniform in the open interval (0, 1).
    double next_open01() { return to_open_unit(next_u64()); }

    /// Uniform in {0, 1, ..., bound - 1}; bound must be >= 1.
    std::uint64_t next_below(std::uint64_t bound) {
        return bounded(bound, /*aux=*/false);
    }

    std::uint64_t aux_u64() { return draw(aux_ctr_, aux_cache_, aux_has_cache_); }
    double aux_double() { return to_unit(aux_u64()); }
    double aux_open01() { return to_open_unit(aux_u64()); }
    std::uint64_t aux_below(std::uint64_t bound) { return bounded(bound, true); }

  private:
    // Primary lane counters occupy [0, 2^63), auxiliary [2^63, 2^64).
    static constexpr std::uint64_t aux_base = 1ull << 63;

    std::uint64_t draw(std::uint64_t& ctr, std::uint64_t& cache, bool& has_cache) {
        if (has_cache) {
            has_cache = false;
            return cache;
        }
        const detail::Block b = detail::philox2x64(ctr++, stream_, seed_);
        cache = b.x1;
        has_cache = true;
        return b.x0;
    }

    static double to_unit(std::uint64_t x) {
        return static_cast<double>(x >> 11) * 0x1.0p-53;
    }

    static double to_open_unit(std::uint64_t x) {
        return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t bounded(std::uint64_t bound, bool aux) {
        if (bound == 0) throw std::invalid_argument("RandomSource: bound must be >= 1");
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = aux ? aux_u64() : next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t ctr_ = 0;
    std::uint64_t aux_ctr_ = aux_base;
    std::uint64_t cache_ = 0;
    std::uint64_t aux_cache_ = 0;
    bool has_cache_ = false;
    bool aux_has_cache_ = false;
};

}  // namespace stochad
