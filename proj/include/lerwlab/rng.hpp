#pragma once

#include <cstdint>

namespace lerwlab {

namespace detail {

// Stafford variant 13 of the splitmix64 finalizer.
inline constexpr std::uint64_t mix13(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// MurmurHash3-style variant used for gamma derivation.
inline constexpr std::uint64_t mix64v(std::uint64_t z) {
    z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCDull;
    z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53ull;
    return z ^ (z >> 33);
}

inline constexpr int popcount64(std::uint64_t x) {
    int n = 0;
    while (x) {
        x &= x - 1;
        ++n;
    }
    return n;
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

}  // namespace detail

// Counter-based splittable random stream in the style of Steele, Lea and
// Vigna's SplittableRandom: the k-th output is a pure function of
// (seed, stream_id, k), so replay is bit-identical and any number of
// concurrent chains with distinct stream ids share no state.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}

    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id), counter_(0) {
        std::uint64_t z = seed + detail::kGolden * (stream_id + 1);
        base_ = detail::mix13(z);
        gamma_ = derive_gamma(z + detail::kGolden);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t counter() const { return counter_; }
    void set_counter(std::uint64_t k) { counter_ = k; }

    std::uint64_t next_u64() {
        return detail::mix13(base_ + (++counter_) * gamma_);
    }

    // Unbiased integer in [0, n), n >= 1 (Lemire's method with rejection).
    std::uint64_t next_below(std::uint64_t n) {
        std::uint64_t x = next_u64();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
        std::uint64_t lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<unsigned __int128>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_unit() {
        return double(next_u64() >> 11) * 0x1.0p-53;
    }

    // Deterministic child stream; used for nested reproducible substructure
    // (reservoir subsampling, bootstrap) without disturbing the parent.
    RngStream substream(std::uint64_t tag) const {
        return RngStream(seed_, detail::mix64v(stream_id_ ^ detail::mix13(tag + detail::kGolden)));
    }

private:
    static constexpr std::uint64_t derive_gamma(std::uint64_t z) {
        std::uint64_t g = detail::mix64v(z) | 1ull;
        // Steele et al.: avoid gammas whose successive-increment XOR has
        // too few transitions.
        if (detail::popcount64(g ^ (g >> 1)) < 24) g ^= 0xAAAAAAAAAAAAAAAAull;
        return g;
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t counter_;
    std::uint64_t base_;
    std::uint64_t gamma_;
};

inline RngStream derive_stream(std::uint64_t seed, std::uint64_t stream_id) {
    return RngStream(seed, stream_id);
}

// FNV-1a, used wherever a stable cross-platform 64-bit hash of a cell key
// or config text is needed (std::hash is not stable across libraries).
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xCBF29CE484222325ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace lerwlab
