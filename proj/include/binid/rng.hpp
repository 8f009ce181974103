#ifndef BINID_RNG_HPP
#define BINID_RNG_HPP

#include <cstdint>

namespace binid {

/// SplitMix64: 64-bit counter-based generator (Steele, Lea & Flood mixing
/// constants). State is a plain counter, so streams can be split by hashing
/// (seed, stream-id) pairs and replications never share state.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next()
    {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on the open interval (0, 1); never returns an endpoint, so it
    /// is safe to feed into quantile functions.
    double uniform01()
    {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Derive an independent substream for (seed, stream id).
    static SplitMix64 substream(std::uint64_t seed, std::uint64_t stream)
    {
        SplitMix64 h(seed);
        std::uint64_t mixed = h.next() ^ (stream * 0xD6E8FEB86659FD93ULL);
        SplitMix64 h2(mixed);
        return SplitMix64(h2.next());
    }

private:
    std::uint64_t state_;
};

} // namespace binid

#endif // BINID_RNG_HPP
