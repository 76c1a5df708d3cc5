#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ecosim {

// Mixes a master seed with a stream name and up to two indices into an
// independent 64-bit seed (FNV-1a over the name, splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t a = 0, std::uint64_t b = 0);

/// Seeded generator with platform-independent draws.
///
/// The standard distributions are implementation-defined, so uniform reals
/// and bounded integers are derived from the raw engine output here instead.
class Rng
{
public:
    using engine_t = std::mt19937_64;

    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    static Rng substream(std::uint64_t master, std::string_view stream, std::uint64_t a = 0, std::uint64_t b = 0)
    {
        return Rng(derive_seed(master, stream, a, b));
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform on {0, ..., n-1}; n must be positive. Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t limit = engine_t::max() - (engine_t::max() % n + 1) % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x > limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    engine_t& engine() { return engine_; }

private:
    engine_t engine_;
};

} // namespace ecosim
