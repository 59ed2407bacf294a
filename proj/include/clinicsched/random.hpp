#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace clinicsched {

// splitmix64 step; used both as a stream-derivation hash and to seed the engine.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256** — fast, high-quality 64-bit generator. Satisfies
// std::uniform_random_bit_generator so it plugs into <random> distributions.
// Determinism contract: identical seeds give identical draw sequences on every
// platform (the generator itself is exactly specified; distributions are stable
// for a fixed standard library, which is all the tests rely on).
class RngEngine {
public:
    using result_type = std::uint64_t;

    explicit RngEngine(std::uint64_t seed = 0) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4]{};
};

// Derives an independent substream seed from a root seed plus a tag and integer
// coordinates. Used to give every patient / scenario / replication its own
// stream so that adding draws in one place never perturbs another (common
// random numbers across configurations).
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                 std::initializer_list<std::uint64_t> coords = {}) {
    std::uint64_t h = root ^ 0x6a09e667f3bcc908ULL;
    auto absorb = [&h](std::uint64_t v) {
        std::uint64_t state = h ^ v;
        h = splitmix64(state);
    };
    for (char c : tag) absorb(static_cast<std::uint64_t>(static_cast<unsigned char>(c)) + 1);
    for (std::uint64_t v : coords) absorb(v + 0x9e3779b97f4a7c15ULL);
    return h;
}

inline RngEngine derive_engine(std::uint64_t root, std::string_view tag,
                               std::initializer_list<std::uint64_t> coords = {}) {
    return RngEngine(derive_seed(root, tag, coords));
}

}  // namespace clinicsched
