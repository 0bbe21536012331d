#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace nnid {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123). A block
/// is a pure function of (counter, key), so per-pixel draws do not depend on
/// the order in which pixels are visited.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Uniform double in [0, 1) for pixel (row, col) under a 64-bit seed.
inline double pixel_uniform(std::uint64_t seed, std::uint32_t row, std::uint32_t col) noexcept {
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    const auto out = Philox4x32::block({col, row, 0u, 0u}, key);
    const std::uint64_t bits = (std::uint64_t{out[0]} << 32) | out[1];
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

inline constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
    return splitmix64(a ^ splitmix64(b));
}

/// Stable per-entry seed from (global seed, mother id, crop size, role).
inline constexpr std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view mother_id,
                                           std::uint64_t size, std::string_view role) noexcept {
    std::uint64_t s = mix_seed(global_seed, fnv1a64(mother_id));
    s = mix_seed(s, size);
    return mix_seed(s, fnv1a64(role));
}

}  // namespace nnid
