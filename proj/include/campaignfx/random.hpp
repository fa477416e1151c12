#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace campaignfx {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_bytes(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Derives an independent stream seed from a master seed and a key path.
/// Streams depend only on (master, keys), never on scheduling order.
template <typename... Keys>
std::uint64_t derive_seed(std::uint64_t master, const Keys&... keys) {
    std::uint64_t h = mix64(master);
    auto absorb = [&h](const auto& key) {
        if constexpr (std::is_convertible_v<decltype(key), std::string_view>) {
            h = mix64(h ^ hash_bytes(std::string_view(key)));
        } else {
            h = mix64(h ^ static_cast<std::uint64_t>(key));
        }
    };
    (absorb(keys), ...);
    return h;
}

template <typename... Keys>
Rng make_rng(std::uint64_t master, const Keys&... keys) {
    return Rng(derive_seed(master, keys...));
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace campaignfx
