#pragma once

#include <cstdint>
#include <string_view>

namespace instaug {

// Finalizer of the splitmix64 generator. Used as the single bit mixer for
// seed derivation and content hashing so results are identical on every
// platform that has a 64-bit unsigned integer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// FNV-1a over the raw bytes of a string.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char ch : bytes) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001B3ull;
    }
    return h;
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ mix64(b));
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::string_view s) {
    return hash_combine(a, fnv1a64(s));
}

}  // namespace instaug
