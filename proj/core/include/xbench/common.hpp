#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace xbench {

/// Thrown for malformed inputs (bad space files, unknown function ids, bad CSV rows).
/// The CLI maps it to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent seeds from identity tuples.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

/// Order-dependent combination of 64-bit words into one seed.
template <typename... Ts>
constexpr std::uint64_t mix_seed(std::uint64_t first, Ts... rest) noexcept {
    std::uint64_t h = splitmix64(first);
    ((h = splitmix64(h ^ static_cast<std::uint64_t>(rest))), ...);
    return h;
}

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

/// Shortest decimal text that round-trips to the same double ("nan", "inf" for specials).
std::string format_double(double value);

/// Strict parse of a full string as a double; throws ValidationError naming `field`.
double parse_double(std::string_view text, std::string_view field);
long long parse_int(std::string_view text, std::string_view field);

/// Writes `content` to `path` through a sibling temp file and rename.
void write_file_atomic(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

}  // namespace xbench
