#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace regimekit {

/// Counter-based normal generator: draw i depends only on (seed, stream, i),
/// so traces replay bit-exactly regardless of call order.
class CounterNormal {
public:
    CounterNormal(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

    double at(std::uint64_t counter) const;
    double uniform_at(std::uint64_t counter) const;

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace regimekit
