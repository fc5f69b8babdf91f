#include "regimekit/mix_weights.hpp"
#include "regimekit/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace regimekit {

MixWeights::MixWeights(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) throw std::invalid_argument("mix weights must have at least one component");
    double sum = 0.0;
    for (double& x : w_) {
        if (!std::isfinite(x)) throw std::invalid_argument("mix weights must be finite");
        x = std::max(0.0, x);
        sum += x;
    }
    if (!(sum > 0.0)) throw std::invalid_argument("mix weights sum to zero");
    for (double& x : w_) x /= sum;
}

MixWeights MixWeights::uniform(std::size_t k) { return MixWeights(std::vector<double>(k, 1.0)); }

MixWeights MixWeights::vertex(std::size_t k, std::size_t index) {
    std::vector<double> w(k, 0.0);
    w.at(index) = 1.0;
    return MixWeights(std::move(w));
}

std::size_t MixWeights::argmax() const {
    return static_cast<std::size_t>(std::max_element(w_.begin(), w_.end()) - w_.begin());
}

std::vector<double> project_to_simplex(std::span<const double> v) {
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumsum += u[j];
        const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.0, v[i] - theta);
    return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double CounterNormal::uniform_at(std::uint64_t counter) const {
    const std::uint64_t h = splitmix64(splitmix64(seed_ ^ splitmix64(stream_)) + counter);
    // 53 random mantissa bits in (0, 1).
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

double CounterNormal::at(std::uint64_t counter) const {
    const double u1 = uniform_at(2 * counter);
    const double u2 = uniform_at(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace regimekit
