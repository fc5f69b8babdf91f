#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace regimekit {

/// A point on the probability simplex. Every constructor and mutation
/// renormalizes, so sum == 1 and all components >= 0 hold on exit.
class MixWeights {
public:
    MixWeights() = default;
    explicit MixWeights(std::vector<double> w);

    static MixWeights uniform(std::size_t k);
    static MixWeights vertex(std::size_t k, std::size_t index);

    std::size_t size() const { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    std::span<const double> values() const { return w_; }
    std::size_t argmax() const;
    /// Hands over the storage; the object is left empty.
    std::vector<double> release() && { return std::move(w_); }

private:
    std::vector<double> w_;
};

/// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::span<const double> v);

}  // namespace regimekit
