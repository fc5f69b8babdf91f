#pragma once

#include "regimekit/mix_weights.hpp"
#include "regimekit/specialist.hpp"

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace regimekit {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct VettingReport {
    std::string candidate_id;
    double candidate_mu = 0.0;
    double candidate_error = 0.0;
    double best_combo_error = kInfinity;
    MixWeights combo_weights;  // empty when the library was empty
    bool admitted = false;
};

/// Ordered, append-only collection of admitted specialists.
class Library {
public:
    explicit Library(double tau = 1e-4);

    double tau() const { return tau_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const Specialist& operator[](std::size_t i) const { return entries_[i]; }
    std::span<const Specialist> entries() const { return entries_; }
    std::vector<double> mus() const;
    std::ptrdiff_t index_of(const std::string& id) const;

    /// Appends without vetting. Used when restoring a library file whose
    /// entries were vetted when the file was produced.
    void restore_entry(Specialist s);

    /// Vets `cand` and appends it only if admitted.
    VettingReport admit(const Specialist& cand, std::span<const StateSample> validation);

private:
    double tau_;
    std::vector<Specialist> entries_;
};

struct ComboFit {
    MixWeights weights;
    double error = kInfinity;
};

/// Mean squared error of a single specialist on observed samples.
double mean_squared_error(const Specialist& s, std::span<const StateSample> validation);

/// Best convex blend of the library on `validation`, by projected gradient.
ComboFit best_convex_combination_error(const Library& lib, std::span<const StateSample> validation,
                                       int iterations = 500);

VettingReport vet_candidate(const Library& lib, const Specialist& cand, std::span<const StateSample> validation);

/// Empty library yields +inf.
double coverage_residual(const Library& lib, std::span<const StateSample> probe);

using DataSource = std::function<std::vector<StateSample>(double mu)>;
using CandidateFactory = std::function<Specialist(double mu)>;

struct AccretionResult {
    Library library;
    std::vector<VettingReport> log;
    std::size_t admitted = 0;
};

/// Greedy accretion over a parameter grid: each round vets the remaining
/// candidates in decreasing coverage-residual order and admits the first that
/// passes; rejected candidates leave the pool. Stops when a round admits none.
AccretionResult accrete(Library lib, std::span<const double> param_grid, const DataSource& data,
                        const CandidateFactory& make_candidate);

}  // namespace regimekit
