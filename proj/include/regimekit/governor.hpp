#pragma once

#include "regimekit/library.hpp"
#include "regimekit/mix_weights.hpp"
#include "regimekit/specialist.hpp"

#include <optional>
#include <span>
#include <vector>

namespace regimekit {

enum class InferenceMode { ExactBayes, ExpGrad };

struct GovernorConfig {
    double alpha = 1.0;          // Dirichlet concentration
    double beta_ema = 0.5;       // weight on the previous posterior
    double lambda_forget = 0.5;  // exponent applied to the previous posterior
    std::optional<double> eps_sparse;  // derived from alpha when unset
    int dwell_steps = 5;
    InferenceMode mode = InferenceMode::ExactBayes;
    double eta = 0.5;             // ExpGrad step
    double prior_strength = 0.01; // uniform-mixing weight per unit of (alpha - 1)
    LossConfig loss;

    /// alpha < 1 pushes toward a single winner; alpha >= 1 permits mixing.
    double effective_eps_sparse(std::size_t k) const;
    /// Weight of the uniform component mixed in after each Bayes step.
    double uniform_mix_weight() const;
    void validate(std::size_t k) const;
};

struct GovernorState {
    MixWeights pi;       // published weights (after sparsity)
    MixWeights pi_prev;
    std::vector<double> log_belief;  // unsparsified posterior, normalized, log domain
    std::size_t dominant = 0;
    int steps_since_switch = 0;
    long step = 0;
    long committed_switches = 0;
    bool likelihood_collapse = false;  // set on the step where every likelihood underflowed
    std::vector<double> work;          // storage recycled between updates

    static GovernorState initial(std::size_t k);
    static GovernorState from(const MixWeights& pi0);
};

/// Gaussian observation density, tilted by exp(-physics penalty).
double likelihood(const Specialist& s, const StateSample& x, const LossConfig& cfg = {});
double log_likelihood(const Specialist& s, const StateSample& x, const LossConfig& cfg = {});

/// Components below eps are dropped and the rest renormalized; if nothing
/// survives, the argmax takes all mass.
MixWeights enforce_sparsity(const MixWeights& pi, double eps);

/// Holds the committed regime label while a switch would violate the dwell bound.
GovernorState apply_dwell(GovernorState state, const GovernorConfig& cfg);

Prediction blend(const MixWeights& pi, std::span<const Prediction> predictions);

/// Blended physical coefficient: sum_k pi_k * mu_k.
double map_to_physics(const MixWeights& pi, const Library& lib);

struct SpecialistEvidence {
    std::vector<double> log_likelihood;
    std::vector<double> loss;
    std::vector<Prediction> prediction;
};

SpecialistEvidence evaluate(const Library& lib, const StateSample& x, const LossConfig& cfg);

/// One posterior step from precomputed evidence.
GovernorState update(GovernorState state, const SpecialistEvidence& ev, const GovernorConfig& cfg);

/// Convenience overload that evaluates the library first.
GovernorState update(GovernorState state, const Library& lib, const StateSample& x, const GovernorConfig& cfg);

}  // namespace regimekit
