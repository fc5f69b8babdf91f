#include "regimekit/governor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace regimekit {

namespace {

constexpr int kNeverSwitched = std::numeric_limits<int>::max() / 2;

double log_add_exp(double a, double b) {
    if (a == -kInfinity) return b;
    if (b == -kInfinity) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

// Shifts v to a normalized log law and writes the matching weights to lin.
void normalize_log(std::vector<double>& v, std::vector<double>& lin) {
    double m = -kInfinity;
    for (double x : v) m = std::max(m, x);
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        lin[k] = std::exp(v[k] - m);
        s += lin[k];
    }
    const double lse = m + std::log(s);
    for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] -= lse;
        lin[k] /= s;
    }
}

std::vector<double> to_log(const MixWeights& pi) {
    std::vector<double> out(pi.size());
    for (std::size_t k = 0; k < pi.size(); ++k) out[k] = pi[k] > 0.0 ? std::log(pi[k]) : -kInfinity;
    return out;
}

}  // namespace

double GovernorConfig::effective_eps_sparse(std::size_t k) const {
    if (eps_sparse) return *eps_sparse;
    return alpha < 1.0 ? 0.5 / static_cast<double>(k) : 0.0;
}

double GovernorConfig::uniform_mix_weight() const {
    const double excess = std::max(0.0, alpha - 1.0) * prior_strength;
    return excess / (1.0 + excess);
}

void GovernorConfig::validate(std::size_t k) const {
    if (!(alpha > 0.0)) throw std::invalid_argument("governor.alpha must be > 0");
    if (!(beta_ema >= 0.0 && beta_ema < 1.0)) throw std::invalid_argument("governor.beta_ema must be in [0,1)");
    if (!(lambda_forget > 0.0 && lambda_forget <= 1.0)) throw std::invalid_argument("governor.lambda_forget must be in (0,1]");
    const double eps = effective_eps_sparse(k);
    if (!(eps >= 0.0 && eps < 1.0 / static_cast<double>(k))) throw std::invalid_argument("governor.eps_sparse must be in [0, 1/K)");
    if (dwell_steps < 0) throw std::invalid_argument("governor.dwell_steps must be >= 0");
    if (!(eta > 0.0)) throw std::invalid_argument("governor.eta must be > 0");
    if (!(prior_strength >= 0.0)) throw std::invalid_argument("governor.prior_strength must be >= 0");
}

GovernorState GovernorState::initial(std::size_t k) { return from(MixWeights::uniform(k)); }

GovernorState GovernorState::from(const MixWeights& pi0) {
    GovernorState s;
    s.pi = pi0;
    s.pi_prev = pi0;
    s.log_belief = to_log(pi0);
    s.dominant = pi0.argmax();
    s.steps_since_switch = kNeverSwitched;
    return s;
}

double log_likelihood(const Specialist& s, const StateSample& x, const LossConfig& cfg) {
    if (!x.a_obs) throw PredictionOnlySample("likelihood needs an observed sample");
    const double e = *x.a_obs - s.predict(x).a_hat;
    const double sig = s.sigma();
    return -0.5 * e * e / (sig * sig) - std::log(sig * std::sqrt(2.0 * std::numbers::pi)) - physics_penalty(x, cfg);
}

double likelihood(const Specialist& s, const StateSample& x, const LossConfig& cfg) {
    return std::exp(log_likelihood(s, x, cfg));
}

MixWeights enforce_sparsity(const MixWeights& pi, double eps) {
    if (!(eps >= 0.0 && eps < 1.0 / static_cast<double>(pi.size()))) {
        throw std::invalid_argument("sparsity threshold must be in [0, 1/K)");
    }
    std::vector<double> w(pi.values().begin(), pi.values().end());
    bool any = false;
    for (double& x : w) {
        if (x < eps) x = 0.0;
        else any = true;
    }
    if (!any) return MixWeights::vertex(pi.size(), pi.argmax());
    return MixWeights(std::move(w));
}

GovernorState apply_dwell(GovernorState state, const GovernorConfig& cfg) {
    const std::size_t leader = state.pi.argmax();
    if (leader != state.dominant && state.steps_since_switch >= cfg.dwell_steps) {
        state.dominant = leader;
        state.steps_since_switch = 0;
        ++state.committed_switches;
    }
    return state;
}

Prediction blend(const MixWeights& pi, std::span<const Prediction> predictions) {
    if (pi.size() != predictions.size()) throw std::invalid_argument("blend: weight and prediction counts differ");
    double lo = kInfinity, hi = -kInfinity, acc = 0.0;
    for (std::size_t k = 0; k < pi.size(); ++k) {
        acc += pi[k] * predictions[k].a_hat;
        lo = std::min(lo, predictions[k].a_hat);
        hi = std::max(hi, predictions[k].a_hat);
    }
    // Rounding can leave the sum an ulp outside the hull.
    return {std::clamp(acc, lo, hi)};
}

double map_to_physics(const MixWeights& pi, const Library& lib) {
    if (pi.size() != lib.size()) throw std::invalid_argument("map_to_physics: weight and library sizes differ");
    double lo = kInfinity, hi = -kInfinity, acc = 0.0;
    for (std::size_t k = 0; k < pi.size(); ++k) {
        acc += pi[k] * lib[k].mu();
        lo = std::min(lo, lib[k].mu());
        hi = std::max(hi, lib[k].mu());
    }
    return std::clamp(acc, lo, hi);
}

SpecialistEvidence evaluate(const Library& lib, const StateSample& x, const LossConfig& cfg) {
    SpecialistEvidence ev;
    ev.log_likelihood.reserve(lib.size());
    ev.loss.reserve(lib.size());
    ev.prediction.reserve(lib.size());
    for (const auto& s : lib.entries()) {
        ev.prediction.push_back(s.predict(x));
        if (x.a_obs) {
            const double e = *x.a_obs - ev.prediction.back().a_hat;
            const double pen = physics_penalty(x, cfg);
            const double sig = s.sigma();
            ev.loss.push_back(e * e / (sig * sig) + pen);
            ev.log_likelihood.push_back(-0.5 * e * e / (sig * sig) - std::log(sig * std::sqrt(2.0 * std::numbers::pi)) - pen);
        }
    }
    return ev;
}

GovernorState update(GovernorState state, const SpecialistEvidence& ev, const GovernorConfig& cfg) {
    const std::size_t K = state.pi.size();
    if (ev.log_likelihood.size() != K || ev.loss.size() != K) {
        throw std::invalid_argument("governor update needs one observed likelihood per specialist");
    }

    // exp underflows to zero only below about -745.
    state.likelihood_collapse = std::all_of(ev.log_likelihood.begin(), ev.log_likelihood.end(),
                                            [](double ll) { return ll < -745.0 && std::exp(ll) == 0.0; });
    std::vector<double> post = std::move(state.work);
    post.resize(K);
    std::vector<double> lin = std::move(state.pi_prev).release();
    lin.resize(K);
    if (state.likelihood_collapse) {
        std::fill(post.begin(), post.end(), -std::log(static_cast<double>(K)));
        std::fill(lin.begin(), lin.end(), 1.0 / static_cast<double>(K));
    } else {
        for (std::size_t k = 0; k < K; ++k) {
            const double prior = state.log_belief[k];
            if (cfg.mode == InferenceMode::ExactBayes) {
                post[k] = prior == -kInfinity ? -kInfinity : cfg.lambda_forget * prior + ev.log_likelihood[k];
            } else {
                post[k] = prior - cfg.eta * ev.loss[k];
            }
        }
        normalize_log(post, lin);
    }

    if (const double w = cfg.uniform_mix_weight(); w > 0.0) {
        const double lw = std::log(w / static_cast<double>(K));
        for (double& p : post) p = log_add_exp(std::log1p(-w) + p, lw);
        normalize_log(post, lin);
    }

    if (cfg.beta_ema > 0.0 && !state.likelihood_collapse) {
        // A convex mix of two normalized laws stays normalized. Mix linearly
        // unless a term is close to underflow.
        constexpr double kLinearFloor = -700.0;
        const double beta = cfg.beta_ema;
        for (std::size_t k = 0; k < K; ++k) {
            const double a = state.log_belief[k];
            if (a > kLinearFloor && post[k] > kLinearFloor) {
                lin[k] = beta * std::exp(a) + (1.0 - beta) * lin[k];
                post[k] = std::log(lin[k]);
            } else {
                post[k] = log_add_exp(std::log(beta) + a, std::log1p(-beta) + post[k]);
                lin[k] = std::exp(post[k]);
            }
        }
    }

    state.work = std::move(state.log_belief);
    state.log_belief = std::move(post);
    state.pi_prev = std::move(state.pi);
    const double eps = cfg.effective_eps_sparse(K);
    state.pi = eps > 0.0 ? enforce_sparsity(MixWeights(std::move(lin)), eps) : MixWeights(std::move(lin));
    ++state.step;
    if (state.steps_since_switch < kNeverSwitched) ++state.steps_since_switch;
    return apply_dwell(std::move(state), cfg);
}

GovernorState update(GovernorState state, const Library& lib, const StateSample& x, const GovernorConfig& cfg) {
    if (!x.a_obs) throw PredictionOnlySample("governor update needs an observed sample");
    return update(std::move(state), evaluate(lib, x, cfg.loss), cfg);
}

}  // namespace regimekit
