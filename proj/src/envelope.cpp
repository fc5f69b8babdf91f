#include "regimekit/assurance.hpp"

#include <stdexcept>

namespace regimekit {

std::string to_string(EnvelopeState s) { return s == EnvelopeState::Mu ? "mu" : "v_mu"; }

EnvelopeState envelope_state_from_string(const std::string& s) {
    if (s == "mu") return EnvelopeState::Mu;
    if (s == "v_mu") return EnvelopeState::SpeedMu;
    throw std::invalid_argument("unknown envelope state '" + s + "' (expected mu or v_mu)");
}

void SafetyEnvelope::validate() const {
    if (!(eps_active > 0.0 && eps_active < 1.0)) throw std::invalid_argument("envelope eps_active must be in (0,1)");
    if (!(tol >= 0.0)) throw std::invalid_argument("envelope tol must be >= 0");
    if (ids.size() != zonotopes.size()) throw std::invalid_argument("envelope ids and zonotopes differ in count");
    const Eigen::Index n = state == EnvelopeState::Mu ? 1 : 2;
    for (std::size_t i = 0; i < zonotopes.size(); ++i) {
        if (zonotopes[i].dim() != n) {
            throw std::invalid_argument("envelope zonotope '" + ids[i] + "' has dimension " +
                                        std::to_string(zonotopes[i].dim()) + ", expected " + std::to_string(n));
        }
    }
}

SafetyEnvelope SafetyEnvelope::aligned_to(const Library& lib) const {
    validate();
    if (ids.size() != lib.size()) {
        throw std::invalid_argument("envelope has " + std::to_string(ids.size()) + " zonotopes for " +
                                    std::to_string(lib.size()) + " specialists");
    }
    SafetyEnvelope out = *this;
    out.ids.clear();
    out.zonotopes.clear();
    for (const auto& s : lib.entries()) {
        std::size_t found = ids.size();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] == s.id()) found = i;
        }
        if (found == ids.size()) throw std::invalid_argument("envelope has no zonotope for specialist '" + s.id() + "'");
        out.ids.push_back(ids[found]);
        out.zonotopes.push_back(zonotopes[found]);
    }
    return out;
}

EnvelopeCheck envelope_contains(const SafetyEnvelope& env, const MixWeights& pi, const Eigen::VectorXd& x) {
    if (pi.size() != env.zonotopes.size()) throw std::invalid_argument("envelope_contains: weight count mismatch");
    bool any_active = false;
    for (std::size_t j = 0; j < pi.size(); ++j) {
        if (!(pi[j] > env.eps_active)) continue;
        any_active = true;
        if (box_membership(env.zonotopes[j], x).value_or(false)) return {true, false};
    }
    if (!any_active) return {false, true};
    std::vector<const Zonotope*> active;
    active.reserve(pi.size());
    for (std::size_t j = 0; j < pi.size(); ++j) {
        if (pi[j] > env.eps_active) active.push_back(&env.zonotopes[j]);
    }
    if (active.empty()) return {false, true};
    return {hull_contains(active, x, env.tol), false};
}

SafetyEnvelope build_envelope(const Library& lib, const EnvelopeBuildConfig& cfg) {
    if (!(cfg.filter_pole >= 0.0 && cfg.filter_pole < 1.0)) throw std::invalid_argument("envelope filter_pole must be in [0,1)");
    if (!(cfg.disturbance > 0.0)) throw std::invalid_argument("envelope disturbance must be > 0");

    const RpiResult rpi = compute_rpi(Eigen::MatrixXd::Constant(1, 1, cfg.filter_pole), Zonotope::interval(0.0, cfg.disturbance),
                                      cfg.rpi_tol, cfg.rpi_max_iter);
    const double radius = rpi.set.radii()(0);

    SafetyEnvelope env;
    env.state = cfg.state;
    env.eps_active = cfg.eps_active;
    for (const auto& s : lib.entries()) {
        env.ids.push_back(s.id());
        if (cfg.state == EnvelopeState::Mu) {
            env.zonotopes.push_back(Zonotope::interval(s.mu(), radius));
        } else {
            Eigen::Vector2d c(cfg.v_max / 2.0, s.mu());
            Eigen::Vector2d r(cfg.v_max / 2.0, radius);
            env.zonotopes.push_back(Zonotope::box(c, r));
        }
    }
    env.validate();
    return env;
}

}  // namespace regimekit
