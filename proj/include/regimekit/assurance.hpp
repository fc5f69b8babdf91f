#pragma once

#include "regimekit/integrity.hpp"
#include "regimekit/library.hpp"
#include "regimekit/mix_weights.hpp"
#include "regimekit/specialist.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace regimekit {

/// { center + G xi : xi in [-1,1]^m }.
struct Zonotope {
    Eigen::VectorXd center;
    Eigen::MatrixXd generators;  // n x m, one generator per column

    Zonotope() = default;
    Zonotope(Eigen::VectorXd c, Eigen::MatrixXd g);

    static Zonotope interval(double center, double radius);
    static Zonotope box(const Eigen::VectorXd& center, const Eigen::VectorXd& radii);

    Eigen::Index dim() const { return center.size(); }
    Eigen::Index order() const { return generators.cols(); }
    /// Half-widths of the axis-aligned bounding box.
    Eigen::VectorXd radii() const;
};

Zonotope linear_map(const Eigen::MatrixXd& A, const Zonotope& z);
Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b);
/// Keeps the largest generators and boxes the rest so that order <= max_generators.
Zonotope reduce_order(const Zonotope& z, Eigen::Index max_generators);

/// Exists xi in [-1,1]^m with |c + G xi - x|_inf <= tol (LP feasibility).
bool zonotope_contains(const Zonotope& z, const Eigen::VectorXd& x, double tol = 1e-9);

/// Exact membership test when z is an axis-aligned box (square diagonal
/// generators); nullopt for any other shape.
std::optional<bool> box_membership(const Zonotope& z, const Eigen::VectorXd& x);

/// x in Conv(union of zs), decided as one LP over lambda-scaled generator boxes.
bool hull_contains(const std::vector<const Zonotope*>& zs, const Eigen::VectorXd& x, double tol = 1e-9);

struct RpiResult {
    Zonotope set;
    int iterations = 0;
    bool converged = false;
};

/// Iterates Z <- A Z + W from Z = W until the added generators fall below tol.
RpiResult compute_rpi(const Eigen::MatrixXd& A, const Zonotope& w, double tol = 1e-6, int max_iter = 10000,
                      Eigen::Index max_generators = 20);

double spectral_radius(const Eigen::MatrixXd& A);

class UnstableDynamics : public std::invalid_argument {
public:
    explicit UnstableDynamics(double rho);
    double spectral_radius() const { return rho_; }

private:
    double rho_;
};

/// Which state vector the envelope zonotopes live in.
enum class EnvelopeState { Mu, SpeedMu };

std::string to_string(EnvelopeState s);
EnvelopeState envelope_state_from_string(const std::string& s);

struct SafetyEnvelope {
    EnvelopeState state = EnvelopeState::Mu;
    double eps_active = 1e-3;
    double tol = 1e-9;
    std::vector<std::string> ids;  // aligned with the library order
    std::vector<Zonotope> zonotopes;

    /// Reorders entries to match `lib` and checks one zonotope per specialist.
    SafetyEnvelope aligned_to(const Library& lib) const;
    void validate() const;
};

struct EnvelopeCheck {
    bool contained = false;
    bool no_jurisdiction = false;
};

EnvelopeCheck envelope_contains(const SafetyEnvelope& env, const MixWeights& pi, const Eigen::VectorXd& x);

/// Settings used to derive per-specialist envelopes from the friction-estimate filter.
struct EnvelopeBuildConfig {
    EnvelopeState state = EnvelopeState::SpeedMu;
    double filter_pole = 0.9;    // z' = pole z + (1 - pole) measured mu
    double disturbance = 0.01;   // bound on the per-step filter innovation
    double eps_active = 1e-3;
    double v_max = 40.0;
    double rpi_tol = 1e-9;
    int rpi_max_iter = 10000;
};

SafetyEnvelope build_envelope(const Library& lib, const EnvelopeBuildConfig& cfg);

enum class Channel { AIActive, FallbackActive };
enum class Source { AI, Fallback };

std::string to_string(Channel c);
std::string to_string(Source s);

struct GuardConfig {
    int hung_patience = 5;
    int recovery_hysteresis = 20;
};

struct ChannelState {
    Channel channel = Channel::AIActive;
    int steps_in_channel = 0;
    int good_streak = 0;  // consecutive Nominal / PeacefulSuccession reports while in fallback
    int hung_streak = 0;
};

struct GuardStep {
    ChannelState state;
    Source source = Source::AI;
};

GuardStep guard_step(ChannelState ch, const IntegrityReport& report, const GuardConfig& cfg);

struct FallbackConfig {
    double mu_worst = 0.15;
    double a_target = 3.0;
};

/// Worst-case-friction braking law; pure.
double fallback_command(const StateSample& x, const FallbackConfig& cfg);

}  // namespace regimekit
