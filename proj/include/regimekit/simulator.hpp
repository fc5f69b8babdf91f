#pragma once

#include "regimekit/assurance.hpp"
#include "regimekit/conformal.hpp"
#include "regimekit/governor.hpp"
#include "regimekit/integrity.hpp"
#include "regimekit/library.hpp"
#include "regimekit/util.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace regimekit {

struct PlantConfig {
    double dt = 0.01;
    double g = kGravity;
    double v0 = 30.0;
    double noise_sigma = 0.3;
    std::uint64_t seed = 1;
    double horizon = 10.0;

    long steps() const;
    void validate() const;
};

struct MuSchedule {
    enum class Kind { Constant, StepShock, LinearDrift, Fault };
    Kind kind = Kind::Constant;
    double mu = 1.0;           // Constant
    double t_star = 5.0;       // StepShock, Fault
    double mu_before = 1.0;    // StepShock, Fault (nominal friction before the event)
    double mu_after = 0.2;     // StepShock
    double mu_start = 1.0;     // LinearDrift
    double mu_end = 0.8;       // LinearDrift
    double t_end = 10.0;       // LinearDrift
    double mu_fault = 0.05;    // Fault

    static MuSchedule constant(double mu);
    static MuSchedule step_shock(double t_star, double before, double after);
    static MuSchedule linear_drift(double start, double end, double t_end);
    static MuSchedule fault(double t_star, double mu_fault, double before = 1.0);

    /// Time of the scripted regime change, if the schedule has one.
    std::optional<double> event_time() const;
    void validate(double horizon) const;
};

std::string to_string(MuSchedule::Kind k);
MuSchedule::Kind schedule_kind_from_string(const std::string& s);

/// Left-closed at event times: the new value applies from t_star on.
double mu_schedule_at(const MuSchedule& s, double t);

struct PlantStep {
    double v_next = 0.0;
    double a_obs = 0.0;
};

/// Point-mass longitudinal braking; noise enters the observation only.
PlantStep step_plant(double v, double b, double mu, const PlantConfig& cfg, double noise_draw);

/// Observed samples for one friction level: a low-discrepancy sweep of (v, b)
/// that is identical for every mu, so pooled regimes differ only in friction.
std::vector<StateSample> generate_regime_samples(double mu, std::size_t n, double noise_sigma, std::uint64_t seed,
                                                 std::uint64_t stream = 0);

struct MonolithModel {
    std::vector<double> theta;  // [intercept, v, b]
    double sigma = 0.0;

    double mu_hat() const { return theta.at(2) / kGravity; }
    double predict(const StateSample& x) const;
};

MonolithModel fit_monolith(std::span<const StateSample> pooled);

struct ControlConfig {
    double a_target = 3.0;
};

struct EnvelopeFilterConfig {
    double pole = 0.9;
    double b_min = 0.05;
    int warmup_steps = 20;
};

struct ScenarioConfig {
    std::string name = "scenario";
    PlantConfig plant;
    MuSchedule schedule;
    GovernorConfig governor;
    IntegrityConfig integrity;
    GuardConfig guard;
    FallbackConfig fallback;
    ControlConfig control;
    EnvelopeFilterConfig envelope_filter;
    double conformal_eps = 0.1;
    std::optional<std::vector<double>> initial_pi;

    void validate(std::size_t k) const;
};

struct Artifacts {
    Library library;
    SafetyEnvelope envelope;
    std::vector<CalibrationRecord> calibration;  // aligned with library order

    /// Aligns envelope and calibration with the library; throws on mismatch.
    static Artifacts assemble(Library lib, const SafetyEnvelope& env, const std::vector<CalibrationRecord>& cal);
};

struct TraceRecord {
    long step = 0;
    double t = 0.0;
    double v_true = 0.0;
    double mu_true = 0.0;
    double b_cmd = 0.0;
    double a_obs = 0.0;
    std::vector<double> pi;
    std::string dominant;
    double mu_hat = 0.0;
    double a_hat = 0.0;
    double mu_filtered = 0.0;
    PredictionInterval interval;
    IntegrityReport integrity;
    Channel channel = Channel::AIActive;
    Source source = Source::AI;
};

struct RunResult {
    std::vector<TraceRecord> trace;
    double loop_seconds = 0.0;  // governor + integrity + guard, summed over steps
};

RunResult run_scenario(const ScenarioConfig& cfg, const Artifacts& art);

struct MonolithRecord {
    long step = 0;
    double t = 0.0;
    double v_true = 0.0;
    double mu_true = 0.0;
    double b_cmd = 0.0;
    double a_obs = 0.0;
    double a_hat = 0.0;
    double mu_hat = 0.0;
};

/// Same plant, schedule and noise draws, controlled from the monolith's friction estimate.
std::vector<MonolithRecord> run_monolith(const ScenarioConfig& cfg, const MonolithModel& model);

struct TimeToUncertainty {
    std::optional<long> steps;
    std::string reason;  // "crossed", "never_crossed", "no_event", "no_posterior"
};

TimeToUncertainty time_to_uncertainty(std::span<const TraceRecord> trace, double t_star, double u_threshold);
TimeToUncertainty time_to_uncertainty(std::span<const MonolithRecord> trace, double t_star, double u_threshold);

struct ScenarioSummary {
    std::string name;
    std::uint64_t seed = 0;
    long steps = 0;
    TimeToUncertainty ttu;
    long switches_committed = 0;
    long fallback_steps = 0;
    long hung_steps = 0;
    long shock_steps = 0;
    long failure_steps = 0;
    long envelope_exit_steps = 0;
    double coverage = 0.0;
    double coverage_vertex = 0.0;  // steps where one weight exceeds 0.99
    double mu_hat_terminal = 0.0;
    double mu_hat_mae = 0.0;
    double mu_hat_max_err = 0.0;
    std::optional<double> monolith_mu_hat;
    std::optional<double> monolith_mu_hat_mae;
};

ScenarioSummary summarize(const ScenarioConfig& cfg, std::span<const TraceRecord> trace);
void attach_monolith(ScenarioSummary& summary, std::span<const MonolithRecord> trace);

}  // namespace regimekit
