#include "regimekit/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace regimekit {

long PlantConfig::steps() const { return static_cast<long>(std::llround(horizon / dt)); }

void PlantConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("plant.dt must be > 0");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("plant.noise_sigma must be >= 0");
    if (!(v0 >= 0.0)) throw std::invalid_argument("plant.v0 must be >= 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("plant.horizon must be > 0");
    if (!(g > 0.0)) throw std::invalid_argument("plant.g must be > 0");
}

MuSchedule MuSchedule::constant(double mu) {
    MuSchedule s;
    s.kind = Kind::Constant;
    s.mu = mu;
    return s;
}

MuSchedule MuSchedule::step_shock(double t_star, double before, double after) {
    MuSchedule s;
    s.kind = Kind::StepShock;
    s.t_star = t_star;
    s.mu_before = before;
    s.mu_after = after;
    return s;
}

MuSchedule MuSchedule::linear_drift(double start, double end, double t_end) {
    MuSchedule s;
    s.kind = Kind::LinearDrift;
    s.mu_start = start;
    s.mu_end = end;
    s.t_end = t_end;
    return s;
}

MuSchedule MuSchedule::fault(double t_star, double mu_fault, double before) {
    MuSchedule s;
    s.kind = Kind::Fault;
    s.t_star = t_star;
    s.mu_fault = mu_fault;
    s.mu_before = before;
    return s;
}

std::optional<double> MuSchedule::event_time() const {
    if (kind == Kind::StepShock || kind == Kind::Fault) return t_star;
    return std::nullopt;
}

void MuSchedule::validate(double horizon) const {
    auto positive = [](double v, const char* field) {
        if (!(v > 0.0)) throw std::invalid_argument(std::string("schedule.") + field + " must be > 0");
    };
    switch (kind) {
        case Kind::Constant: positive(mu, "mu"); break;
        case Kind::StepShock:
            positive(mu_before, "mu_before");
            positive(mu_after, "mu_after");
            break;
        case Kind::LinearDrift:
            positive(mu_start, "mu_start");
            positive(mu_end, "mu_end");
            positive(t_end, "t_end");
            break;
        case Kind::Fault:
            positive(mu_before, "mu_before");
            positive(mu_fault, "mu_fault");
            break;
    }
    if (event_time() && !(t_star >= 0.0 && t_star <= horizon)) throw std::invalid_argument("schedule.t_star outside the horizon");
}

std::string to_string(MuSchedule::Kind k) {
    switch (k) {
        case MuSchedule::Kind::Constant: return "constant";
        case MuSchedule::Kind::StepShock: return "step_shock";
        case MuSchedule::Kind::LinearDrift: return "linear_drift";
        case MuSchedule::Kind::Fault: return "fault";
    }
    return "constant";
}

MuSchedule::Kind schedule_kind_from_string(const std::string& s) {
    for (auto k : {MuSchedule::Kind::Constant, MuSchedule::Kind::StepShock, MuSchedule::Kind::LinearDrift, MuSchedule::Kind::Fault}) {
        if (to_string(k) == s) return k;
    }
    throw std::invalid_argument("unknown schedule kind '" + s + "'");
}

namespace {

// Step times are k*dt; absorb the rounding so that t = t_star lands on the new side.
bool at_or_after(double t, double t_star) { return t >= t_star - 1e-9 * std::max(1.0, std::abs(t_star)); }

}  // namespace

double mu_schedule_at(const MuSchedule& s, double t) {
    switch (s.kind) {
        case MuSchedule::Kind::Constant: return s.mu;
        case MuSchedule::Kind::StepShock: return at_or_after(t, s.t_star) ? s.mu_after : s.mu_before;
        case MuSchedule::Kind::Fault: return at_or_after(t, s.t_star) ? s.mu_fault : s.mu_before;
        case MuSchedule::Kind::LinearDrift: {
            const double frac = std::clamp(t / s.t_end, 0.0, 1.0);
            return s.mu_start + (s.mu_end - s.mu_start) * frac;
        }
    }
    return s.mu;
}

PlantStep step_plant(double v, double b, double mu, const PlantConfig& cfg, double noise_draw) {
    if (!(b >= 0.0 && b <= 1.0)) throw std::domain_error("braking demand outside [0,1]");
    const double decel = mu * cfg.g * b;
    return {std::max(0.0, v - cfg.dt * decel), decel + cfg.noise_sigma * noise_draw};
}

std::vector<StateSample> generate_regime_samples(double mu, std::size_t n, double noise_sigma, std::uint64_t seed,
                                                 std::uint64_t stream) {
    const CounterNormal rng(seed, stream);
    std::vector<StateSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double k = static_cast<double>(i + 1);
        const double b = 0.1 + 0.9 * (k * 0.6180339887498949 - std::floor(k * 0.6180339887498949));
        const double v = 5.0 + 25.0 * (k * 0.4142135623730951 - std::floor(k * 0.4142135623730951));
        StateSample s;
        s.t = static_cast<double>(i);
        s.v = v;
        s.b = b;
        s.a_obs = mu * kGravity * b + noise_sigma * rng.at(i);
        out.push_back(s);
    }
    return out;
}

double MonolithModel::predict(const StateSample& x) const { return theta.at(0) + theta.at(1) * x.v + theta.at(2) * x.b; }

MonolithModel fit_monolith(std::span<const StateSample> pooled) {
    AffineFitConfig cfg;
    cfg.jurisdiction_halfwidth = kInfinity;
    const Specialist fit = fit_affine(pooled, cfg, "monolith");
    return {std::vector<double>(fit.params().begin(), fit.params().end()), fit.sigma()};
}

void ScenarioConfig::validate(std::size_t k) const {
    plant.validate();
    schedule.validate(plant.horizon);
    governor.validate(k);
    integrity.validate();
    if (guard.hung_patience < 0 || guard.recovery_hysteresis < 1) throw std::invalid_argument("guard settings invalid");
    if (!(fallback.mu_worst > 0.0)) throw std::invalid_argument("fallback.mu_worst must be > 0");
    if (!(control.a_target >= 0.0)) throw std::invalid_argument("control.a_target must be >= 0");
    if (!(envelope_filter.pole >= 0.0 && envelope_filter.pole < 1.0)) throw std::invalid_argument("envelope_filter.pole must be in [0,1)");
    if (envelope_filter.warmup_steps < 0) throw std::invalid_argument("envelope_filter.warmup_steps must be >= 0");
    if (!(conformal_eps > 0.0 && conformal_eps < 1.0)) throw std::invalid_argument("conformal.eps_level must be in (0,1)");
    if (initial_pi && initial_pi->size() != k) throw std::invalid_argument("initial_pi length does not match the library");
}

Artifacts Artifacts::assemble(Library lib, const SafetyEnvelope& env, const std::vector<CalibrationRecord>& cal) {
    if (lib.empty()) throw std::invalid_argument("library is empty");
    Artifacts a{std::move(lib), {}, {}};
    a.envelope = env.aligned_to(a.library);
    for (const auto& s : a.library.entries()) {
        auto it = std::find_if(cal.begin(), cal.end(), [&](const CalibrationRecord& r) { return r.specialist_id == s.id(); });
        if (it == cal.end()) throw std::invalid_argument("no calibration record for specialist '" + s.id() + "'");
        it->validate();
        a.calibration.push_back(*it);
    }
    return a;
}

namespace {

double ai_command(double mu_hat, const ScenarioConfig& cfg) {
    if (!(mu_hat > 0.0)) return 1.0;
    return std::clamp(cfg.control.a_target / (mu_hat * cfg.plant.g), 0.0, 1.0);
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg, const Artifacts& art) {
    const Library& lib = art.library;
    const std::size_t K = lib.size();
    cfg.validate(K);

    const CounterNormal noise(cfg.plant.seed);
    GovernorState gov = cfg.initial_pi ? GovernorState::from(MixWeights(*cfg.initial_pi)) : GovernorState::initial(K);
    IntegrityMonitor monitor(cfg.integrity, K, cfg.plant.dt);
    ChannelState channel;

    double v = cfg.plant.v0;
    double mu_hat = map_to_physics(gov.pi, lib);
    double b_cmd = ai_command(mu_hat, cfg);
    double mu_filtered = mu_hat;
    long filtered_samples = 0;

    RunResult out;
    const long n_steps = cfg.plant.steps();
    out.trace.reserve(static_cast<std::size_t>(n_steps));
    using clock = std::chrono::steady_clock;
    clock::duration loop_time{};

    for (long i = 0; i < n_steps; ++i) {
        const double t = static_cast<double>(i) * cfg.plant.dt;
        const double mu_true = mu_schedule_at(cfg.schedule, t);
        const PlantStep ps = step_plant(v, b_cmd, mu_true, cfg.plant, noise.at(static_cast<std::uint64_t>(i)));

        StateSample x{t, v, b_cmd, ps.a_obs};
        const SpecialistEvidence ev = evaluate(lib, x, cfg.governor.loss);

        if (b_cmd > cfg.envelope_filter.b_min) {
            const double measured = ps.a_obs / (cfg.plant.g * b_cmd);
            ++filtered_samples;
            // Bias-corrected start: plain running mean until the pole's horizon is reached.
            const double gain = std::max(1.0 - cfg.envelope_filter.pole, 1.0 / static_cast<double>(filtered_samples));
            mu_filtered += gain * (measured - mu_filtered);
        }
        Eigen::VectorXd env_state(art.envelope.state == EnvelopeState::Mu ? 1 : 2);
        if (art.envelope.state == EnvelopeState::Mu) env_state << mu_filtered;
        else env_state << v, mu_filtered;

        const auto t0 = clock::now();
        gov = update(std::move(gov), ev, cfg.governor);
        EnvelopeCheck check{true, false};
        if (filtered_samples >= cfg.envelope_filter.warmup_steps) check = envelope_contains(art.envelope, gov.pi, env_state);
        const IntegrityReport report =
            monitor.observe(gov.pi, gov.pi_prev, ev.loss, !check.contained, check.no_jurisdiction, gov.likelihood_collapse);
        const GuardStep gs = guard_step(channel, report, cfg.guard);
        loop_time += clock::now() - t0;
        channel = gs.state;

        const Prediction blended = blend(gov.pi, ev.prediction);
        mu_hat = map_to_physics(gov.pi, lib);

        TraceRecord rec;
        rec.step = i;
        rec.t = t;
        rec.v_true = v;
        rec.mu_true = mu_true;
        rec.b_cmd = b_cmd;
        rec.a_obs = ps.a_obs;
        rec.pi.assign(gov.pi.values().begin(), gov.pi.values().end());
        rec.dominant = lib[gov.dominant].id();
        rec.mu_hat = mu_hat;
        rec.a_hat = blended.a_hat;
        rec.mu_filtered = mu_filtered;
        rec.interval = interval(gov.pi, ev.prediction, art.calibration);
        rec.integrity = report;
        rec.channel = channel.channel;
        rec.source = gs.source;
        out.trace.push_back(std::move(rec));

        // The fallback law is evaluated every step; the guard only selects.
        const double b_fallback = fallback_command(x, cfg.fallback);
        b_cmd = gs.source == Source::AI ? ai_command(mu_hat, cfg) : b_fallback;
        v = ps.v_next;
    }
    out.loop_seconds = std::chrono::duration<double>(loop_time).count();
    return out;
}

std::vector<MonolithRecord> run_monolith(const ScenarioConfig& cfg, const MonolithModel& model) {
    cfg.plant.validate();
    cfg.schedule.validate(cfg.plant.horizon);
    const CounterNormal noise(cfg.plant.seed);
    const double mu_hat = model.mu_hat();
    const double b_cmd = ai_command(mu_hat, cfg);
    double v = cfg.plant.v0;
    std::vector<MonolithRecord> out;
    const long n_steps = cfg.plant.steps();
    for (long i = 0; i < n_steps; ++i) {
        const double t = static_cast<double>(i) * cfg.plant.dt;
        const double mu_true = mu_schedule_at(cfg.schedule, t);
        const PlantStep ps = step_plant(v, b_cmd, mu_true, cfg.plant, noise.at(static_cast<std::uint64_t>(i)));
        StateSample x{t, v, b_cmd, ps.a_obs};
        out.push_back({i, t, v, mu_true, b_cmd, ps.a_obs, model.predict(x), mu_hat});
        v = ps.v_next;
    }
    return out;
}

namespace {

long event_step(double t_star, double dt) { return static_cast<long>(std::ceil(t_star / dt - 1e-9)); }

}  // namespace

TimeToUncertainty time_to_uncertainty(std::span<const TraceRecord> trace, double t_star, double u_threshold) {
    const long start = event_step(t_star, trace.empty() ? 1.0 : (trace.size() > 1 ? trace[1].t - trace[0].t : 1.0));
    for (const auto& r : trace) {
        if (r.step >= start && r.integrity.U > u_threshold) return {r.step - start, "crossed"};
    }
    return {std::nullopt, "never_crossed"};
}

TimeToUncertainty time_to_uncertainty(std::span<const MonolithRecord>, double, double) {
    return {std::nullopt, "no_posterior"};
}

ScenarioSummary summarize(const ScenarioConfig& cfg, std::span<const TraceRecord> trace) {
    ScenarioSummary s;
    s.name = cfg.name;
    s.seed = cfg.plant.seed;
    s.steps = static_cast<long>(trace.size());
    if (const auto ev = cfg.schedule.event_time()) {
        s.ttu = time_to_uncertainty(trace, *ev, cfg.integrity.U_hi_frac * std::log(static_cast<double>(trace.empty() ? 2 : trace.front().pi.size())));
    } else {
        s.ttu = {std::nullopt, "no_event"};
    }
    std::string last_dom;
    long vertex_steps = 0, vertex_hits = 0, hits = 0;
    double abs_err_sum = 0.0;
    for (const auto& r : trace) {
        if (!last_dom.empty() && r.dominant != last_dom) ++s.switches_committed;
        last_dom = r.dominant;
        s.fallback_steps += r.source == Source::Fallback ? 1 : 0;
        s.hung_steps += r.integrity.status == Status::HungParliament ? 1 : 0;
        s.shock_steps += r.integrity.status == Status::RegimeShock ? 1 : 0;
        s.failure_steps += r.integrity.status == Status::ConstitutionalFailure ? 1 : 0;
        s.envelope_exit_steps += r.integrity.envelope_exit ? 1 : 0;
        const bool hit = r.interval.contains(r.a_obs);
        hits += hit ? 1 : 0;
        if (*std::max_element(r.pi.begin(), r.pi.end()) > 0.99) {
            ++vertex_steps;
            vertex_hits += hit ? 1 : 0;
        }
        const double err = std::abs(r.mu_hat - r.mu_true);
        abs_err_sum += err;
        s.mu_hat_max_err = std::max(s.mu_hat_max_err, err);
    }
    if (!trace.empty()) {
        s.coverage = static_cast<double>(hits) / static_cast<double>(trace.size());
        s.coverage_vertex = vertex_steps ? static_cast<double>(vertex_hits) / static_cast<double>(vertex_steps) : 0.0;
        s.mu_hat_terminal = trace.back().mu_hat;
        s.mu_hat_mae = abs_err_sum / static_cast<double>(trace.size());
    }
    return s;
}

void attach_monolith(ScenarioSummary& summary, std::span<const MonolithRecord> trace) {
    if (trace.empty()) return;
    double err = 0.0;
    for (const auto& r : trace) err += std::abs(r.mu_hat - r.mu_true);
    summary.monolith_mu_hat = trace.back().mu_hat;
    summary.monolith_mu_hat_mae = err / static_cast<double>(trace.size());
}

}  // namespace regimekit
