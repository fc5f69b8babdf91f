// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are pinned
// here and nowhere else. Exit status is nonzero when any criterion fails.

#include "oracles.hpp"

#include "regimekit/io.hpp"
#include "regimekit/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace regimekit;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = REGIMEKIT_CONFIG_DIR;

// Pinned tolerances.
constexpr double kTerminalLo = 0.18, kTerminalHi = 0.22;
constexpr double kMonolithLo = 0.5, kMonolithHi = 0.7;
constexpr long kTtuMaxSteps = 20;
constexpr long kHandoverMaxSteps = 100;
constexpr double kHandoverWeight = 0.9;
constexpr double kRuntimeMaxSeconds = 5.0;
constexpr long kFrozenSteps = 100000;
constexpr double kOracleTol = 1e-9;
constexpr int kOracleStreams = 200;
constexpr long kSimplexSteps = 1000000;
constexpr double kSimplexTol = 1e-9;
constexpr double kHungFractionMax = 0.01;
constexpr double kCoverageResidualMax = 1e-4;
constexpr double kRpiTarget = 2.0, kRpiRelTol = 0.01;
constexpr int kRpiDraws = 1000;
constexpr int kHullInstances = 1000;
constexpr double kCoverageLo = 0.88, kCoverageHi = 0.92;
constexpr int kConformalTest = 10000;
constexpr int kDwell = 10;
constexpr int kDwellHorizon = 1000;
constexpr long kCusumSteps = 100000;
constexpr long kCusumMaxAlarms = 5;
constexpr int kCusumMaxDelay = 10;
constexpr int kCusumTrials = 1000;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s [%02d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
}

template <class... T>
std::string cat(const T&... parts) {
    std::ostringstream s;
    s.precision(6);
    (s << ... << parts);
    return s.str();
}

// Same pipeline as the command-line tool, in process.
struct Pipeline {
    BuildConfig build;
    AccretionResult accretion;
    Artifacts art;
};

Specialist grid_candidate(const BuildConfig& cfg, double mu) {
    const double h = cfg.jurisdiction_halfwidth;
    return make_analytic(mu, cfg.sigma, {mu - h, mu + h}, cat("S_mu", mu));
}

Pipeline& pipeline() {
    static Pipeline p = [] {
        Pipeline out;
        const auto root = read_json_file(kConfigs / "build.json");
        out.build = build_config_from_json(root);
        const auto cfg = out.build;
        const auto grid = cfg.grid();
        out.accretion = accrete(
            Library(cfg.tau), grid, [&](double mu) { return build_samples(cfg, mu); },
            [&](double mu) { return grid_candidate(cfg, mu); });
        const Library& lib = out.accretion.library;
        const auto env = build_envelope(lib, envelope_build_config_from_json(root));
        const auto ccfg = calibration_config_from_json(root);
        std::vector<CalibrationRecord> cal;
        for (std::size_t k = 0; k < lib.size(); ++k) {
            const auto s = generate_regime_samples(lib[k].mu(), static_cast<std::size_t>(ccfg.n_cal), ccfg.noise_sigma, ccfg.seed,
                                                   100 + k);
            cal.push_back(calibrate(lib[k], s, ccfg.eps_level));
        }
        out.art = Artifacts::assemble(lib, env, cal);
        return out;
    }();
    return p;
}

nlohmann::json scenario_json(const std::string& name) { return read_json_file(kConfigs / (name + ".json")); }

std::size_t index_near(const Library& lib, double mu) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < lib.size(); ++k)
        if (std::abs(lib[k].mu() - mu) < std::abs(lib[best].mu() - mu)) best = k;
    return best;
}

Outcome shock_reproduction() {
    const auto root = scenario_json("shock");
    const ScenarioConfig cfg = scenario_from_json(root);
    const auto& art = pipeline().art;
    const auto t0 = std::chrono::steady_clock::now();
    const MonolithModel mono = build_monolith(monolith_config_from_json(root));
    const RunResult run = run_scenario(cfg, art);
    const auto mtrace = run_monolith(cfg, mono);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const double terminal = run.trace.back().mu_hat;
    double mono_lo = kInfinity, mono_hi = -kInfinity;
    for (const auto& r : mtrace) {
        mono_lo = std::min(mono_lo, r.mu_hat);
        mono_hi = std::max(mono_hi, r.mu_hat);
    }
    const double t_star = *cfg.schedule.event_time();
    const auto ttu = time_to_uncertainty(run.trace, t_star, 0.8 * std::log(2.0));
    const long star = std::lround(t_star / cfg.plant.dt);
    const std::size_t ice = index_near(art.library, 0.2);
    long handover = -1;
    for (long i = star; i < static_cast<long>(run.trace.size()); ++i) {
        const auto& r = run.trace[static_cast<std::size_t>(i)];
        if (r.pi[ice] > kHandoverWeight && r.dominant == art.library[ice].id()) {
            handover = i - star;
            break;
        }
    }
    const bool a = terminal >= kTerminalLo && terminal <= kTerminalHi;
    const bool b = mono_lo >= kMonolithLo && mono_hi <= kMonolithHi;
    const bool c = ttu.steps && *ttu.steps <= kTtuMaxSteps && handover >= *ttu.steps && handover <= kHandoverMaxSteps;
    const bool d = seconds < kRuntimeMaxSeconds;
    return {a && b && c && d, cat("terminal mu_hat ", terminal, ", monolith mu_hat in [", mono_lo, ", ", mono_hi, "], ttu ",
                                  ttu.steps ? std::to_string(*ttu.steps) : ttu.reason, " steps, handover at +", handover,
                                  " steps, runtime ", seconds, " s")};
}

Outcome frozen_parameters() {
    // The built library plus one fitted affine specialist, so both families are covered.
    Library lib = pipeline().art.library;
    lib.restore_entry(fit_affine(generate_regime_samples(0.6, 400, 0.3, 5), {}, "affine_mid"));
    std::vector<std::vector<unsigned char>> before;
    for (const auto& s : lib.entries()) before.push_back(s.param_bytes());
    const std::string file_before = library_to_json(lib).dump();

    EnvelopeBuildConfig ecfg;
    ecfg.eps_active = 1e-8;
    std::vector<CalibrationRecord> cal;
    for (std::size_t k = 0; k < lib.size(); ++k) cal.push_back(calibrate(lib[k], generate_regime_samples(lib[k].mu(), 200, 0.3, 9, k), 0.1));
    const Artifacts art = Artifacts::assemble(lib, build_envelope(lib, ecfg), cal);

    ScenarioConfig cfg = scenario_from_json(scenario_json("shock"));
    cfg.plant.horizon = static_cast<double>(kFrozenSteps) * cfg.plant.dt;
    const RunResult run = run_scenario(cfg, art);

    bool same = library_to_json(art.library).dump() == file_before;
    for (std::size_t k = 0; k < art.library.size(); ++k) same = same && art.library[k].param_bytes() == before[k];
    return {same && static_cast<long>(run.trace.size()) == kFrozenSteps,
            cat(run.trace.size(), " steps, ", art.library.size(), " specialists, parameter bytes ", same ? "identical" : "changed")};
}

Outcome governor_oracle() {
    GovernorConfig cfg;
    cfg.alpha = 1.0;
    cfg.beta_ema = 0.0;
    cfg.lambda_forget = 1.0;
    cfg.dwell_steps = 0;
    cfg.eps_sparse = 0.0;
    const CounterNormal u(4242);
    std::uint64_t c = 0;
    double worst = 0.0;
    for (int stream = 0; stream < kOracleStreams; ++stream) {
        const std::size_t K = 1 + static_cast<std::size_t>(u.uniform_at(c++) * 4.0);
        const int T = 1 + static_cast<int>(u.uniform_at(c++) * 50.0);
        Library lib;
        for (std::size_t k = 0; k < K; ++k) {
            const double mu = 0.1 + 0.9 * u.uniform_at(c++);
            lib.restore_entry(make_analytic(mu, 0.2 + 0.3 * u.uniform_at(c++), {mu - 0.05, mu + 0.05}, cat("s", k)));
        }
        const double true_mu = 0.1 + 0.9 * u.uniform_at(c++);
        const auto data = generate_regime_samples(true_mu, static_cast<std::size_t>(T), 0.3, 77, static_cast<std::uint64_t>(stream));
        auto st = GovernorState::initial(K);
        std::vector<double> logsum(K, 0.0);
        for (const auto& x : data) {
            st = update(st, lib, x, cfg);
            for (std::size_t k = 0; k < K; ++k) {
                // Gaussian density written out here, independent of the library code.
                const double mean = lib[k].mu() * kGravity * x.b;
                const double sig = lib[k].sigma();
                const double e = *x.a_obs - mean;
                logsum[k] += -0.5 * e * e / (sig * sig) - std::log(sig) - 0.5 * std::log(2.0 * std::numbers::pi);
            }
        }
        const double m = *std::max_element(logsum.begin(), logsum.end());
        double z = 0.0;
        for (double l : logsum) z += std::exp(l - m);
        for (std::size_t k = 0; k < K; ++k) worst = std::max(worst, std::abs(st.pi[k] - std::exp(logsum[k] - m) / z));
    }
    return {worst <= kOracleTol, cat(kOracleStreams, " streams, max elementwise gap ", worst)};
}

Outcome simplex_invariants() {
    const CounterNormal u(777);
    std::uint64_t c = 0;
    long steps = 0, violations = 0;
    while (steps < kSimplexSteps) {
        const std::size_t K = 2 + static_cast<std::size_t>(u.uniform_at(c++) * 4.0);
        Library lib;
        for (std::size_t k = 0; k < K; ++k) {
            const double mu = 0.1 + 0.9 * u.uniform_at(c++);
            lib.restore_entry(make_analytic(mu, 0.1 + 0.5 * u.uniform_at(c++), {mu - 0.05, mu + 0.05}, cat("s", k)));
        }
        GovernorConfig cfg;
        cfg.alpha = 0.3 + 3.0 * u.uniform_at(c++);
        cfg.beta_ema = 0.95 * u.uniform_at(c++);
        cfg.lambda_forget = 0.05 + 0.95 * u.uniform_at(c++);
        cfg.dwell_steps = static_cast<int>(u.uniform_at(c++) * 10.0);
        cfg.mode = u.uniform_at(c++) < 0.5 ? InferenceMode::ExactBayes : InferenceMode::ExpGrad;
        auto st = GovernorState::initial(K);
        for (int t = 0; t < 1000; ++t, ++steps) {
            // Wide observation range, including values no specialist explains.
            const StateSample x{0.0, 30.0 * u.uniform_at(c++), u.uniform_at(c++), 40.0 * u.uniform_at(c++) - 10.0};
            const auto ev = evaluate(lib, x, cfg.loss);
            st = update(std::move(st), ev, cfg);
            double sum = 0.0;
            bool bad = false;
            for (std::size_t k = 0; k < K; ++k) {
                sum += st.pi[k];
                bad = bad || !(st.pi[k] >= 0.0);
            }
            bad = bad || std::abs(sum - 1.0) > kSimplexTol;
            double lo = kInfinity, hi = -kInfinity;
            for (const auto& p : ev.prediction) {
                lo = std::min(lo, p.a_hat);
                hi = std::max(hi, p.a_hat);
            }
            const double a = blend(st.pi, ev.prediction).a_hat;
            bad = bad || a < lo || a > hi;
            violations += bad;
        }
    }
    return {violations == 0, cat(steps, " steps, ", violations, " violations")};
}

Outcome integrity_disentanglement() {
    const auto& art = pipeline().art;
    const RunResult drift = run_scenario(scenario_from_json(scenario_json("drift")), art);
    long cf = 0, hung = 0;
    for (const auto& r : drift.trace) {
        cf += r.integrity.status == Status::ConstitutionalFailure;
        hung += r.integrity.status == Status::HungParliament;
    }
    const double hung_frac = static_cast<double>(hung) / static_cast<double>(drift.trace.size());

    const RunResult fault = run_scenario(scenario_from_json(scenario_json("fault")), art);
    long fault_cf = 0, exits = 0, exits_not_handled = 0, cf_without_fallback = 0;
    long first_exit = -1;
    for (const auto& r : fault.trace) {
        const bool is_cf = r.integrity.status == Status::ConstitutionalFailure;
        fault_cf += is_cf;
        if (is_cf && r.source != Source::Fallback) ++cf_without_fallback;
        if (r.integrity.envelope_exit) {
            ++exits;
            if (first_exit < 0) first_exit = r.step;
            if (!is_cf || r.source != Source::Fallback) ++exits_not_handled;
        }
    }
    const bool pass = cf == 0 && hung_frac < kHungFractionMax && fault_cf > 0 && exits > 0 && exits_not_handled == 0 &&
                      cf_without_fallback == 0;
    return {pass, cat("drift: ", cf, " failure steps, hung fraction ", hung_frac, "; fault: ", fault_cf, " failure steps, ", exits,
                      " exit steps from step ", first_exit, ", ", exits_not_handled, " exits without same-step fallback, ",
                      cf_without_fallback, " failures without fallback")};
}

Outcome accretion_compactness() {
    const auto& p = pipeline();
    const Library& lib = p.accretion.library;
    bool analytic = true;
    for (const auto& s : lib.entries()) analytic = analytic && s.family() == Family::Analytic;
    double worst = 0.0;
    const auto grid = p.build.grid();
    for (double mu : grid) worst = std::max(worst, coverage_residual(lib, build_samples(p.build, mu)));
    const auto cfg = p.build;
    const auto again = accrete(
        lib, grid, [&](double mu) { return build_samples(cfg, mu); }, [&](double mu) { return grid_candidate(cfg, mu); });
    return {grid.size() == 21 && lib.size() == 2 && analytic && worst <= kCoverageResidualMax && again.admitted == 0,
            cat(grid.size(), "-point grid, ", lib.size(), " admitted (mu ", lib[0].mu(), ", ", lib.size() > 1 ? lib[1].mu() : 0.0,
                "), max coverage residual ", worst, ", rerun admitted ", again.admitted)};
}

Outcome rpi_scalar() {
    const Eigen::MatrixXd A = Eigen::MatrixXd::Constant(1, 1, 0.5);
    const Zonotope W = Zonotope::interval(0.0, 1.0);
    const RpiResult r = compute_rpi(A, W);
    const double radius = r.set.radii()(0);
    const CounterNormal u(31);
    int outside = 0;
    for (int i = 0; i < kRpiDraws; ++i) {
        const double xi = 2.0 * u.uniform_at(2 * static_cast<std::uint64_t>(i)) - 1.0;
        const double w = 2.0 * u.uniform_at(2 * static_cast<std::uint64_t>(i) + 1) - 1.0;
        Eigen::VectorXd x(1);
        x(0) = r.set.center(0) + radius * xi;
        Eigen::VectorXd next = A * x;
        next(0) += w;
        outside += !zonotope_contains(r.set, next);
    }
    const bool pass = r.converged && std::abs(radius - kRpiTarget) <= kRpiRelTol * kRpiTarget && outside == 0;
    return {pass, cat("radius ", radius, " after ", r.iterations, " iterations, ", outside, " of ", kRpiDraws,
                      " one-step images outside")};
}

Outcome hull_oracle() {
    const CounterNormal u(8080);
    std::uint64_t c = 0;
    int checked = 0, disagree = 0, skipped = 0;
    while (checked < kHullInstances) {
        const int dim = 1 + checked % 2;
        const std::size_t J = 1 + static_cast<std::size_t>(u.uniform_at(c++) * 3.0);
        SafetyEnvelope env;
        env.state = dim == 1 ? EnvelopeState::Mu : EnvelopeState::SpeedMu;
        env.eps_active = 1e-8;
        for (std::size_t j = 0; j < J; ++j) {
            env.ids.push_back(cat("z", j));
            env.zonotopes.push_back(oracle::random_zonotope(u, c, dim, dim == 1 ? 3 : 5));
        }
        env.validate();
        std::vector<const Zonotope*> zs;
        for (const auto& z : env.zonotopes) zs.push_back(&z);
        Eigen::VectorXd x(dim);
        for (int i = 0; i < dim; ++i) x(i) = 6.0 * (u.uniform_at(c++) - 0.5);
        const double margin =
            dim == 1 ? oracle::interval_margin(zs, x(0)) : oracle::signed_margin(oracle::hull_polygon(zs), {x(0), x(1)});
        if (std::abs(margin) <= 10.0 * env.tol) {
            ++skipped;
            continue;
        }
        ++checked;
        const auto check = envelope_contains(env, MixWeights::uniform(J), x);
        disagree += check.contained != (margin > 0.0);
    }
    return {disagree == 0, cat(checked, " instances (", skipped, " skipped inside the margin band), ", disagree, " disagreements")};
}

Outcome conformal_validity() {
    const auto& art = pipeline().art;
    std::string detail;
    bool pass = true;
    for (std::size_t k = 0; k < art.library.size(); ++k) {
        const auto test = generate_regime_samples(art.library[k].mu(), kConformalTest, 0.3, 555, 200 + k);
        const MixWeights vertex = MixWeights::vertex(art.library.size(), k);
        std::vector<double> obs;
        std::vector<PredictionInterval> ivs;
        for (const auto& x : test) {
            const auto ev = evaluate(art.library, x, {});
            obs.push_back(*x.a_obs);
            ivs.push_back(interval(vertex, ev.prediction, art.calibration));
        }
        const double cov = empirical_coverage(obs, ivs);
        pass = pass && cov >= kCoverageLo && cov <= kCoverageHi && art.calibration[k].scores.size() == 500;
        detail += cat(k ? ", " : "", art.library[k].id(), " coverage ", cov);
    }
    return {pass, detail};
}

Outcome dwell_binds() {
    const auto& lib = pipeline().art.library;
    const std::size_t dry = index_near(lib, 1.0), ice = index_near(lib, 0.2);
    const auto a = generate_regime_samples(lib[dry].mu(), kDwellHorizon, 0.3, 61, 0);
    const auto b = generate_regime_samples(lib[ice].mu(), kDwellHorizon, 0.3, 61, 1);
    auto count_switches = [&](int dwell) {
        GovernorConfig cfg;
        cfg.dwell_steps = dwell;
        cfg.beta_ema = 0.0;
        auto st = GovernorState::initial(lib.size());
        for (int t = 0; t < kDwellHorizon; ++t) st = update(st, lib, (t % 2 ? a : b)[static_cast<std::size_t>(t)], cfg);
        return st.committed_switches;
    };
    const long bound = (kDwellHorizon + kDwell - 1) / kDwell + 1;
    const long with = count_switches(kDwell), without = count_switches(0);
    return {with <= bound && without > bound,
            cat("T=", kDwellHorizon, ", bound ", bound, ": dwell ", kDwell, " gives ", with, " switches, dwell 0 gives ", without)};
}

Outcome cusum_behavior() {
    const IntegrityConfig icfg;
    const double sigma = icfg.cusum_drift_k;
    CusumState c;
    c.baseline = icfg.cusum_baseline;
    c.drift_k = sigma;
    c.threshold_h = icfg.cusum_threshold_h;
    const bool h_is_8sigma = std::abs(c.threshold_h - 8.0 * sigma) <= 1e-12;
    const CounterNormal n(2718);
    long alarms = 0;
    for (long i = 0; i < kCusumSteps; ++i) {
        const auto s = cusum_update(c, c.baseline + sigma * n.at(static_cast<std::uint64_t>(i)));
        alarms += s.alarm;
        c = s.state;
    }
    int worst = 0;
    for (int trial = 0; trial < kCusumTrials; ++trial) {
        CusumState d = c;
        d.stat = 0.0;
        int delay = 0;
        for (int i = 0; i < 100; ++i) {
            ++delay;
            const auto s = cusum_update(
                d, d.baseline + 3.0 * sigma + sigma * n.at(static_cast<std::uint64_t>(kCusumSteps + trial * 100 + i)));
            d = s.state;
            if (s.alarm) break;
        }
        worst = std::max(worst, delay);
    }
    return {h_is_8sigma && alarms <= kCusumMaxAlarms && worst <= kCusumMaxDelay,
            cat("h = ", c.threshold_h / sigma, " sigma_R, ", alarms, " in-control alarms in ", kCusumSteps, " steps, worst detection delay ",
                worst, " steps over ", kCusumTrials, " trials")};
}

Outcome determinism() {
    const auto root = scenario_json("shock");
    const ScenarioConfig cfg = scenario_from_json(root);
    RunManifest m;
    m.config_hash = fnv1a_hex(root.dump());
    m.library_hash = fnv1a_hex(library_to_json(pipeline().art.library).dump());
    m.seed = cfg.plant.seed;
    const std::string a = trace_to_jsonl(m, run_scenario(cfg, pipeline().art).trace);
    const std::string b = trace_to_jsonl(m, run_scenario(cfg, pipeline().art).trace);
    return {a == b, cat(a.size(), " trace bytes, hashes ", fnv1a_hex(a), " / ", fnv1a_hex(b))};
}

}  // namespace

int main() {
    report(1, "shock scenario reproduction", shock_reproduction);
    report(2, "frozen specialist parameters", frozen_parameters);
    report(3, "governor oracle equivalence", governor_oracle);
    report(4, "simplex and hull invariants", simplex_invariants);
    report(5, "integrity disentanglement", integrity_disentanglement);
    report(6, "accretion compactness", accretion_compactness);
    report(7, "rpi correctness", rpi_scalar);
    report(8, "hull containment oracle", hull_oracle);
    report(9, "conformal validity", conformal_validity);
    report(10, "dwell-time anti-chattering", dwell_binds);
    report(11, "cusum behavior", cusum_behavior);
    report(12, "determinism", determinism);
    std::printf("%d of 12 criteria passed\n", 12 - failures);
    return failures == 0 ? 0 : 1;
}
