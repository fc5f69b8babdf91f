#include "regimekit/io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace regimekit {

using nlohmann::json;

MissingArtifact::MissingArtifact(const std::filesystem::path& p)
    : std::runtime_error("missing artifact: " + p.string()), path_(p) {}

json read_json_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw MissingArtifact(p);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

namespace {

// Reads fields out of one config block and rejects keys nobody asked for.
class Block {
public:
    Block(const json& root, std::string name) : name_(std::move(name)) {
        if (root.contains(name_)) {
            if (!root.at(name_).is_object()) throw ConfigError(name_ + ": expected an object");
            j_ = root.at(name_);
        } else {
            j_ = json::object();
        }
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(field(key) + ": wrong type");
        }
    }

    double number(const std::string& key, double fallback) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(field(key) + ": not finite");
        return d;
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    std::string field(const std::string& key) const { return name_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(field(it.key()) + ": unknown field");
        }
    }

private:
    std::string name_;
    json j_;
    std::set<std::string> seen_;
};

template <class F>
auto named(const std::string& field, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(field + ": " + e.what());
    }
}

void require_version(const json& j, const std::string& what) {
    if (!j.is_object() || !j.contains("version")) throw ConfigError(what + ".version: missing");
    if (j.at("version") != kFormatVersion) throw ConfigError(what + ".version: unsupported");
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

json library_to_json(const Library& lib) {
    json entries = json::array();
    for (const auto& s : lib.entries()) {
        entries.push_back({{"id", s.id()},
                           {"family", to_string(s.family())},
                           {"mu", s.mu()},
                           {"params", std::vector<double>(s.params().begin(), s.params().end())},
                           {"sigma", s.sigma()},
                           {"jurisdiction", {s.jurisdiction().lo, s.jurisdiction().hi}}});
    }
    return {{"version", kFormatVersion}, {"tau", lib.tau()}, {"entries", entries}};
}

Library library_from_json(const json& j) {
    require_version(j, "library");
    try {
        const double tau = j.at("tau").get<double>();
        if (!(tau > 0.0)) throw ConfigError("library.tau: must be > 0");
        Library lib(tau);
        const json& entries = j.at("entries");
        if (!entries.is_array() || entries.empty()) throw ConfigError("library.entries: must be a non-empty list");
        std::set<std::string> ids;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const json& e = entries[i];
            const std::string where = "library.entries[" + std::to_string(i) + "]";
            const auto id = e.at("id").get<std::string>();
            if (!ids.insert(id).second) throw ConfigError(where + ".id: duplicate '" + id + "'");
            const auto jur = e.at("jurisdiction").get<std::vector<double>>();
            if (jur.size() != 2) throw ConfigError(where + ".jurisdiction: expected [lo, hi]");
            lib.restore_entry(named(where, [&] {
                return Specialist::restore(id, family_from_string(e.at("family").get<std::string>()), e.at("mu").get<double>(),
                                           e.at("params").get<std::vector<double>>(), e.at("sigma").get<double>(),
                                           {jur[0], jur[1]});
            }));
        }
        return lib;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("library: ") + e.what());
    }
}

json envelope_to_json(const SafetyEnvelope& env) {
    json zs = json::array();
    for (std::size_t i = 0; i < env.ids.size(); ++i) {
        const Zonotope& z = env.zonotopes[i];
        json gens = json::array();
        for (Eigen::Index c = 0; c < z.order(); ++c) gens.push_back(vec_json(z.generators.col(c)));
        zs.push_back({{"id", env.ids[i]}, {"center", vec_json(z.center)}, {"generators", gens}});
    }
    return {{"version", kFormatVersion},
            {"state", to_string(env.state)},
            {"eps_active", env.eps_active},
            {"tol", env.tol},
            {"zonotopes", zs}};
}

SafetyEnvelope envelope_from_json(const json& j) {
    require_version(j, "envelope");
    try {
        SafetyEnvelope env;
        env.state = named("envelope.state", [&] { return envelope_state_from_string(j.at("state").get<std::string>()); });
        env.eps_active = j.at("eps_active").get<double>();
        env.tol = j.at("tol").get<double>();
        for (const json& z : j.at("zonotopes")) {
            const auto c = z.at("center").get<std::vector<double>>();
            const auto gens = z.at("generators").get<std::vector<std::vector<double>>>();
            Eigen::VectorXd center = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
            Eigen::MatrixXd g(center.size(), static_cast<Eigen::Index>(gens.size()));
            for (std::size_t k = 0; k < gens.size(); ++k) {
                if (gens[k].size() != c.size()) throw ConfigError("envelope.zonotopes: generator dimension mismatch");
                for (std::size_t r = 0; r < c.size(); ++r) g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = gens[k][r];
            }
            env.ids.push_back(z.at("id").get<std::string>());
            env.zonotopes.push_back(named("envelope.zonotopes", [&] { return Zonotope(center, g); }));
        }
        named("envelope", [&] {
            env.validate();
            return 0;
        });
        return env;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("envelope: ") + e.what());
    }
}

json calibration_to_json(const std::vector<CalibrationRecord>& records) {
    json rs = json::array();
    for (const auto& r : records) {
        rs.push_back({{"id", r.specialist_id}, {"eps_level", r.eps_level}, {"scores", r.scores},
                      {"q", std::isfinite(r.q) ? json(r.q) : json(nullptr)}});
    }
    return {{"version", kFormatVersion}, {"records", rs}};
}

std::vector<CalibrationRecord> calibration_from_json(const json& j) {
    require_version(j, "calibration");
    try {
        std::vector<CalibrationRecord> out;
        for (const json& r : j.at("records")) {
            CalibrationRecord rec;
            rec.specialist_id = r.at("id").get<std::string>();
            rec.eps_level = r.at("eps_level").get<double>();
            rec.scores = r.at("scores").get<std::vector<double>>();
            rec.q = r.at("q").is_null() ? kInfinity : r.at("q").get<double>();
            named("calibration.records", [&] {
                rec.validate();
                return 0;
            });
            out.push_back(std::move(rec));
        }
        return out;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("calibration: ") + e.what());
    }
}

json vetting_report_to_json(const VettingReport& r) {
    const auto w = r.combo_weights.values();
    return {{"candidate_id", r.candidate_id},
            {"candidate_mu", r.candidate_mu},
            {"candidate_error", r.candidate_error},
            {"best_combo_error", std::isfinite(r.best_combo_error) ? json(r.best_combo_error) : json("inf")},
            {"combo_weights", std::vector<double>(w.begin(), w.end())},
            {"admitted", r.admitted}};
}

Library load_library(const std::filesystem::path& p) { return library_from_json(read_json_file(p)); }
SafetyEnvelope load_envelope(const std::filesystem::path& p) { return envelope_from_json(read_json_file(p)); }
std::vector<CalibrationRecord> load_calibration(const std::filesystem::path& p) {
    return calibration_from_json(read_json_file(p));
}

ArtifactPaths artifact_paths_from_json(const json& root) {
    Block b(root, "artifacts");
    ArtifactPaths p;
    p.library = b.get<std::string>("library", p.library);
    p.envelope = b.get<std::string>("envelope", p.envelope);
    p.calibration = b.get<std::string>("calibration", p.calibration);
    p.vetting_log = b.get<std::string>("vetting_log", p.vetting_log);
    b.finish();
    return p;
}

std::vector<double> BuildConfig::grid() const {
    if (grid_count < 1) throw ConfigError("library.grid_count: must be >= 1");
    if (grid_count == 1) return {grid_start};
    std::vector<double> g;
    for (int i = 0; i < grid_count; ++i) {
        g.push_back(grid_start + (grid_stop - grid_start) * static_cast<double>(i) / static_cast<double>(grid_count - 1));
    }
    return g;
}

std::vector<StateSample> build_samples(const BuildConfig& cfg, double mu) {
    return generate_regime_samples(mu, static_cast<std::size_t>(cfg.samples_per_mu), cfg.noise_sigma, cfg.seed,
                                   splitmix64(std::bit_cast<std::uint64_t>(mu)));
}

BuildConfig build_config_from_json(const json& root) {
    Block b(root, "library");
    BuildConfig c;
    if (b.has("grid")) {
        const auto g = b.get<std::vector<double>>("grid", {});
        if (g.size() != 3) throw ConfigError("library.grid: expected [start, stop, count]");
        c.grid_start = g[0];
        c.grid_stop = g[1];
        c.grid_count = static_cast<int>(g[2]);
    }
    c.samples_per_mu = b.get<int>("samples_per_mu", c.samples_per_mu);
    c.noise_sigma = b.number("noise_sigma", c.noise_sigma);
    c.seed = b.get<std::uint64_t>("seed", c.seed);
    c.sigma = b.number("sigma", c.sigma);
    c.tau = b.number("tau", c.tau);
    c.jurisdiction_halfwidth = b.number("jurisdiction_halfwidth", c.jurisdiction_halfwidth);
    b.finish();
    if (c.grid_count < 1) throw ConfigError("library.grid: empty grid");
    if (!(c.grid_start > 0.0 && c.grid_stop > 0.0)) throw ConfigError("library.grid: mu values must be > 0");
    if (c.samples_per_mu < 1) throw ConfigError("library.samples_per_mu: must be >= 1");
    if (!(c.noise_sigma >= 0.0)) throw ConfigError("library.noise_sigma: must be >= 0");
    if (!(c.sigma > 0.0)) throw ConfigError("library.sigma: must be > 0");
    if (!(c.tau > 0.0)) throw ConfigError("library.tau: must be > 0");
    if (!(c.jurisdiction_halfwidth >= 0.0)) throw ConfigError("library.jurisdiction_halfwidth: must be >= 0");
    return c;
}

EnvelopeBuildConfig envelope_build_config_from_json(const json& root) {
    Block b(root, "envelope");
    EnvelopeBuildConfig c;
    c.state = named(b.field("state"), [&] { return envelope_state_from_string(b.get<std::string>("state", to_string(c.state))); });
    c.filter_pole = b.number("filter_pole", c.filter_pole);
    c.disturbance = b.number("disturbance", c.disturbance);
    c.eps_active = b.number("eps_active", c.eps_active);
    c.v_max = b.number("v_max", c.v_max);
    c.rpi_tol = b.number("rpi_tol", c.rpi_tol);
    c.rpi_max_iter = b.get<int>("rpi_max_iter", c.rpi_max_iter);
    b.finish();
    if (!(c.filter_pole >= 0.0 && c.filter_pole < 1.0)) throw ConfigError("envelope.filter_pole: must be in [0,1)");
    if (!(c.disturbance >= 0.0)) throw ConfigError("envelope.disturbance: must be >= 0");
    if (!(c.eps_active >= 0.0 && c.eps_active < 1.0)) throw ConfigError("envelope.eps_active: must be in [0,1)");
    return c;
}

CalibrationConfig calibration_config_from_json(const json& root) {
    Block b(root, "calibration");
    CalibrationConfig c;
    c.eps_level = b.number("eps_level", c.eps_level);
    c.n_cal = b.get<int>("n_cal", c.n_cal);
    c.noise_sigma = b.number("noise_sigma", c.noise_sigma);
    c.seed = b.get<std::uint64_t>("seed", c.seed);
    b.finish();
    if (!(c.eps_level > 0.0 && c.eps_level < 1.0)) throw ConfigError("calibration.eps_level: must be in (0,1)");
    if (c.n_cal < 1) throw ConfigError("calibration.n_cal: must be >= 1");
    return c;
}

namespace {

MuSchedule schedule_from_json(const json& root) {
    Block b(root, "schedule");
    MuSchedule s;
    s.kind = named(b.field("kind"), [&] { return schedule_kind_from_string(b.get<std::string>("kind", "constant")); });
    s.mu = b.number("mu", s.mu);
    s.t_star = b.number("t_star", s.t_star);
    s.mu_before = b.number("mu_before", s.mu_before);
    s.mu_after = b.number("mu_after", s.mu_after);
    s.mu_start = b.number("mu_start", s.mu_start);
    s.mu_end = b.number("mu_end", s.mu_end);
    s.t_end = b.number("t_end", s.t_end);
    s.mu_fault = b.number("mu_fault", s.mu_fault);
    b.finish();
    return s;
}

}  // namespace

ScenarioConfig scenario_from_json(const json& root) {
    if (!root.is_object()) throw ConfigError("scenario: expected an object");
    ScenarioConfig c;
    if (root.contains("name")) {
        if (!root.at("name").is_string()) throw ConfigError("name: expected a string");
        c.name = root.at("name").get<std::string>();
    }

    Block p(root, "plant");
    c.plant.dt = p.number("dt", c.plant.dt);
    c.plant.g = p.number("g", c.plant.g);
    c.plant.v0 = p.number("v0", c.plant.v0);
    c.plant.noise_sigma = p.number("noise_sigma", c.plant.noise_sigma);
    c.plant.seed = p.get<std::uint64_t>("seed", c.plant.seed);
    c.plant.horizon = p.number("horizon", c.plant.horizon);
    p.finish();
    named("plant", [&] {
        c.plant.validate();
        return 0;
    });

    c.schedule = schedule_from_json(root);
    named("schedule", [&] {
        c.schedule.validate(c.plant.horizon);
        return 0;
    });

    Block g(root, "governor");
    c.governor.alpha = g.number("alpha", c.governor.alpha);
    c.governor.beta_ema = g.number("beta_ema", c.governor.beta_ema);
    c.governor.lambda_forget = g.number("lambda_forget", c.governor.lambda_forget);
    if (g.has("eps_sparse")) c.governor.eps_sparse = g.number("eps_sparse", 0.0);
    c.governor.dwell_steps = g.get<int>("dwell_steps", c.governor.dwell_steps);
    const auto mode = g.get<std::string>("mode", "exact_bayes");
    if (mode == "exact_bayes") c.governor.mode = InferenceMode::ExactBayes;
    else if (mode == "exp_grad") c.governor.mode = InferenceMode::ExpGrad;
    else throw ConfigError("governor.mode: expected exact_bayes or exp_grad");
    c.governor.eta = g.number("eta", c.governor.eta);
    c.governor.prior_strength = g.number("prior_strength", c.governor.prior_strength);
    c.governor.loss.mu_max = g.number("mu_max", c.governor.loss.mu_max);
    c.governor.loss.w_physics = g.number("w_physics", c.governor.loss.w_physics);
    c.governor.loss.b_min = g.number("b_min", c.governor.loss.b_min);
    if (g.has("initial_pi")) c.initial_pi = g.get<std::vector<double>>("initial_pi", {});
    g.finish();

    Block in(root, "integrity");
    c.integrity.R_hi = in.number("R_hi", c.integrity.R_hi);
    c.integrity.R_mid = in.number("R_mid", c.integrity.R_mid);
    c.integrity.U_hi_frac = in.number("U_hi_frac", c.integrity.U_hi_frac);
    c.integrity.T_hi_per_dt = in.number("T_hi_per_dt", c.integrity.T_hi_per_dt);
    c.integrity.persist_window = in.get<int>("persist_window", c.integrity.persist_window);
    c.integrity.trend_window = in.get<int>("trend_window", c.integrity.trend_window);
    c.integrity.cusum_baseline = in.number("cusum_baseline", c.integrity.cusum_baseline);
    c.integrity.cusum_drift_k = in.number("cusum_drift_k", c.integrity.cusum_drift_k);
    c.integrity.cusum_threshold_h = in.number("cusum_threshold_h", c.integrity.cusum_threshold_h);
    in.finish();
    named("integrity", [&] {
        c.integrity.validate();
        return 0;
    });

    Block a(root, "assurance");
    c.guard.hung_patience = a.get<int>("hung_patience", c.guard.hung_patience);
    c.guard.recovery_hysteresis = a.get<int>("recovery_hysteresis", c.guard.recovery_hysteresis);
    c.fallback.mu_worst = a.number("fallback_mu_worst", c.fallback.mu_worst);
    c.envelope_filter.pole = a.number("filter_pole", c.envelope_filter.pole);
    c.envelope_filter.b_min = a.number("filter_b_min", c.envelope_filter.b_min);
    c.envelope_filter.warmup_steps = a.get<int>("filter_warmup_steps", c.envelope_filter.warmup_steps);
    a.finish();

    Block ctl(root, "control");
    c.control.a_target = ctl.number("a_target", c.control.a_target);
    c.fallback.a_target = c.control.a_target;
    ctl.finish();

    Block cf(root, "conformal");
    c.conformal_eps = cf.number("eps_level", c.conformal_eps);
    cf.finish();

    for (auto it = root.begin(); it != root.end(); ++it) {
        static const std::set<std::string> known{"name",      "plant",   "schedule",  "governor",  "integrity",
                                                 "assurance", "control", "conformal", "artifacts", "monolith"};
        if (!known.count(it.key())) throw ConfigError(it.key() + ": unknown block");
    }
    return c;
}

MonolithConfig monolith_config_from_json(const json& root) {
    Block b(root, "monolith");
    MonolithConfig c;
    c.regimes = b.get<std::vector<double>>("regimes", c.regimes);
    c.samples_per_regime = b.get<int>("samples_per_regime", c.samples_per_regime);
    c.noise_sigma = b.number("noise_sigma", c.noise_sigma);
    c.seed = b.get<std::uint64_t>("seed", c.seed);
    b.finish();
    if (c.regimes.size() < 2) throw ConfigError("monolith.regimes: pooled data needs at least 2 regimes");
    if (c.samples_per_regime < 3) throw ConfigError("monolith.samples_per_regime: must be >= 3");
    return c;
}

MonolithModel build_monolith(const MonolithConfig& cfg) {
    std::vector<StateSample> pooled;
    for (std::size_t r = 0; r < cfg.regimes.size(); ++r) {
        auto part = generate_regime_samples(cfg.regimes[r], static_cast<std::size_t>(cfg.samples_per_regime), cfg.noise_sigma,
                                            cfg.seed, r + 1);
        pooled.insert(pooled.end(), part.begin(), part.end());
    }
    return fit_monolith(pooled);
}

json manifest_to_json(const RunManifest& m) {
    return {{"kind", "manifest"},        {"config_hash", m.config_hash}, {"library_hash", m.library_hash},
            {"seed", m.seed},            {"tool_version", m.tool_version}, {"outputs", m.outputs}};
}

namespace {

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
double number_or_inf(const json& j, double sign) { return j.is_null() ? sign * kInfinity : j.get<double>(); }

}  // namespace

json trace_record_to_json(const TraceRecord& r) {
    return {{"kind", "step"},
            {"step", r.step},
            {"t", r.t},
            {"v_true", r.v_true},
            {"mu_true", r.mu_true},
            {"b_cmd", r.b_cmd},
            {"a_obs", r.a_obs},
            {"pi", r.pi},
            {"dominant", r.dominant},
            {"mu_hat", r.mu_hat},
            {"a_hat", r.a_hat},
            {"mu_filtered", r.mu_filtered},
            {"interval", {finite_or_null(r.interval.lo), finite_or_null(r.interval.hi)}},
            {"R", r.integrity.R},
            {"U", r.integrity.U},
            {"T", r.integrity.T},
            {"status", to_string(r.integrity.status)},
            {"cusum_alarm", r.integrity.cusum_alarm},
            {"envelope_exit", r.integrity.envelope_exit},
            {"no_jurisdiction", r.integrity.no_jurisdiction},
            {"likelihood_collapse", r.integrity.likelihood_collapse},
            {"channel", to_string(r.channel)},
            {"source", to_string(r.source)}};
}

TraceRecord trace_record_from_json(const json& j) {
    if (!j.is_object() || j.value("kind", "") != "step") throw std::invalid_argument("not a step record");
    TraceRecord r;
    r.step = j.at("step").get<long>();
    r.t = j.at("t").get<double>();
    r.v_true = j.at("v_true").get<double>();
    r.mu_true = j.at("mu_true").get<double>();
    r.b_cmd = j.at("b_cmd").get<double>();
    r.a_obs = j.at("a_obs").get<double>();
    r.pi = j.at("pi").get<std::vector<double>>();
    r.dominant = j.at("dominant").get<std::string>();
    r.mu_hat = j.at("mu_hat").get<double>();
    r.a_hat = j.at("a_hat").get<double>();
    r.mu_filtered = j.at("mu_filtered").get<double>();
    const json& iv = j.at("interval");
    r.interval.lo = number_or_inf(iv.at(0), -1.0);
    r.interval.hi = number_or_inf(iv.at(1), 1.0);
    r.interval.unbounded = iv.at(0).is_null() || iv.at(1).is_null();
    r.integrity.R = j.at("R").get<double>();
    r.integrity.U = j.at("U").get<double>();
    r.integrity.T = j.at("T").get<double>();
    r.integrity.status = status_from_string(j.at("status").get<std::string>());
    r.integrity.cusum_alarm = j.at("cusum_alarm").get<bool>();
    r.integrity.envelope_exit = j.at("envelope_exit").get<bool>();
    r.integrity.no_jurisdiction = j.at("no_jurisdiction").get<bool>();
    r.integrity.likelihood_collapse = j.at("likelihood_collapse").get<bool>();
    const auto ch = j.at("channel").get<std::string>();
    if (ch != "AIActive" && ch != "FallbackActive") throw std::invalid_argument("unknown channel '" + ch + "'");
    r.channel = ch == "AIActive" ? Channel::AIActive : Channel::FallbackActive;
    const auto src = j.at("source").get<std::string>();
    if (src != "AI" && src != "Fallback") throw std::invalid_argument("unknown source '" + src + "'");
    r.source = src == "AI" ? Source::AI : Source::Fallback;
    return r;
}

json monolith_record_to_json(const MonolithRecord& r) {
    return {{"kind", "monolith_step"}, {"step", r.step},   {"t", r.t},         {"v_true", r.v_true}, {"mu_true", r.mu_true},
            {"b_cmd", r.b_cmd},        {"a_obs", r.a_obs}, {"a_hat", r.a_hat}, {"mu_hat", r.mu_hat}};
}

std::string trace_to_jsonl(const RunManifest& m, std::span<const TraceRecord> trace) {
    std::string out = manifest_to_json(m).dump() + "\n";
    for (const auto& r : trace) out += trace_record_to_json(r).dump() + "\n";
    return out;
}

namespace {

std::string fmt(double x) {
    std::ostringstream s;
    s.precision(10);
    s << x;
    return s.str();
}

template <class T>
std::string opt(const std::optional<T>& x) {
    if (!x) return "";
    if constexpr (std::is_floating_point_v<T>) return fmt(*x);
    else return std::to_string(*x);
}

}  // namespace

std::string summary_csv(std::span<const ScenarioSummary> rows) {
    bool any_monolith = false;
    for (const auto& r : rows) any_monolith = any_monolith || r.monolith_mu_hat.has_value();
    std::string out =
        "scenario,seed,steps,time_to_uncertainty,ttu_reason,switches_committed,fallback_steps,hung_steps,shock_steps,"
        "failure_steps,envelope_exit_steps,coverage,coverage_vertex,mu_hat_terminal,mu_hat_mae,mu_hat_max_err";
    if (any_monolith) out += ",monolith_mu_hat,monolith_mu_hat_mae";
    out += "\n";
    for (const auto& r : rows) {
        out += r.name + "," + std::to_string(r.seed) + "," + std::to_string(r.steps) + "," + opt(r.ttu.steps) + "," + r.ttu.reason +
               "," + std::to_string(r.switches_committed) + "," + std::to_string(r.fallback_steps) + "," +
               std::to_string(r.hung_steps) + "," + std::to_string(r.shock_steps) + "," + std::to_string(r.failure_steps) + "," +
               std::to_string(r.envelope_exit_steps) + "," + fmt(r.coverage) + "," + fmt(r.coverage_vertex) + "," +
               fmt(r.mu_hat_terminal) + "," + fmt(r.mu_hat_mae) + "," + fmt(r.mu_hat_max_err);
        if (any_monolith) out += "," + opt(r.monolith_mu_hat) + "," + opt(r.monolith_mu_hat_mae);
        out += "\n";
    }
    return out;
}

}  // namespace regimekit
