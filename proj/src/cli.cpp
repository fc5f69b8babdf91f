#include "regimekit/cli.hpp"

#include "regimekit/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace regimekit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path default_out_dir() {
    if (const char* env = std::getenv("REGIMEKIT_OUT_DIR"); env && *env) return env;
    return ".";
}

std::string mu_id(double mu) {
    std::ostringstream s;
    s << "S_mu" << std::fixed << std::setprecision(3) << mu;
    return s.str();
}

std::string fmt(double x, int prec = 6) {
    std::ostringstream s;
    s << std::setprecision(prec) << x;
    return s.str();
}

int cmd_build_library(const fs::path& config, const fs::path& out_dir, bool fresh, std::ostream& out) {
    const json root = read_json_file(config);
    const BuildConfig cfg = build_config_from_json(root);
    const ArtifactPaths paths = artifact_paths_from_json(root);
    const fs::path lib_path = out_dir / paths.library;

    Library start(cfg.tau);
    if (!fresh && fs::exists(lib_path)) {
        start = load_library(lib_path);
        out << "starting from existing library " << lib_path.string() << " (" << start.size() << " entries)\n";
    }
    const std::vector<double> grid = cfg.grid();
    const double h = cfg.jurisdiction_halfwidth;
    AccretionResult res = accrete(
        std::move(start), grid, [&](double mu) { return build_samples(cfg, mu); },
        [&](double mu) { return make_analytic(mu, cfg.sigma, {mu - h, mu + h}, mu_id(mu)); });

    std::string log;
    for (const auto& r : res.log) {
        log += vetting_report_to_json(r).dump() + "\n";
        out << (r.admitted ? "admitted " : "rejected ") << r.candidate_id << " candidate_error=" << fmt(r.candidate_error)
            << " best_combo_error=" << fmt(r.best_combo_error) << "\n";
    }
    write_text_file(lib_path, library_to_json(res.library).dump(2) + "\n");
    write_text_file(out_dir / paths.vetting_log, log);
    out << "admissions: " << res.admitted << ", library size: " << res.library.size() << "\n";
    return kExitOk;
}

int cmd_compute_envelopes(const fs::path& config, const fs::path& out_dir, std::ostream& out) {
    const json root = read_json_file(config);
    const EnvelopeBuildConfig cfg = envelope_build_config_from_json(root);
    const ArtifactPaths paths = artifact_paths_from_json(root);
    const Library lib = load_library(out_dir / paths.library);
    const SafetyEnvelope env = build_envelope(lib, cfg);
    write_text_file(out_dir / paths.envelope, envelope_to_json(env).dump(2) + "\n");
    for (std::size_t i = 0; i < env.ids.size(); ++i) {
        const Zonotope& z = env.zonotopes[i];
        out << env.ids[i] << ": mu in [" << fmt(z.center(z.dim() - 1) - z.radii()(z.dim() - 1)) << ", "
            << fmt(z.center(z.dim() - 1) + z.radii()(z.dim() - 1)) << "]\n";
    }
    return kExitOk;
}

int cmd_calibrate(const fs::path& config, const fs::path& out_dir, std::ostream& out) {
    const json root = read_json_file(config);
    const CalibrationConfig cfg = calibration_config_from_json(root);
    const ArtifactPaths paths = artifact_paths_from_json(root);
    const Library lib = load_library(out_dir / paths.library);
    std::vector<CalibrationRecord> records;
    for (std::size_t k = 0; k < lib.size(); ++k) {
        const auto samples = generate_regime_samples(lib[k].mu(), static_cast<std::size_t>(cfg.n_cal), cfg.noise_sigma, cfg.seed, 100 + k);
        records.push_back(calibrate(lib[k], samples, cfg.eps_level));
        out << lib[k].id() << ": q=" << fmt(records.back().q) << " (n=" << records.back().scores.size() << ")\n";
    }
    write_text_file(out_dir / paths.calibration, calibration_to_json(records).dump() + "\n");
    return kExitOk;
}

bool finite_record(const TraceRecord& r) {
    return std::isfinite(r.mu_hat) && std::isfinite(r.a_hat) && std::isfinite(r.integrity.R) && std::isfinite(r.integrity.U) &&
           std::isfinite(r.integrity.T);
}

int cmd_run(const fs::path& scenario_path, const fs::path& out_dir, const fs::path& artifact_dir, std::optional<std::uint64_t> seed,
            bool baseline, std::ostream& out, std::ostream& err) {
    json root = read_json_file(scenario_path);
    if (seed) root["plant"]["seed"] = *seed;
    ScenarioConfig cfg = scenario_from_json(root);
    const ArtifactPaths paths = artifact_paths_from_json(root);
    std::optional<MonolithModel> monolith;
    if (baseline) monolith = build_monolith(monolith_config_from_json(root));

    const Library lib = load_library(artifact_dir / paths.library);
    const SafetyEnvelope env = load_envelope(artifact_dir / paths.envelope);
    const auto cal = load_calibration(artifact_dir / paths.calibration);
    const Artifacts art = [&] {
        try {
            return Artifacts::assemble(lib, env, cal);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("artifacts: ") + e.what());
        }
    }();
    try {
        cfg.validate(lib.size());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const fs::path trace_path = out_dir / (cfg.name + ".trace.jsonl");
    const fs::path summary_path = out_dir / (cfg.name + ".summary.csv");
    const fs::path monolith_path = out_dir / (cfg.name + ".monolith.jsonl");
    RunManifest manifest;
    manifest.config_hash = fnv1a_hex(root.dump());
    manifest.library_hash = fnv1a_hex(library_to_json(lib).dump());
    manifest.seed = cfg.plant.seed;
    manifest.outputs = {trace_path.string(), summary_path.string()};
    if (monolith) manifest.outputs.push_back(monolith_path.string());

    // The manifest goes to disk before the first step runs.
    write_text_file(trace_path, manifest_to_json(manifest).dump() + "\n");
    RunResult run;
    try {
        run = run_scenario(cfg, art);
    } catch (const std::exception& e) {
        err << "runtime integrity panic: " << e.what() << "\n";
        return kExitIntegrityPanic;
    }
    write_text_file(trace_path, trace_to_jsonl(manifest, run.trace));

    ScenarioSummary summary = summarize(cfg, run.trace);
    if (monolith) {
        const auto mtrace = run_monolith(cfg, *monolith);
        std::string text = manifest_to_json(manifest).dump() + "\n";
        for (const auto& r : mtrace) text += monolith_record_to_json(r).dump() + "\n";
        write_text_file(monolith_path, text);
        attach_monolith(summary, mtrace);
    }
    const std::vector<ScenarioSummary> rows{summary};
    write_text_file(summary_path, summary_csv(rows));

    out << "scenario " << cfg.name << " seed " << cfg.plant.seed << ": " << run.trace.size() << " steps, "
        << summary.switches_committed << " committed switches, " << summary.fallback_steps << " fallback steps, mu_hat terminal "
        << fmt(summary.mu_hat_terminal, 4);
    if (summary.monolith_mu_hat) out << ", monolith mu_hat " << fmt(*summary.monolith_mu_hat, 4);
    out << "\ntrace: " << trace_path.string() << "\nsummary: " << summary_path.string() << "\n";

    for (const auto& r : run.trace) {
        if (!finite_record(r)) {
            err << "runtime integrity panic: non-finite estimate at step " << r.step << "\n";
            return kExitIntegrityPanic;
        }
    }
    return kExitOk;
}

struct Segment {
    std::string id;
    double t0 = 0.0;
    double t1 = 0.0;
    long steps = 0;
    std::map<std::string, long> annotations;
};

int cmd_report(const fs::path& trace_path, std::ostream& out, std::ostream& err) {
    std::ifstream in(trace_path);
    if (!in) throw MissingArtifact(trace_path);

    std::string line;
    long line_no = 0;
    json manifest;
    std::vector<TraceRecord> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            if (line_no == 1) {
                if (j.value("kind", "") != "manifest") throw std::invalid_argument("first line is not a manifest");
                manifest = std::move(j);
            } else {
                rows.push_back(trace_record_from_json(j));
            }
        } catch (const std::exception& e) {
            err << trace_path.string() << ":" << line_no << ": malformed trace line: " << e.what() << "\n";
            return kExitConfig;
        }
    }
    if (manifest.is_null()) {
        err << trace_path.string() << ":1: malformed trace line: empty file\n";
        return kExitConfig;
    }

    out << "audit report for " << trace_path.string() << "\n";
    out << "  library hash " << manifest.value("library_hash", "?") << ", config hash " << manifest.value("config_hash", "?")
        << ", seed " << manifest.value("seed", 0) << ", tool " << manifest.value("tool_version", "?") << "\n\n";

    std::vector<Segment> segments;
    for (const auto& r : rows) {
        if (segments.empty() || segments.back().id != r.dominant) segments.push_back({r.dominant, r.t, r.t, 0, {}});
        Segment& s = segments.back();
        s.t1 = r.t;
        ++s.steps;
        if (r.integrity.status != Status::Nominal) ++s.annotations[to_string(r.integrity.status)];
    }
    out << "jurisdiction segments:\n";
    for (const auto& s : segments) {
        out << "  t=" << fmt(s.t0, 4) << " .. " << fmt(s.t1, 4) << "  " << s.id << "  (" << s.steps << " steps)";
        for (const auto& [status, n] : s.annotations) out << "  [" << status << " x" << n << "]";
        out << "\n";
    }

    out << "\nstatus transitions:\n";
    Status prev = Status::Nominal;
    long transitions = 0;
    for (const auto& r : rows) {
        if (r.integrity.status != prev) {
            out << "  t=" << fmt(r.t, 4) << "  " << to_string(prev) << " -> " << to_string(r.integrity.status) << "\n";
            prev = r.integrity.status;
            ++transitions;
        }
    }
    if (transitions == 0) out << "  none\n";

    out << "\nfallback windows:\n";
    long fallback_steps = 0;
    bool open = false;
    double start = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const bool fb = rows[i].source == Source::Fallback;
        fallback_steps += fb ? 1 : 0;
        if (fb && !open) {
            open = true;
            start = rows[i].t;
        }
        if (open && (!fb || i + 1 == rows.size())) {
            out << "  t=" << fmt(start, 4) << " .. " << fmt(fb ? rows[i].t : rows[i - 1].t, 4) << "\n";
            open = false;
        }
    }
    if (fallback_steps == 0) out << "  none\n";

    long hits = 0;
    double err_sum = 0.0;
    for (const auto& r : rows) {
        hits += r.interval.contains(r.a_obs) ? 1 : 0;
        err_sum += std::abs(r.mu_hat - r.mu_true);
    }
    const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
    out << "\nmetrics:\n";
    out << "  steps                " << rows.size() << "\n";
    out << "  jurisdiction changes " << (segments.empty() ? 0 : segments.size() - 1) << "\n";
    out << "  fallback steps       " << fallback_steps << "\n";
    out << "  interval coverage    " << fmt(static_cast<double>(hits) / n, 4) << "\n";
    out << "  mean |mu_hat - mu|   " << fmt(err_sum / n, 4) << "\n";
    if (!rows.empty()) out << "  terminal mu_hat      " << fmt(rows.back().mu_hat, 4) << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"regimekit: frozen-specialist regime governance for braking-friction estimation"};
    app.require_subcommand(1);
    std::string out_dir_opt;

    std::string config;
    bool fresh = false;
    auto* build = app.add_subcommand("build-library", "Accrete a specialist library over a friction grid");
    build->add_option("config", config, "Config file")->required();
    build->add_option("--out", out_dir_opt, "Output directory (default $REGIMEKIT_OUT_DIR or .)");
    build->add_flag("--fresh", fresh, "Ignore an existing library in the output directory");

    auto* envelopes = app.add_subcommand("compute-envelopes", "Compute per-specialist invariant envelopes");
    envelopes->add_option("config", config, "Config file")->required();
    envelopes->add_option("--out", out_dir_opt, "Output directory");

    auto* calib = app.add_subcommand("calibrate", "Calibrate conformal records for each specialist");
    calib->add_option("config", config, "Config file")->required();
    calib->add_option("--out", out_dir_opt, "Output directory");

    std::optional<std::uint64_t> seed;
    bool baseline = false;
    std::string artifacts_opt;
    auto* run = app.add_subcommand("run", "Run a scenario and write its trace and summary");
    run->add_option("scenario", config, "Scenario file")->required();
    run->add_option("--seed", seed, "Override the plant seed");
    run->add_option("--out", out_dir_opt, "Output directory");
    run->add_option("--artifacts", artifacts_opt, "Artifact directory (default: the output directory)");
    run->add_flag("--baseline", baseline, "Also run the pooled monolith on the same seed");

    std::string trace;
    auto* report = app.add_subcommand("report", "Print an audit report for a trace");
    report->add_option("trace", trace, "Trace file")->required();

    // CLI11 consumes arguments from the back, without the program name.
    std::vector<std::string> rev;
    for (std::size_t i = args.size(); i > 1; --i) rev.push_back(args[i - 1]);
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, x;
        const int code = app.exit(e, o, x);
        out << o.str();
        err << x.str();
        return code == 0 ? kExitOk : kExitConfig;
    }

    const fs::path out_dir = out_dir_opt.empty() ? default_out_dir() : fs::path(out_dir_opt);
    try {
        if (*build) return cmd_build_library(config, out_dir, fresh, out);
        if (*envelopes) return cmd_compute_envelopes(config, out_dir, out);
        if (*calib) return cmd_calibrate(config, out_dir, out);
        if (*run) return cmd_run(config, out_dir, artifacts_opt.empty() ? out_dir : fs::path(artifacts_opt), seed, baseline, out, err);
        if (*report) return cmd_report(trace, out, err);
    } catch (const MissingArtifact& e) {
        err << e.what() << "\n";
        return kExitMissingArtifact;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}

}  // namespace regimekit
