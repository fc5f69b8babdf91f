#pragma once

#include "regimekit/assurance.hpp"
#include "regimekit/conformal.hpp"
#include "regimekit/library.hpp"
#include "regimekit/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace regimekit {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;

/// Bad or missing configuration field; the message names the field.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A required artifact file does not exist.
class MissingArtifact : public std::runtime_error {
public:
    explicit MissingArtifact(const std::filesystem::path& p);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

nlohmann::json read_json_file(const std::filesystem::path& p);
void write_text_file(const std::filesystem::path& p, const std::string& text);

nlohmann::json library_to_json(const Library& lib);
Library library_from_json(const nlohmann::json& j);
nlohmann::json envelope_to_json(const SafetyEnvelope& env);
SafetyEnvelope envelope_from_json(const nlohmann::json& j);
nlohmann::json calibration_to_json(const std::vector<CalibrationRecord>& records);
std::vector<CalibrationRecord> calibration_from_json(const nlohmann::json& j);
nlohmann::json vetting_report_to_json(const VettingReport& r);

Library load_library(const std::filesystem::path& p);
SafetyEnvelope load_envelope(const std::filesystem::path& p);
std::vector<CalibrationRecord> load_calibration(const std::filesystem::path& p);

/// Output file names inside the output directory.
struct ArtifactPaths {
    std::string library = "library.json";
    std::string envelope = "envelope.json";
    std::string calibration = "calibration.json";
    std::string vetting_log = "vetting_log.jsonl";
};

ArtifactPaths artifact_paths_from_json(const nlohmann::json& root);

/// Grid and data settings for library accretion.
struct BuildConfig {
    double grid_start = 0.2;
    double grid_stop = 1.0;
    int grid_count = 21;
    int samples_per_mu = 200;
    double noise_sigma = 0.0;
    std::uint64_t seed = 11;
    double sigma = 0.3;
    double tau = 1e-4;
    double jurisdiction_halfwidth = 0.1;

    std::vector<double> grid() const;
};

/// Validation data for grid point mu; the noise stream is keyed on mu.
std::vector<StateSample> build_samples(const BuildConfig& cfg, double mu);

struct CalibrationConfig {
    double eps_level = 0.1;
    int n_cal = 500;
    double noise_sigma = 0.3;
    std::uint64_t seed = 23;
};

struct MonolithConfig {
    std::vector<double> regimes{1.0, 0.2};
    int samples_per_regime = 500;
    double noise_sigma = 0.3;
    std::uint64_t seed = 7;
};

BuildConfig build_config_from_json(const nlohmann::json& root);
EnvelopeBuildConfig envelope_build_config_from_json(const nlohmann::json& root);
CalibrationConfig calibration_config_from_json(const nlohmann::json& root);
ScenarioConfig scenario_from_json(const nlohmann::json& root);
MonolithConfig monolith_config_from_json(const nlohmann::json& root);

/// Pooled regime data and the least-squares baseline fitted on it.
MonolithModel build_monolith(const MonolithConfig& cfg);

struct RunManifest {
    std::string config_hash;
    std::string library_hash;
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    std::vector<std::string> outputs;
};

nlohmann::json manifest_to_json(const RunManifest& m);
nlohmann::json trace_record_to_json(const TraceRecord& r);
TraceRecord trace_record_from_json(const nlohmann::json& j);
nlohmann::json monolith_record_to_json(const MonolithRecord& r);

/// Manifest line followed by one line per step.
std::string trace_to_jsonl(const RunManifest& m, std::span<const TraceRecord> trace);

std::string summary_csv(std::span<const ScenarioSummary> rows);

}  // namespace regimekit
