#include <doctest.h>

#include "regimekit/cli.hpp"
#include "regimekit/io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace regimekit;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = REGIMEKIT_CONFIG_DIR;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    std::ostringstream o, e;
    args.insert(args.begin(), "regimekit");
    const int code = run_cli(args, o, e);
    return {code, o.str(), e.str()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("regimekit_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int count(const std::string& hay, const std::string& needle) {
    int n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

// Builds all artifacts once per process; the pipeline is deterministic.
const fs::path& artifacts() {
    static const fs::path dir = [] {
        const fs::path d = fresh_dir("artifacts");
        const std::string cfg = (kConfigs / "build.json").string();
        REQUIRE(cli({"build-library", cfg, "--out", d.string()}).code == 0);
        REQUIRE(cli({"compute-envelopes", cfg, "--out", d.string()}).code == 0);
        REQUIRE(cli({"calibrate", cfg, "--out", d.string()}).code == 0);
        return d;
    }();
    return dir;
}

}  // namespace

TEST_CASE("build-library admits two specialists and logs rejections") {
    const fs::path d = fresh_dir("build");
    const auto r = cli({"build-library", (kConfigs / "build.json").string(), "--out", d.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("admissions: 2, library size: 2") != std::string::npos);
    CHECK(count(r.out, "rejected ") == 19);
    CHECK(r.out.find("best_combo_error=") != std::string::npos);
    CHECK(load_library(d / "library.json").size() == 2);

    const std::string log = slurp(d / "vetting_log.jsonl");
    CHECK(count(log, "\n") == 21);

    SUBCASE("rerun on the existing library admits nothing") {
        const auto again = cli({"build-library", (kConfigs / "build.json").string(), "--out", d.string()});
        REQUIRE(again.code == 0);
        CHECK(again.out.find("admissions: 0, library size: 2") != std::string::npos);
    }
}

TEST_CASE("run writes a manifest first and is byte-deterministic") {
    const fs::path d = fresh_dir("run");
    const std::string scen = (kConfigs / "shock.json").string();
    const auto a = cli({"run", scen, "--artifacts", artifacts().string(), "--out", d.string(), "--baseline"});
    REQUIRE(a.code == 0);
    const std::string first = slurp(d / "shock.trace.jsonl");
    CHECK(first.rfind("{", 0) == 0);
    const auto manifest = nlohmann::json::parse(first.substr(0, first.find('\n')));
    CHECK(manifest.at("kind") == "manifest");
    CHECK(!manifest.at("library_hash").get<std::string>().empty());

    const std::string csv = slurp(d / "shock.summary.csv");
    CHECK(csv.find("monolith_mu_hat") != std::string::npos);
    CHECK(fs::exists(d / "shock.monolith.jsonl"));

    const auto b = cli({"run", scen, "--artifacts", artifacts().string(), "--out", d.string(), "--baseline"});
    REQUIRE(b.code == 0);
    CHECK(slurp(d / "shock.trace.jsonl") == first);

    const auto c = cli({"run", scen, "--artifacts", artifacts().string(), "--out", d.string(), "--seed", "2"});
    REQUIRE(c.code == 0);
    const std::string other = slurp(d / "shock.trace.jsonl");
    CHECK(other != first);
    CHECK(count(other, "\n") == count(first, "\n"));
}

TEST_CASE("report shows the dry to ice handover") {
    const fs::path d = fresh_dir("report");
    REQUIRE(cli({"run", (kConfigs / "shock.json").string(), "--artifacts", artifacts().string(), "--out", d.string()}).code ==
            0);
    const auto r = cli({"report", (d / "shock.trace.jsonl").string()});
    REQUIRE(r.code == 0);
    const auto seg = r.out.substr(r.out.find("jurisdiction segments:"), r.out.find("status transitions:") -
                                                                            r.out.find("jurisdiction segments:"));
    CHECK(count(seg, "  t=") == 2);
    CHECK(seg.find("S_mu1.000") < seg.find("S_mu0.200"));
    CHECK((seg.find("HungParliament") != std::string::npos || seg.find("RegimeShock") != std::string::npos));
    CHECK(r.out.find("library hash") != std::string::npos);
}

TEST_CASE("report on the fault run ends in failure and a fallback window") {
    const fs::path d = fresh_dir("fault");
    REQUIRE(cli({"run", (kConfigs / "fault.json").string(), "--artifacts", artifacts().string(), "--out", d.string()}).code ==
            0);
    const auto r = cli({"report", (d / "fault.trace.jsonl").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("ConstitutionalFailure") != std::string::npos);
    const auto fb = r.out.substr(r.out.find("fallback windows:"));
    CHECK(fb.find("none") > fb.find("metrics:"));
}

TEST_CASE("malformed trace names the line") {
    const fs::path d = fresh_dir("malformed");
    REQUIRE(cli({"run", (kConfigs / "shock.json").string(), "--artifacts", artifacts().string(), "--out", d.string()}).code ==
            0);
    std::string text = slurp(d / "shock.trace.jsonl");
    // Break the fourth line (manifest, then steps 0..2).
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) pos = text.find('\n', pos) + 1;
    text.insert(pos, "{not json");
    const fs::path bad = d / "bad.jsonl";
    write_text_file(bad, text);
    const auto r = cli({"report", bad.string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("bad.jsonl:4:") != std::string::npos);
}

TEST_CASE("exit codes for missing artifacts and bad config") {
    const fs::path empty = fresh_dir("empty");
    const auto missing = cli({"run", (kConfigs / "shock.json").string(), "--artifacts", empty.string(), "--out",
                              empty.string()});
    CHECK(missing.code == kExitMissingArtifact);
    CHECK(missing.err.find("library.json") != std::string::npos);

    const fs::path d = fresh_dir("badcfg");
    write_text_file(d / "bad.json", R"({"name": "x", "governor": {"alpah": 2.0}})");
    const auto bad = cli({"run", (d / "bad.json").string(), "--artifacts", artifacts().string(), "--out", d.string()});
    CHECK(bad.code == kExitConfig);
    CHECK(bad.err.find("governor.alpah") != std::string::npos);

    write_text_file(d / "empty_grid.json", R"({"library": {"grid": [0.2, 1.0, 0]}})");
    const auto grid = cli({"build-library", (d / "empty_grid.json").string(), "--out", d.string(), "--fresh"});
    CHECK(grid.code == kExitConfig);
    CHECK(grid.err.find("grid") != std::string::npos);
}

TEST_CASE("output directory falls back to the environment variable") {
    const fs::path d = fresh_dir("env");
    fs::copy_file(artifacts() / "library.json", d / "library.json");
    ::setenv("REGIMEKIT_OUT_DIR", d.string().c_str(), 1);
    const auto r = cli({"compute-envelopes", (kConfigs / "build.json").string()});
    ::unsetenv("REGIMEKIT_OUT_DIR");
    REQUIRE(r.code == 0);
    CHECK(fs::exists(d / "envelope.json"));
}
