#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "rwom/run_config.hpp"
#include "rwom/testing/fixture_pack.hpp"

using namespace rwom;
namespace fs = std::filesystem;

#ifndef RWOM_SOURCE_DIR
#define RWOM_SOURCE_DIR "."
#endif

namespace {

struct TempDir {
    fs::path dir;
    explicit TempDir(const std::string& name) {
        dir = fs::temp_directory_path() / name;
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
};

fs::path write_config(const TempDir& tmp, const nlohmann::json& body) {
    fs::path p = tmp.dir / "config.json";
    std::ofstream out(p);
    out << body.dump(2);
    return p;
}

nlohmann::json minimal_config() {
    return {{"profile", "mock"},
            {"mode", "vanilla"},
            {"backend", {{"type", "scripted"}, {"fixtures", "fixtures.json"}}},
            {"tasks", {{{"id", "t01"}, {"goal", "g"}, {"env_spec", "envs/t01.json"}}}}};
}

// One generated pack per test binary; building the fixtures is cheap but the
// corpus ingest is shared.
const fs::path& generated_pack() {
    static TempDir pack("rwom_cfg_pack");
    static bool built = false;
    if (!built) {
        testing::write_pack(pack.dir, fs::path(RWOM_SOURCE_DIR) / "fixtures" / "corpus");
        built = true;
    }
    return pack.dir;
}

}  // namespace

TEST_CASE("missing or malformed config files are config errors") {
    CHECK_THROWS_AS(RunConfig::from_file("/nonexistent/config.json"), ConfigError);
    TempDir tmp("rwom_cfg_bad_json");
    fs::path p = tmp.dir / "config.json";
    {
        std::ofstream out(p);
        out << "{not json";
    }
    CHECK_THROWS_AS(RunConfig::from_file(p), ConfigError);
}

TEST_CASE("unknown enum values are rejected with ConfigError") {
    TempDir tmp("rwom_cfg_enums");
    auto base = minimal_config();

    auto bad_mode = base;
    bad_mode["mode"] = "psychic";
    CHECK_THROWS_AS(RunConfig::from_file(write_config(tmp, bad_mode)), ConfigError);

    auto bad_profile = base;
    bad_profile["profile"] = "holodeck";
    CHECK_THROWS_AS(RunConfig::from_file(write_config(tmp, bad_profile)), ConfigError);

    auto bad_rollout = base;
    bad_rollout["rollout_mode"] = "telepathic";
    CHECK_THROWS_AS(RunConfig::from_file(write_config(tmp, bad_rollout)), ConfigError);

    auto bad_backend = base;
    bad_backend["backend"]["type"] = "carrier_pigeon";
    CHECK_THROWS_AS(RunConfig::from_file(write_config(tmp, bad_backend)), ConfigError);

    auto no_fixtures = base;
    no_fixtures["backend"].erase("fixtures");
    CHECK_THROWS_AS(RunConfig::from_file(write_config(tmp, no_fixtures)), ConfigError);
}

TEST_CASE("a config without tasks is rejected") {
    TempDir tmp("rwom_cfg_tasks");
    auto no_tasks = minimal_config();
    no_tasks.erase("tasks");
    CHECK_THROWS_AS(RunConfig::from_file(write_config(tmp, no_tasks)), ConfigError);
    auto empty_tasks = minimal_config();
    empty_tasks["tasks"] = nlohmann::json::array();
    CHECK_THROWS_AS(RunConfig::from_file(write_config(tmp, empty_tasks)), ConfigError);
}

TEST_CASE("relative paths resolve against the config directory") {
    TempDir tmp("rwom_cfg_paths");
    auto cfg = RunConfig::from_file(write_config(tmp, minimal_config()));
    CHECK(cfg.fixtures == tmp.dir / "fixtures.json");
    REQUIRE(cfg.tasks.size() == 1);
    CHECK(cfg.tasks[0].env_spec == tmp.dir / "envs" / "t01.json");
    CHECK(cfg.agent.mode == AgentMode::vanilla);
    CHECK(cfg.profile == EnvironmentProfile::mock);
}

TEST_CASE("the generated pack config loads with the expected shape") {
    auto cfg = RunConfig::from_file(generated_pack() / "config.json");
    CHECK(cfg.agent.mode == AgentMode::rwom);
    CHECK(cfg.agent.branching_m == 3);
    CHECK(cfg.agent.horizon_k == 3);
    CHECK(cfg.tasks.size() == 10);
    CHECK(cfg.backend_type == "scripted");
    REQUIRE(cfg.corpus.has_value());
    CHECK(fs::exists(*cfg.corpus));
    for (const auto& t : cfg.tasks) CHECK(fs::exists(t.env_spec));
}

TEST_CASE("run_pack executes every task and writes per-task artifacts") {
    auto cfg = RunConfig::from_file(generated_pack() / "config.json");
    TempDir out("rwom_cfg_run_rwom");
    PackResult result = run_pack(cfg, out.dir);
    CHECK(result.succeeded == 10);
    CHECK(result.failed == 0);
    CHECK(result.summary["mode"] == "rwom");
    CHECK(result.summary["num_tasks"] == 10);
    CHECK(result.summary["success_rate"] == 1.0);
    CHECK(fs::exists(out.dir / "summary.json"));
    for (const auto& t : cfg.tasks) {
        CAPTURE(t.id);
        CHECK(fs::exists(out.dir / t.id / "trajectory.jsonl"));
        CHECK(fs::exists(out.dir / t.id / "audit.jsonl"));
        CHECK(fs::exists(out.dir / t.id / "ledger.json"));
        CHECK(fs::exists(out.dir / t.id / "summary.json"));
    }
}

TEST_CASE("run_pack under wom solves only the short half of the pack") {
    auto cfg = RunConfig::from_file(generated_pack() / "config.json");
    cfg.agent.mode = AgentMode::wom;
    TempDir out("rwom_cfg_run_wom");
    PackResult result = run_pack(cfg, out.dir);
    CHECK(result.succeeded == 5);
    CHECK(result.failed == 5);
}

TEST_CASE("parallel execution produces the same summary as sequential") {
    auto cfg = RunConfig::from_file(generated_pack() / "config.json");
    TempDir seq("rwom_cfg_seq");
    TempDir par("rwom_cfg_par");
    PackResult a = run_pack(cfg, seq.dir, 1);
    PackResult b = run_pack(cfg, par.dir, 4);
    CHECK(a.summary == b.summary);
}

#ifdef RWOM_CLI_PATH
TEST_CASE("the CLI maps domain failures to documented exit codes") {
    if (!fs::exists(RWOM_CLI_PATH)) {
        MESSAGE("CLI binary not built yet; skipping exit-code checks");
        return;
    }
    auto run_cli = [](const std::string& args) {
        std::string cmd = std::string(RWOM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
        int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };
    TempDir tmp("rwom_cfg_cli");
    fs::create_directories(tmp.dir / "empty_corpus");
    CHECK(run_cli("ingest --corpus " + (tmp.dir / "empty_corpus").string() + " --out-index " +
                  (tmp.dir / "index.bin").string()) == 2);
    CHECK(run_cli("run --config " + (tmp.dir / "missing.json").string() + " --out " +
                  (tmp.dir / "out").string()) == 3);
}
#endif
