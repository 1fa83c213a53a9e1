#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "json.hpp"
#include "rwom/agent.hpp"
#include "rwom/mock_env.hpp"
#include "rwom/trajectory.hpp"

namespace rwom {

struct ReplayResult {
    bool ok = true;
    std::size_t divergence_step = 0;
    std::string expected;
    std::string actual;
};

// Re-executes the recorded actions and checks the mock environment
// reproduces the recorded observation sequence byte for byte.
inline ReplayResult replay_trajectory(const Trajectory& trajectory, MockEnvironment& env) {
    Observation obs = env.reset();
    for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
        const Step& recorded = trajectory.steps[i];
        if (obs.content != recorded.observation.content) {
            return {false, i, recorded.observation.content, obs.content};
        }
        obs = env.step(recorded.action).observation;
    }
    return {};
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RwomError("cannot open " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Replays a recorded run directory; env spec paths in summary.json are
// resolved relative to spec_base when not absolute.
inline ReplayResult replay_run_dir(const std::filesystem::path& run_dir,
                                   const std::filesystem::path& spec_base = {}) {
    nlohmann::json summary = nlohmann::json::parse(read_file(run_dir / "summary.json"));
    std::filesystem::path spec_path = summary.at("env_spec").get<std::string>();
    if (spec_path.is_relative() && !spec_base.empty()) {
        spec_path = spec_base / spec_path;
    }
    MockEnvironment env(MockEnvSpec::from_file(spec_path.string()));
    Trajectory trajectory = deserialize_trajectory(read_file(run_dir / "trajectory.jsonl"));
    return replay_trajectory(trajectory, env);
}

}  // namespace rwom
