#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rwom/agent.hpp"
#include "rwom/gateway.hpp"
#include "rwom/mock_env.hpp"
#include "rwom/retrieval.hpp"

namespace rwom {

struct ConfigError : RwomError {
    using RwomError::RwomError;
};

struct TaskSpec {
    std::string id;
    std::string goal_text;
    std::filesystem::path env_spec;
};

struct RunConfig {
    EnvironmentProfile profile = EnvironmentProfile::mock;
    AgentConfig agent;
    std::string backend_type = "scripted";  // scripted | remote
    std::filesystem::path fixtures;
    RemoteBackendConfig remote;
    std::size_t embedder_dim = 256;
    std::optional<std::filesystem::path> corpus;
    std::optional<std::filesystem::path> index;
    RetrievalConfig retrieval;
    std::vector<TaskSpec> tasks;
    std::filesystem::path base_dir;  // directory of the config file

    static RunConfig from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config: " + path.string());
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw ConfigError("config is not valid JSON: " + path.string());
        RunConfig cfg;
        cfg.base_dir = path.parent_path();
        try {
            if (j.contains("profile")) {
                auto p = profile_from_string(j["profile"].get<std::string>());
                if (!p) throw ConfigError("unknown profile: " + j["profile"].get<std::string>());
                cfg.profile = *p;
            }
            if (j.contains("mode")) {
                auto m = agent_mode_from_string(j["mode"].get<std::string>());
                if (!m) throw ConfigError("unknown mode: " + j["mode"].get<std::string>());
                cfg.agent.mode = *m;
            }
            cfg.agent.branching_m = j.value("branching_m", cfg.agent.branching_m);
            cfg.agent.horizon_k = j.value("horizon_k", cfg.agent.horizon_k);
            if (j.contains("rollout_mode")) {
                std::string rm = j["rollout_mode"].get<std::string>();
                if (rm != "longcot" && rm != "iterative") {
                    throw ConfigError("unknown rollout_mode: " + rm);
                }
                cfg.agent.rollout_mode = rm == "longcot" ? RolloutMode::longcot : RolloutMode::iterative;
            }
            cfg.agent.max_steps = j.value("max_steps", cfg.agent.max_steps);
            cfg.agent.history_window = j.value("history_window", cfg.agent.history_window);
            cfg.agent.top_k_evidence = j.value("top_k_evidence", cfg.agent.top_k_evidence);
            cfg.retrieval.top_k = cfg.agent.top_k_evidence;

            if (j.contains("backend")) {
                const auto& b = j["backend"];
                cfg.backend_type = b.value("type", "scripted");
                if (cfg.backend_type == "scripted") {
                    if (!b.contains("fixtures")) throw ConfigError("scripted backend needs fixtures");
                    cfg.fixtures = cfg.resolve(b["fixtures"].get<std::string>());
                } else if (cfg.backend_type == "remote") {
                    cfg.remote.base_url = b.at("base_url").get<std::string>();
                    cfg.remote.model = b.value("model", "");
                    cfg.remote.path = b.value("path", cfg.remote.path);
                    cfg.remote.api_key_env = b.value("api_key_env", cfg.remote.api_key_env);
                } else {
                    throw ConfigError("unknown backend type: " + cfg.backend_type);
                }
            }
            cfg.embedder_dim = j.value("embedder_dim", cfg.embedder_dim);
            if (j.contains("corpus")) cfg.corpus = cfg.resolve(j["corpus"].get<std::string>());
            if (j.contains("index")) cfg.index = cfg.resolve(j["index"].get<std::string>());

            if (!j.contains("tasks") || !j["tasks"].is_array() || j["tasks"].empty()) {
                throw ConfigError("config has no tasks");
            }
            for (const auto& t : j["tasks"]) {
                cfg.tasks.push_back({t.at("id").get<std::string>(),
                                     t.at("goal").get<std::string>(),
                                     cfg.resolve(t.at("env_spec").get<std::string>())});
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("malformed config: ") + e.what());
        }
        return cfg;
    }

    std::filesystem::path resolve(const std::filesystem::path& p) const {
        return p.is_absolute() ? p : base_dir / p;
    }
};

struct PackResult {
    nlohmann::json summary;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
};

// Runs every task in the config against the mock environment and writes one
// run directory per task plus an aggregate summary.
inline PackResult run_pack(const RunConfig& cfg, const std::filesystem::path& out_dir,
                           std::size_t jobs = 1) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    std::shared_ptr<LlmBackend> backend;
    if (cfg.backend_type == "scripted") {
        backend = std::make_shared<ScriptedBackend>(ScriptedBackend::from_file(cfg.fixtures.string()));
    } else {
        throw ConfigError("remote backend runs are driven through the library API");
    }

    HashingEmbedder embedder(cfg.embedder_dim);
    std::optional<FlatIndex> index;
    if (cfg.agent.uses_retrieval()) {
        if (cfg.index && fs::exists(*cfg.index)) {
            index = FlatIndex::load(*cfg.index);
        } else if (cfg.corpus) {
            index = FlatIndex(ingest(*cfg.corpus), embedder);
        } else {
            throw ConfigError("mode " + to_string(cfg.agent.mode) + " requires a corpus or index");
        }
    }

    auto run_one = [&](const TaskSpec& task) -> nlohmann::json {
        auto ledger = std::make_shared<CallLedger>();
        Gateway gateway(backend, ledger);
        std::optional<Retriever> retriever;
        if (index) retriever.emplace(*index, embedder, gateway, cfg.retrieval);

        MockEnvironment env(MockEnvSpec::from_file(task.env_spec.string()));
        AgentRunner runner(gateway, cfg.profile, retriever ? &*retriever : nullptr);

        Goal goal{task.id, task.goal_text};
        nlohmann::json entry = {{"task_id", task.id}};
        try {
            TaskRun run = runner.run_task(goal, env, cfg.agent);
            write_task_run(out_dir / task.id, run, task.env_spec.string());
            entry["success"] = run.success;
            entry["steps"] = run.trajectory.steps.size();
            entry["termination"] = to_string(run.termination);
            entry["total_llm_calls"] = run.ledger_snapshot.at("total");
        } catch (const RwomError& e) {
            entry["success"] = false;
            entry["error"] = e.what();
        }
        return entry;
    };

    std::vector<nlohmann::json> entries(cfg.tasks.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < cfg.tasks.size(); ++i) entries[i] = run_one(cfg.tasks[i]);
    } else {
        std::vector<std::future<void>> pending;
        std::atomic<std::size_t> next{0};
        for (std::size_t w = 0; w < std::min(jobs, cfg.tasks.size()); ++w) {
            pending.push_back(std::async(std::launch::async, [&] {
                for (std::size_t i = next.fetch_add(1); i < cfg.tasks.size(); i = next.fetch_add(1)) {
                    entries[i] = run_one(cfg.tasks[i]);
                }
            }));
        }
        for (auto& f : pending) f.get();
    }

    PackResult result;
    std::size_t total_steps = 0;
    std::size_t total_calls = 0;
    nlohmann::json jtasks = nlohmann::json::array();
    for (const auto& e : entries) {
        if (e.value("success", false)) ++result.succeeded;
        else ++result.failed;
        total_steps += e.value("steps", std::size_t{0});
        total_calls += e.value("total_llm_calls", std::size_t{0});
        jtasks.push_back(e);
    }
    const double n = static_cast<double>(cfg.tasks.size());
    result.summary = {{"mode", to_string(cfg.agent.mode)},
                      {"tasks", jtasks},
                      {"num_tasks", cfg.tasks.size()},
                      {"success_rate", n == 0 ? 0.0 : result.succeeded / n},
                      {"mean_steps", n == 0 ? 0.0 : total_steps / n},
                      {"total_llm_calls", total_calls}};
    std::ofstream out(out_dir / "summary.json", std::ios::binary);
    out << result.summary.dump(2) << "\n";
    return result;
}

}  // namespace rwom
