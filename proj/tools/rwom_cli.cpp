// Command-line entry point: corpus ingestion, agent runs, probing, replay,
// and reporting over recorded run directories.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rwom/agent.hpp"
#include "rwom/probing.hpp"
#include "rwom/replay.hpp"
#include "rwom/retrieval.hpp"
#include "rwom/run_config.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitGeneric = 1;
constexpr int kExitCorpus = 2;
constexpr int kExitConfig = 3;
constexpr int kExitReplayDivergence = 4;

int cmd_ingest(const std::string& corpus, const std::string& out_index, std::size_t window,
               std::size_t overlap, std::size_t dim) {
    try {
        rwom::ChunkingConfig cfg{window, overlap};
        auto chunks = rwom::ingest(corpus, cfg);
        rwom::HashingEmbedder embedder(dim);
        rwom::FlatIndex index(chunks, embedder);
        index.save(out_index);
        std::cout << "ingested " << chunks.size() << " chunks (dim " << dim << ") -> " << out_index
                  << "\n";
        return kExitOk;
    } catch (const rwom::EmptyCorpus& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorpus;
    }
}

int cmd_run(const std::string& config_path, const std::string& mode, const std::string& tasks_csv,
            const std::string& out, std::size_t jobs) {
    rwom::RunConfig cfg;
    try {
        cfg = rwom::RunConfig::from_file(config_path);
        if (!mode.empty()) {
            auto m = rwom::agent_mode_from_string(mode);
            if (!m) throw rwom::ConfigError("unknown mode: " + mode);
            cfg.agent.mode = *m;
        }
        if (!tasks_csv.empty()) {
            std::vector<rwom::TaskSpec> filtered;
            std::string id;
            std::istringstream in(tasks_csv);
            std::set<std::string> wanted;
            while (std::getline(in, id, ',')) wanted.insert(id);
            for (const auto& t : cfg.tasks) {
                if (wanted.count(t.id)) filtered.push_back(t);
            }
            if (filtered.empty()) throw rwom::ConfigError("task filter matched nothing: " + tasks_csv);
            cfg.tasks = std::move(filtered);
        }
    } catch (const rwom::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    auto result = rwom::run_pack(cfg, out, jobs);
    std::cout << "mode " << result.summary["mode"].get<std::string>() << ": "
              << result.succeeded << "/" << cfg.tasks.size() << " tasks succeeded, mean steps "
              << result.summary["mean_steps"].dump() << ", total LLM calls "
              << result.summary["total_llm_calls"].dump() << "\n";
    for (const auto& t : result.summary["tasks"]) {
        std::cout << "  " << t["task_id"].get<std::string>() << ": "
                  << (t.value("success", false) ? "success" : "failure");
        if (t.contains("error")) std::cout << " (" << t["error"].get<std::string>() << ")";
        std::cout << "\n";
    }
    return kExitOk;
}

std::vector<rwom::Trajectory> load_trajectories(const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().filename() == "trajectory.jsonl") {
            files.push_back(entry.path());
        } else if (entry.is_regular_file() && entry.path().extension() == ".jsonl" &&
                   entry.path().filename().string().rfind("trajectory_", 0) == 0) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<rwom::Trajectory> out;
    for (const auto& f : files) {
        out.push_back(rwom::deserialize_trajectory(rwom::read_file(f)));
    }
    return out;
}

int cmd_probe(const std::string& task, const std::string& trajectories_dir, const std::string& out_dir,
              const std::string& fixtures, const std::string& references, std::uint64_t seed) {
    fs::create_directories(out_dir);
    auto trajectories = load_trajectories(trajectories_dir);
    if (trajectories.empty()) {
        std::cerr << "error: no trajectories found under " << trajectories_dir << "\n";
        return kExitGeneric;
    }

    std::shared_ptr<rwom::LlmBackend> backend;
    if (!fixtures.empty()) {
        backend = std::make_shared<rwom::ScriptedBackend>(rwom::ScriptedBackend::from_file(fixtures));
    }
    auto ledger = std::make_shared<rwom::CallLedger>();

    if (task == "next_state") {
        rwom::MiningStats stats;
        auto probes = rwom::mine_next_state(trajectories, seed, &stats);
        std::ofstream(fs::path(out_dir) / "next_state_probes.jsonl", std::ios::binary)
            << rwom::probes_to_jsonl(probes);
        std::cout << "mined " << probes.size() << " next-state probes ("
                  << stats.skipped_too_short << " trajectories too short)\n";
        if (backend) {
            rwom::Gateway gateway(backend, ledger);
            auto report = rwom::evaluate_next_state(probes, gateway);
            std::ofstream(fs::path(out_dir) / "next_state_report.json", std::ios::binary)
                << report.to_json().dump(2) << "\n";
            std::cout << rwom::next_state_table(report);
        }
        return kExitOk;
    }
    if (task == "milestone") {
        std::vector<rwom::Trajectory> successes, failures;
        for (auto& t : trajectories) {
            (t.outcome == rwom::TrajectoryOutcome::success ? successes : failures).push_back(t);
        }
        rwom::MiningStats stats;
        auto probes = rwom::mine_milestones(successes, failures, seed, 3, 2, &stats);
        std::ofstream(fs::path(out_dir) / "milestone_probes.jsonl", std::ios::binary)
            << rwom::probes_to_jsonl(probes);
        std::cout << "mined " << probes.size() << " milestone probes (" << stats.skipped_no_pair
                  << " goals without a success/failure pair)\n";
        if (backend) {
            rwom::Gateway gateway(backend, ledger);
            auto report = rwom::evaluate_milestones(probes, gateway);
            std::ofstream(fs::path(out_dir) / "milestone_report.json", std::ios::binary)
                << report.to_json().dump(2) << "\n";
            std::cout << "milestone accuracy: " << report.overall.accuracy() << " ("
                      << report.overall.correct << "/" << report.overall.total << ")\n";
        }
        return kExitOk;
    }
    if (task == "plan") {
        if (references.empty()) {
            std::cerr << "error: --task plan requires --references (goal id -> reference chunk)\n";
            return kExitGeneric;
        }
        nlohmann::json refs = nlohmann::json::parse(rwom::read_file(references));
        std::vector<rwom::PlanProbe> probes;
        for (const auto& t : trajectories) {
            if (!refs.contains(t.goal.id) || t.steps.empty()) continue;
            rwom::PlanProbe p;
            p.probe_id = t.goal.id + "#plan";
            p.goal = t.goal;
            p.initial_obs = t.steps.front().observation;
            p.reference_chunk = {t.goal.id + "-ref", "references", refs[t.goal.id].get<std::string>(), 0};
            probes.push_back(std::move(p));
        }
        std::ofstream(fs::path(out_dir) / "plan_probes.jsonl", std::ios::binary)
            << rwom::probes_to_jsonl(probes);
        std::cout << "built " << probes.size() << " plan probes\n";
        if (backend) {
            rwom::Gateway gateway(backend, ledger);
            auto report = rwom::evaluate_plan_alignment(probes, gateway, gateway);
            std::ofstream(fs::path(out_dir) / "plan_report.json", std::ios::binary)
                << report.to_json().dump(2) << "\n";
            std::cout << "plan alignment accuracy: " << report.accuracy() << " (" << report.aligned
                      << "/" << report.total << ")\n";
        }
        return kExitOk;
    }
    std::cerr << "error: unknown probe task " << task << "\n";
    return kExitGeneric;
}

int cmd_replay(const std::string& run_dir, const std::string& spec_base) {
    auto replay_one = [&](const fs::path& dir) {
        auto result = rwom::replay_run_dir(dir, spec_base);
        if (!result.ok) {
            std::cerr << "divergence in " << dir.string() << " at step " << result.divergence_step
                      << "\n  recorded: " << result.expected << "\n  replayed: " << result.actual
                      << "\n";
        }
        return result.ok;
    };

    bool all_ok = true;
    if (fs::exists(fs::path(run_dir) / "trajectory.jsonl")) {
        all_ok = replay_one(run_dir);
    } else {
        // A pack output directory: replay every task run inside it.
        bool found = false;
        for (const auto& entry : fs::directory_iterator(run_dir)) {
            if (entry.is_directory() && fs::exists(entry.path() / "trajectory.jsonl")) {
                found = true;
                all_ok = replay_one(entry.path()) && all_ok;
            }
        }
        if (!found) {
            std::cerr << "error: no run directories under " << run_dir << "\n";
            return kExitGeneric;
        }
    }
    if (all_ok) {
        std::cout << "replay ok\n";
        return kExitOk;
    }
    return kExitReplayDivergence;
}

int cmd_report(const std::vector<std::string>& runs, const std::string& out) {
    nlohmann::json rows = nlohmann::json::array();
    std::printf("%-10s %-10s %-12s %-12s\n", "mode", "success", "mean steps", "LLM calls");
    for (const auto& dir : runs) {
        nlohmann::json summary = nlohmann::json::parse(rwom::read_file(fs::path(dir) / "summary.json"));
        std::printf("%-10s %-10.2f %-12.2f %-12zu\n", summary["mode"].get<std::string>().c_str(),
                    summary["success_rate"].get<double>(), summary["mean_steps"].get<double>(),
                    summary["total_llm_calls"].get<std::size_t>());
        rows.push_back({{"dir", dir},
                        {"mode", summary["mode"]},
                        {"success_rate", summary["success_rate"]},
                        {"mean_steps", summary["mean_steps"]},
                        {"total_llm_calls", summary["total_llm_calls"]}});
    }
    if (!out.empty()) {
        std::ofstream(out, std::ios::binary) << nlohmann::json{{"runs", rows}}.dump(2) << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retrieval-grounded world-model agent engine"};
    app.require_subcommand(1);

    auto* ingest = app.add_subcommand("ingest", "Chunk and embed a tutorial corpus into an index");
    std::string corpus, out_index;
    std::size_t window = 4096, overlap = 256, dim = 256;
    ingest->add_option("--corpus", corpus, "Directory of .md/.txt tutorial files")->required();
    ingest->add_option("--out-index", out_index, "Output index file")->required();
    ingest->add_option("--chunk-window", window, "Chunk window in characters");
    ingest->add_option("--chunk-overlap", overlap, "Chunk overlap in characters");
    ingest->add_option("--dim", dim, "Embedding dimension");

    auto* run = app.add_subcommand("run", "Run agent tasks from a config file");
    std::string config_path, mode, tasks_csv, run_out = "out";
    std::size_t jobs = 1;
    run->add_option("--config", config_path, "Run config JSON")->required();
    run->add_option("--mode", mode, "Override mode: vanilla|rag|wom|rwom");
    run->add_option("--tasks", tasks_csv, "Comma-separated task id filter");
    run->add_option("--out", run_out, "Output directory");
    run->add_option("--jobs", jobs, "Parallel task runs");

    auto* probe = app.add_subcommand("probe", "Mine and evaluate probing tasks from trajectories");
    std::string probe_task, trajectories_dir, probe_out = "probes", fixtures, references;
    std::uint64_t seed = 7;
    probe->add_option("--task", probe_task, "next_state|plan|milestone")->required();
    probe->add_option("--trajectories", trajectories_dir, "Directory containing trajectory JSONL files")
        ->required();
    probe->add_option("--out", probe_out, "Output directory");
    probe->add_option("--fixtures", fixtures, "Scripted backend fixture file (enables evaluation)");
    probe->add_option("--references", references, "JSON map goal id -> reference procedure (plan task)");
    probe->add_option("--seed", seed, "Gold-side randomization seed");

    auto* replay = app.add_subcommand("replay", "Re-execute a recorded run and verify observations");
    std::string run_dir, spec_base;
    replay->add_option("--run-dir", run_dir, "Run directory (or pack output directory)")->required();
    replay->add_option("--spec-base", spec_base, "Base directory for relative env spec paths");

    auto* report = app.add_subcommand("report", "Summarize one or more run output directories");
    std::vector<std::string> report_runs;
    std::string report_out;
    report->add_option("--runs", report_runs, "Run output directories")->required();
    report->add_option("--out", report_out, "Write JSON report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return cmd_ingest(corpus, out_index, window, overlap, dim);
        if (*run) return cmd_run(config_path, mode, tasks_csv, run_out, jobs);
        if (*probe) return cmd_probe(probe_task, trajectories_dir, probe_out, fixtures, references, seed);
        if (*replay) return cmd_replay(run_dir, spec_base);
        if (*report) return cmd_report(report_runs, report_out);
    } catch (const rwom::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitGeneric;
    }
    return kExitGeneric;
}
