#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rwom/gateway.hpp"
#include "rwom/mock_env.hpp"
#include "rwom/prompts.hpp"
#include "rwom/retrieval.hpp"
#include "rwom/reward.hpp"
#include "rwom/rollout.hpp"
#include "rwom/trajectory.hpp"

namespace rwom {

enum class AgentMode { vanilla, rag, wom, rwom };

inline std::string to_string(AgentMode m) {
    switch (m) {
        case AgentMode::vanilla: return "vanilla";
        case AgentMode::rag: return "rag";
        case AgentMode::wom: return "wom";
        case AgentMode::rwom: return "rwom";
    }
    return "?";
}

inline std::optional<AgentMode> agent_mode_from_string(std::string_view s) {
    if (s == "vanilla") return AgentMode::vanilla;
    if (s == "rag") return AgentMode::rag;
    if (s == "wom") return AgentMode::wom;
    if (s == "rwom") return AgentMode::rwom;
    return std::nullopt;
}

struct AgentConfig {
    AgentMode mode = AgentMode::rwom;
    std::size_t branching_m = 3;
    std::size_t horizon_k = 3;
    RolloutMode rollout_mode = RolloutMode::longcot;
    std::size_t max_steps = 30;
    std::size_t history_window = 5;  // trailing steps of history in the policy prompt
    std::size_t top_k_evidence = 5;

    bool uses_world_model() const { return mode == AgentMode::wom || mode == AgentMode::rwom; }
    bool uses_retrieval() const { return mode == AgentMode::rag || mode == AgentMode::rwom; }
};

enum class Termination { terminal_action, step_budget, environment_error };

inline std::string to_string(Termination t) {
    switch (t) {
        case Termination::terminal_action: return "terminal_action";
        case Termination::step_budget: return "step_budget";
        case Termination::environment_error: return "environment_error";
    }
    return "?";
}

struct NoValidCandidates : RwomError {
    using RwomError::RwomError;
};

struct TaskRun {
    Goal goal;
    Trajectory trajectory;
    std::vector<nlohmann::json> audit;  // retrieval + per-step decision records
    nlohmann::json ledger_snapshot;
    Termination termination = Termination::step_budget;
    bool success = false;
    AgentMode mode = AgentMode::rwom;
};

// Algorithm: ground once, then per step propose m candidates, roll out each,
// rank listwise, execute the argmax, until a terminal action, the step
// budget, or an environment error.
class AgentRunner {
public:
    AgentRunner(Gateway& gateway, EnvironmentProfile profile, const Retriever* retriever = nullptr)
        : gateway_(gateway), profile_(profile), retriever_(retriever) {}

    CandidateSet propose_candidates(const Goal& goal, const Observation& obs,
                                    const std::vector<Step>& history, std::size_t branching_m,
                                    const EvidenceSet* evidence) {
        for (int attempt = 0; attempt < 2; ++attempt) {
            PromptRequest req;
            req.template_id = PromptTemplate::candidate_gen;
            req.rendered_text = prompts::candidate_gen(goal, obs, history, branching_m, profile_,
                                                       evidence ? evidence->texts()
                                                                : std::vector<std::string>{});
            req.key_fields = {{"goal", goal.id}, {"obs", obs.id}};
            req.phase = CallPhase::propose;
            LlmResponse res = gateway_.complete(req);

            CandidateSet set;
            if (res.parsed) {
                for (const auto& cand : (*res.parsed)["action_candidates"]) {
                    auto parsed = parse_action(cand["action_code"], profile_);
                    if (!parsed.ok()) {
                        log::warn("dropping invalid candidate: " + to_string(parsed.error().kind) +
                                  " " + parsed.error().detail);
                        continue;
                    }
                    set.candidates.emplace_back(Thought{cand["thought_and_action"].get<std::string>()},
                                                std::move(parsed).value());
                }
            }
            if (!set.candidates.empty()) return set;
        }
        throw NoValidCandidates("no valid candidates for goal " + goal.id + " at " + obs.id);
    }

    TaskRun run_task(const Goal& goal, MockEnvironment& env, const AgentConfig& cfg) {
        TaskRun run;
        run.goal = goal;
        run.mode = cfg.mode;
        run.trajectory.goal = goal;

        // Evidence is retrieved once per task, before the decision loop.
        EvidenceSet evidence;
        bool have_evidence = false;
        if (cfg.uses_retrieval()) {
            if (retriever_ == nullptr) {
                throw RwomError("mode " + to_string(cfg.mode) + " requires a retriever");
            }
            evidence = retriever_->ground(goal);
            have_evidence = true;
            nlohmann::json chunks = nlohmann::json::array();
            for (std::size_t i = 0; i < evidence.chunks.size(); ++i) {
                chunks.push_back({{"chunk_id", evidence.chunks[i].chunk_id},
                                  {"cosine_score", evidence.provenance[i].cosine_score},
                                  {"pre_rerank_index", evidence.provenance[i].pre_rerank_index}});
            }
            run.audit.push_back({{"event", "retrieval"}, {"goal", goal.id}, {"evidence", chunks}});
        }

        WorldModel world_model(gateway_, goal, profile_);
        RewardConfig reward_cfg;
        reward_cfg.grounded = cfg.mode == AgentMode::rwom;
        RewardRanker ranker(gateway_, reward_cfg);

        Observation obs = env.reset();
        run.termination = Termination::step_budget;

        for (std::size_t step = 0; step < cfg.max_steps; ++step) {
            obs.step_index = step;

            std::vector<Step> history;
            std::size_t start = run.trajectory.steps.size() > cfg.history_window
                                    ? run.trajectory.steps.size() - cfg.history_window
                                    : 0;
            history.assign(run.trajectory.steps.begin() + static_cast<std::ptrdiff_t>(start),
                           run.trajectory.steps.end());

            CandidateSet candidates;
            try {
                // RAG injects evidence into the propose prompt; in rwom the
                // evidence grounds the world model instead.
                const EvidenceSet* propose_evidence =
                    (cfg.mode == AgentMode::rag && have_evidence) ? &evidence : nullptr;
                std::size_t m = cfg.uses_world_model() ? cfg.branching_m : 1;
                candidates = propose_candidates(goal, obs, history, m, propose_evidence);
            } catch (const NoValidCandidates&) {
                run.termination = Termination::environment_error;
                break;
            } catch (const BackendUnreachable&) {
                run.termination = Termination::environment_error;
                break;
            }

            nlohmann::json decision = {{"event", "decision"}, {"step_index", step}};
            nlohmann::json jcands = nlohmann::json::array();
            for (const auto& [thought, action] : candidates.candidates) {
                jcands.push_back({{"thought", thought.text}, {"action", action.to_json()}});
            }
            decision["candidates"] = jcands;

            RankingResult ranking;
            ranking.order.resize(candidates.size());
            std::iota(ranking.order.begin(), ranking.order.end(), 0);

            if (cfg.uses_world_model()) {
                RolloutConfig rollout_cfg;
                rollout_cfg.horizon_k = cfg.horizon_k;
                rollout_cfg.mode = cfg.rollout_mode;
                rollout_cfg.grounded = cfg.mode == AgentMode::rwom;

                std::vector<RolloutTrajectory> rollouts;
                nlohmann::json jrollouts = nlohmann::json::array();
                bool rollout_failed = false;
                for (std::size_t j = 0; j < candidates.size(); ++j) {
                    const auto& [thought, action] = candidates.candidates[j];
                    try {
                        RolloutTrajectory traj = world_model.simulate(
                            {obs, thought, action}, j, evidence, rollout_cfg);
                        nlohmann::json jstates = nlohmann::json::array();
                        for (const auto& s : traj.states) {
                            jstates.push_back({{"index", s.index}, {"description", s.description}});
                        }
                        jrollouts.push_back({{"candidate_index", j},
                                             {"states", jstates},
                                             {"truncated", traj.truncated}});
                        rollouts.push_back(std::move(traj));
                    } catch (const RwomError&) {
                        rollout_failed = true;
                        break;
                    }
                }
                if (rollout_failed) {
                    run.termination = Termination::environment_error;
                    break;
                }
                decision["rollouts"] = jrollouts;
                ranking = ranker.rank_rollouts(goal, candidates, rollouts, evidence, obs);
            }

            SelectionRecord selection = RewardRanker::select(candidates, ranking, step);
            decision["ranking"] = {{"order", ranking.order},
                                   {"rationale", ranking.rationale},
                                   {"fallback_used", ranking.fallback_used}};
            decision["chosen_index"] = ranking.order[0];
            decision["chosen_action"] = selection.chosen_action.to_json();
            run.audit.push_back(decision);

            StepOutcome outcome = env.step(selection.chosen_action);
            Observation executed_obs = obs;
            run.trajectory.steps.push_back({executed_obs, selection.chosen_thought,
                                            selection.chosen_action});
            obs = outcome.observation;

            if (outcome.done) {
                run.termination = Termination::terminal_action;
                run.success = outcome.success;
                break;
            }
        }

        run.trajectory.outcome =
            run.success ? TrajectoryOutcome::success : TrajectoryOutcome::failure;
        run.ledger_snapshot = gateway_.ledger().to_json();
        run.trajectory.validate();
        return run;
    }

private:
    Gateway& gateway_;
    EnvironmentProfile profile_;
    const Retriever* retriever_;
};

struct CallAccounting {
    std::map<std::string, std::size_t> per_phase;
    std::size_t total = 0;
    std::size_t decision_steps = 0;
};

inline CallAccounting account_calls(const TaskRun& run) {
    CallAccounting acc;
    for (const auto& [phase, count] : run.ledger_snapshot.at("counters").items()) {
        acc.per_phase[phase] = count.get<std::size_t>();
    }
    acc.total = run.ledger_snapshot.at("total").get<std::size_t>();
    acc.decision_steps = run.trajectory.steps.size();
    return acc;
}

// Closed-form per-task call count for a run with no parse failures:
// per decision step, 1 propose call, plus for world-model modes m rollout
// calls (longcot) or m*(2k-1) (iterative) and one ranking call when m >= 2;
// plus at most 2 task-level retrieval calls (rewrite, rerank).
inline std::size_t expected_total_calls(const AgentConfig& cfg, std::size_t steps,
                                        std::size_t retrieval_calls = 2) {
    std::size_t per_step = 1;
    if (cfg.uses_world_model()) {
        std::size_t rollout_calls = cfg.rollout_mode == RolloutMode::longcot
                                        ? cfg.branching_m
                                        : cfg.branching_m * (2 * cfg.horizon_k - 1);
        per_step += rollout_calls + (cfg.branching_m >= 2 ? 1 : 0);
    }
    std::size_t total = per_step * steps;
    if (cfg.uses_retrieval()) total += retrieval_calls;
    return total;
}

inline void write_task_run(const std::filesystem::path& dir, const TaskRun& run,
                           const std::string& env_spec_path) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "trajectory.jsonl", std::ios::binary);
        out << serialize_trajectory(run.trajectory);
    }
    {
        std::ofstream out(dir / "audit.jsonl", std::ios::binary);
        for (const auto& rec : run.audit) out << rec.dump() << "\n";
    }
    {
        std::ofstream out(dir / "ledger.json", std::ios::binary);
        out << run.ledger_snapshot.dump(2) << "\n";
    }
    {
        nlohmann::json summary = {{"task_id", run.goal.id},
                                  {"goal", run.goal.text},
                                  {"mode", to_string(run.mode)},
                                  {"success", run.success},
                                  {"steps", run.trajectory.steps.size()},
                                  {"termination", to_string(run.termination)},
                                  {"total_llm_calls", run.ledger_snapshot.at("total")},
                                  {"env_spec", env_spec_path}};
        std::ofstream out(dir / "summary.json", std::ios::binary);
        out << summary.dump(2) << "\n";
    }
}

}  // namespace rwom
