#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "rwom/gateway.hpp"
#include "rwom/prompts.hpp"
#include "rwom/retrieval.hpp"
#include "rwom/trajectory.hpp"

namespace rwom {

enum class RolloutMode { longcot, iterative };

inline std::string to_string(RolloutMode m) {
    return m == RolloutMode::longcot ? "longcot" : "iterative";
}

struct RolloutConfig {
    std::size_t horizon_k = 3;
    RolloutMode mode = RolloutMode::longcot;
    bool grounded = true;  // whether evidence is injected into prompts
};

struct ImaginedState {
    std::size_t index = 0;  // 0 = the current real observation
    std::string description;

    bool operator==(const ImaginedState&) const = default;
};

struct RolloutSeed {
    Observation observation;
    Thought thought;
    ActionCommand action;
};

// An imagined k-step future for one candidate action.
struct RolloutTrajectory {
    std::size_t candidate_index = 0;
    RolloutSeed seed;
    std::vector<ImaginedState> states;  // length n+1, indices 0..n
    std::vector<std::pair<Thought, ActionCommand>> imagined_actions;
    std::string raw_text;  // full chain text, consumed by reward ranking
    bool truncated = false;

    std::size_t depth() const { return states.empty() ? 0 : states.size() - 1; }
};

struct ChainParseError : RwomError {
    using RwomError::RwomError;
};

namespace detail {

// Matches a "STATE <int>" marker at the start of a line, case-insensitive,
// tolerating **bold** wrappers, leading "#" and a trailing ":" or ".".
inline std::optional<std::size_t> match_state_marker(const std::string& line, std::string* rest) {
    std::size_t i = 0;
    auto skip_ws = [&] { while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i; };
    skip_ws();
    while (i < line.size() && (line[i] == '*' || line[i] == '#')) ++i;
    skip_ws();
    static const std::string kWord = "state";
    for (char expect : kWord) {
        if (i >= line.size() || std::tolower(static_cast<unsigned char>(line[i])) != expect) {
            return std::nullopt;
        }
        ++i;
    }
    skip_ws();
    if (i >= line.size() || !std::isdigit(static_cast<unsigned char>(line[i]))) return std::nullopt;
    std::size_t value = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) {
        value = value * 10 + static_cast<std::size_t>(line[i] - '0');
        ++i;
    }
    while (i < line.size() && (line[i] == '*' || line[i] == ':' || line[i] == '.')) ++i;
    skip_ws();
    if (rest) *rest = line.substr(i);
    return value;
}

}  // namespace detail

// Splits a LongCoT response into its STATE 0..STATE n chain. Indices must
// start at 0 and be contiguous; each state's text runs until the next marker.
inline std::vector<ImaginedState> parse_state_chain(const std::string& raw_text) {
    std::vector<ImaginedState> states;
    std::string line;
    std::size_t pos = 0;
    while (pos <= raw_text.size()) {
        std::size_t nl = raw_text.find('\n', pos);
        if (nl == std::string::npos) nl = raw_text.size();
        line = raw_text.substr(pos, nl - pos);
        std::string rest;
        auto idx = detail::match_state_marker(line, &rest);
        if (idx) {
            if (*idx != states.size()) {
                throw ChainParseError("STATE indices must be contiguous from 0; got STATE " +
                                      std::to_string(*idx) + " at position " +
                                      std::to_string(states.size()));
            }
            states.push_back({*idx, rest});
        } else if (!states.empty()) {
            std::string& desc = states.back().description;
            if (!desc.empty()) desc += "\n";
            desc += line;
        }
        if (nl == raw_text.size()) break;
        pos = nl + 1;
    }
    if (states.empty()) {
        throw ChainParseError("no STATE markers found");
    }
    for (auto& s : states) {
        while (!s.description.empty() &&
               (s.description.back() == '\n' || s.description.back() == ' ')) {
            s.description.pop_back();
        }
    }
    return states;
}

// World-model simulator over a gateway. Grounded and ungrounded rollouts
// differ only in prompt content, never in parsing or call counts.
class WorldModel {
public:
    WorldModel(Gateway& gateway, const Goal& goal, EnvironmentProfile profile)
        : gateway_(gateway), goal_(goal), profile_(profile) {}

    // One gateway call; the whole multi-step imagination comes back as a
    // single reasoning sequence.
    RolloutTrajectory simulate_longcot(const RolloutSeed& seed, std::size_t candidate_index,
                                       const EvidenceSet& evidence, const RolloutConfig& cfg) {
        PromptRequest req;
        req.template_id = PromptTemplate::longcot_rollout;
        req.rendered_text = prompts::longcot_rollout(goal_, seed.observation, seed.thought, seed.action,
                                                     cfg.horizon_k, profile_,
                                                     cfg.grounded ? evidence.texts()
                                                                  : std::vector<std::string>{});
        req.key_fields = rollout_key(seed, candidate_index, cfg.grounded);
        req.phase = CallPhase::rollout;
        LlmResponse res = gateway_.complete(req);

        std::vector<ImaginedState> states = parse_state_chain(res.raw_text);
        if (states.size() < 2) {
            throw ChainParseError("rollout must imagine at least one future state");
        }
        RolloutTrajectory traj;
        traj.candidate_index = candidate_index;
        traj.seed = seed;
        traj.raw_text = res.raw_text;
        if (states.size() > cfg.horizon_k + 1) {
            states.resize(cfg.horizon_k + 1);
            traj.truncated = true;
            log::warn("rollout chain longer than horizon " + std::to_string(cfg.horizon_k) +
                      "; truncated");
        }
        traj.states = std::move(states);
        traj.imagined_actions.push_back({seed.thought, seed.action});
        return traj;
    }

    // Baseline alternation of state and action predictions: k state calls
    // plus k-1 action calls per candidate. A mid-chain failure truncates the
    // rollout at the last valid state.
    RolloutTrajectory simulate_iterative(const RolloutSeed& seed, std::size_t candidate_index,
                                         const EvidenceSet& evidence, const RolloutConfig& cfg) {
        std::string evidence_block;
        if (cfg.grounded && !evidence.chunks.empty()) {
            evidence_block = "Relevant tutorials:\n" + prompts::render_evidence(evidence.texts()) + "\n";
        }
        RolloutTrajectory traj;
        traj.candidate_index = candidate_index;
        traj.seed = seed;
        traj.states.push_back({0, seed.observation.content});
        traj.imagined_actions.push_back({seed.thought, seed.action});

        std::string prefix = "STATE 0: " + seed.observation.content + "\nACTION 0: " +
                             seed.action.to_json().dump();
        Thought last_thought = seed.thought;
        ActionCommand last_action = seed.action;

        for (std::size_t depth = 1; depth <= cfg.horizon_k; ++depth) {
            // State prediction call.
            PromptRequest sreq;
            sreq.template_id = PromptTemplate::iterative_state;
            sreq.rendered_text = prompts::iterative_state(goal_, evidence_block + prefix, profile_);
            sreq.key_fields = rollout_key(seed, candidate_index, cfg.grounded);
            sreq.key_fields["depth"] = std::to_string(depth);
            sreq.phase = CallPhase::rollout;
            std::string state_text;
            try {
                state_text = gateway_.complete(sreq).raw_text;
            } catch (const BackendUnreachable&) {
                traj.truncated = true;
                break;
            }
            if (state_text.empty()) {
                traj.truncated = true;
                break;
            }
            traj.states.push_back({depth, state_text});
            prefix += "\nSTATE " + std::to_string(depth) + ": " + state_text;
            traj.raw_text = prefix;
            if (depth == cfg.horizon_k) break;

            // Action prediction call.
            PromptRequest areq;
            areq.template_id = PromptTemplate::iterative_action;
            areq.rendered_text = prompts::iterative_action(goal_, evidence_block + prefix, profile_);
            areq.key_fields = rollout_key(seed, candidate_index, cfg.grounded);
            areq.key_fields["depth"] = std::to_string(depth);
            areq.phase = CallPhase::rollout;
            LlmResponse ares;
            try {
                ares = gateway_.complete(areq);
            } catch (const BackendUnreachable&) {
                traj.truncated = true;
                break;
            }
            if (!ares.parsed) {
                traj.truncated = true;
                break;
            }
            auto parsed_action = parse_action((*ares.parsed)["action"], profile_);
            if (!parsed_action.ok()) {
                traj.truncated = true;
                break;
            }
            last_thought = Thought{(*ares.parsed)["thought"].get<std::string>()};
            last_action = std::move(parsed_action).value();
            traj.imagined_actions.push_back({last_thought, last_action});
            prefix += "\nACTION " + std::to_string(depth) + ": " + last_action.to_json().dump();
        }
        if (traj.states.size() < 2) {
            throw ChainParseError("iterative rollout produced no imagined state");
        }
        traj.raw_text = prefix;
        return traj;
    }

    RolloutTrajectory simulate(const RolloutSeed& seed, std::size_t candidate_index,
                               const EvidenceSet& evidence, const RolloutConfig& cfg) {
        return cfg.mode == RolloutMode::longcot
                   ? simulate_longcot(seed, candidate_index, evidence, cfg)
                   : simulate_iterative(seed, candidate_index, evidence, cfg);
    }

private:
    std::map<std::string, std::string> rollout_key(const RolloutSeed& seed,
                                                   std::size_t candidate_index, bool grounded) const {
        return {{"goal", goal_.id},
                {"obs", seed.observation.id},
                {"cand", std::to_string(candidate_index)},
                {"grounded", grounded ? "1" : "0"}};
    }

    Gateway& gateway_;
    Goal goal_;
    EnvironmentProfile profile_;
};

}  // namespace rwom
