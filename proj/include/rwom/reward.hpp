#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "rwom/gateway.hpp"
#include "rwom/prompts.hpp"
#include "rwom/retrieval.hpp"
#include "rwom/rollout.hpp"
#include "rwom/trajectory.hpp"

namespace rwom {

struct RankingResult {
    std::vector<std::size_t> order;  // candidate indexes, best first
    std::string rationale;
    bool fallback_used = false;
};

struct SelectionRecord {
    Thought chosen_thought;
    ActionCommand chosen_action;
    RankingResult ranking;
    std::size_t step_index = 0;
};

struct RewardConfig {
    // Per-rollout character budget when embedding raw chain text in the
    // ranking prompt; tail-truncated.
    std::size_t rollout_char_budget = 8000;
    bool grounded = true;
};

namespace detail {

inline bool is_permutation_order(const std::vector<std::size_t>& order, std::size_t m) {
    if (order.size() != m) return false;
    std::vector<bool> seen(m, false);
    for (std::size_t x : order) {
        if (x >= m || seen[x]) return false;
        seen[x] = true;
    }
    return true;
}

}  // namespace detail

// Listwise relative reward estimation: one gateway call ranks all rollouts
// jointly. A singleton candidate set short-circuits without a call; any
// invalid or unparsed ranking falls back to policy confidence order.
class RewardRanker {
public:
    RewardRanker(Gateway& gateway, RewardConfig cfg = {}) : gateway_(gateway), cfg_(cfg) {}

    RankingResult rank_rollouts(const Goal& goal, const CandidateSet& candidates,
                                const std::vector<RolloutTrajectory>& rollouts,
                                const EvidenceSet& evidence, const Observation& obs) const {
        const std::size_t m = candidates.size();
        if (rollouts.size() != m) {
            throw RwomError("rollout count does not match candidate count");
        }
        RankingResult result;
        result.order.resize(m);
        std::iota(result.order.begin(), result.order.end(), 0);
        if (m <= 1) return result;

        PromptRequest req;
        req.template_id = PromptTemplate::reward_rank;
        std::vector<std::string> rollout_texts;
        rollout_texts.reserve(m);
        for (const auto& r : rollouts) {
            std::string text = r.raw_text;
            if (text.size() > cfg_.rollout_char_budget) {
                text.resize(cfg_.rollout_char_budget);
            }
            rollout_texts.push_back(std::move(text));
        }
        req.rendered_text = prompts::reward_rank(goal, rollout_texts,
                                                 cfg_.grounded ? evidence.texts()
                                                               : std::vector<std::string>{});
        req.key_fields = {{"goal", goal.id},
                          {"obs", obs.id},
                          {"grounded", cfg_.grounded ? "1" : "0"}};
        req.phase = CallPhase::reward;

        try {
            LlmResponse res = gateway_.complete(req);
            if (res.parsed) {
                std::vector<std::size_t> order;
                for (const auto& e : (*res.parsed)["ranking"]) {
                    if (e.get<long long>() < 0) {
                        order.clear();
                        break;
                    }
                    order.push_back(e.get<std::size_t>());
                }
                if (detail::is_permutation_order(order, m)) {
                    result.order = std::move(order);
                    result.rationale = (*res.parsed)["thought"].get<std::string>();
                    return result;
                }
                log::warn("ranking output is not a permutation; falling back to confidence order");
            } else {
                log::warn("ranking output unparsed; falling back to confidence order");
            }
        } catch (const BackendUnreachable& e) {
            log::warn(std::string("ranking unavailable (") + e.what() +
                      "); falling back to confidence order");
        }
        result.fallback_used = true;
        return result;
    }

    // Argmax over the ranking: always the first-ranked candidate.
    static SelectionRecord select(const CandidateSet& candidates, const RankingResult& ranking,
                                  std::size_t step_index) {
        if (ranking.order.empty() || ranking.order[0] >= candidates.size()) {
            throw RwomError("invalid ranking for selection");
        }
        const auto& [thought, action] = candidates.candidates[ranking.order[0]];
        return {thought, action, ranking, step_index};
    }

private:
    Gateway& gateway_;
    RewardConfig cfg_;
};

}  // namespace rwom
