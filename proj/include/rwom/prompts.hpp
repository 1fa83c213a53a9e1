#pragma once

#include <string>
#include <vector>

#include "rwom/actions.hpp"
#include "rwom/trajectory.hpp"

namespace rwom::prompts {

inline std::string action_space_definition(EnvironmentProfile profile) {
    std::string out = "# Action space (" + to_string(profile) + ")\n";
    for (const auto& schema : actions_for(profile)) {
        out += "- " + schema.action_type;
        if (!schema.required_params.empty()) {
            out += "(";
            for (std::size_t i = 0; i < schema.required_params.size(); ++i) {
                if (i) out += ", ";
                out += schema.required_params[i];
            }
            out += ")";
        }
        if (schema.terminal) out += " [terminal]";
        out += "\n";
    }
    return out;
}

inline std::string render_history(const std::vector<Step>& history) {
    std::string out;
    for (const auto& step : history) {
        out += "Step " + std::to_string(step.observation.step_index) + ":\n";
        out += "  observation: " + step.observation.content + "\n";
        if (!step.thought.text.empty()) out += "  thought: " + step.thought.text + "\n";
        out += "  action: " + step.action.to_json().dump() + "\n";
    }
    return out;
}

inline std::string render_evidence(const std::vector<std::string>& evidence_texts) {
    std::string out;
    for (std::size_t i = 0; i < evidence_texts.size(); ++i) {
        out += "[Tutorial " + std::to_string(i) + "]\n" + evidence_texts[i] + "\n\n";
    }
    return out;
}

inline std::string candidate_gen(const Goal& goal, const Observation& obs,
                                 const std::vector<Step>& history, std::size_t branching_factor,
                                 EnvironmentProfile profile,
                                 const std::vector<std::string>& evidence_texts = {}) {
    std::string p =
        "You are a reasoner that analyzes the current state, previous actions, and task "
        "progress to determine the next required action.\n\n";
    p += action_space_definition(profile);
    p += "\nRules for success:\n"
         "1. Output a single action per candidate; do not bundle multiple intents into one step.\n"
         "2. Only issue actions that are valid for the current observation.\n"
         "3. Strictly avoid repeating the same action if the interface state is unchanged.\n\n";
    if (!evidence_texts.empty()) {
        p += "Relevant tutorials:\n" + render_evidence(evidence_texts);
    }
    p += "Task objective: " + goal.text + "\n\n";
    if (!history.empty()) {
        p += "Interaction history:\n" + render_history(history) + "\n";
    }
    p += "Current observation:\n" + obs.content + "\n\n";
    p += "Respond with JSON: {\"observation\": \"description of current state and changes\", "
         "\"action_candidates\": [{\"thought_and_action\": \"...\", \"action_code\": "
         "{\"action_type\": \"...\", \"parameters\": {...}}}]}.\n";
    p += "Include " + std::to_string(branching_factor) +
         " candidates, ordered by confidence (most confident first).\n";
    return p;
}

inline std::string longcot_rollout(const Goal& goal, const Observation& obs, const Thought& thought,
                                   const ActionCommand& action, std::size_t horizon_k,
                                   EnvironmentProfile profile,
                                   const std::vector<std::string>& evidence_texts) {
    std::string p =
        "You are a world-model assistant with extensive knowledge of desktop and web UIs. "
        "Given the previous observations, the task objective, and a candidate action, "
        "simulate the future and describe the plausible future states.\n\n";
    p += action_space_definition(profile);
    if (!evidence_texts.empty()) {
        p += "\nTutorial usage guideline:\n"
             "1. Use tutorials to identify efficient workflow patterns that should be predicted "
             "as likely outcomes.\n"
             "2. Reference the tutorial when the current situation matches its standard "
             "operations; otherwise rely on internal world knowledge.\n\n";
        p += render_evidence(evidence_texts);
    }
    p += "\nTask objective: " + goal.text + "\n";
    p += "Current observation:\n" + obs.content + "\n";
    p += "Candidate thought: " + thought.text + "\n";
    p += "Candidate action: " + action.to_json().dump() + "\n\n";
    p += "Output format: produce an ordered chain from STATE 0 (current) up to STATE n "
         "(1 <= n <= " + std::to_string(horizon_k) + "); you may stop early if no further "
         "prediction is useful.\n";
    return p;
}

inline std::string reward_rank(const Goal& goal, const std::vector<std::string>& rollout_texts,
                               const std::vector<std::string>& evidence_texts) {
    std::string p =
        "You are an agent that evaluates actions by considering previous observations and the "
        "potential outcomes of these actions.\n\n";
    if (!evidence_texts.empty()) {
        p += "Tutorial grounding guidance: prioritize action sequences that follow the standard "
             "operations in the tutorials and have captured the milestones and conditions to "
             "make more meaningful progress toward the task objective.\n\n";
        p += render_evidence(evidence_texts);
    }
    p += "Task objective: " + goal.text + "\n\n";
    for (std::size_t i = 0; i < rollout_texts.size(); ++i) {
        p += "Candidate " + std::to_string(i) + " simulated rollout:\n" + rollout_texts[i] + "\n\n";
    }
    p += "Output JSON: {\"ranking\": [indexes of the action candidates, most promising first], "
         "\"thought\": \"your rationale for the ranking result\"}\n";
    return p;
}

inline std::string query_rewrite(const Goal& goal) {
    return "You are an AI assistant that rewrites an original query into a comprehensive, "
           "searchable query that is easier to retrieve answers for from documents.\n"
           "Rules:\n"
           "1. Organize the original query to be well-structured and clear with details.\n"
           "2. Generalize personal details: replace specific names, file names, and locations "
           "with general descriptions.\n\n"
           "Original query: " + goal.text + "\n";
}

inline std::string rerank(const std::string& query, const std::vector<std::string>& documents) {
    std::string p =
        "Your task is to re-rank a list of documents based on their relevance to a given task. "
        "Carefully analyze the task and each numbered document, then order the documents from "
        "most relevant to least relevant.\n\n";
    p += "Task: " + query + "\n\n";
    for (std::size_t i = 0; i < documents.size(); ++i) {
        p += "[" + std::to_string(i) + "] " + documents[i] + "\n\n";
    }
    p += "Output a single JSON object: {\"reranked_indexes\": [...]}\n";
    return p;
}

inline std::string next_state_probe(const std::string& previous_state, const std::string& current_action,
                                    const std::string& state_a, const std::string& state_b) {
    return "Given the previous state of the page: " + previous_state +
           " and the current action: " + current_action +
           ", please reason about the next state.\n"
           "The next state can be one of the following:\n"
           "A: " + state_a + "\nB: " + state_b + "\n"
           "The choice should be one of the following: A, B. "
           "Output JSON: {\"rationale\": \"...\", \"choice\": \"...\"}\n";
}

inline std::string plan_gen(const Goal& goal, const Observation& initial_obs) {
    return "Given the task objective and the initial observation, produce a numbered multi-step "
           "execution plan that accomplishes the task.\n\n"
           "Task objective: " + goal.text + "\n"
           "Initial observation:\n" + initial_obs.content + "\n";
}

inline std::string plan_judge(const std::string& generated_plan, const std::string& reference_procedure) {
    return "You are a grounding validation assistant that verifies whether tutorial-referenced "
           "operations in a plan are accurately grounded in the provided documentation.\n\n"
           "Evaluation criteria:\n"
           "1. Element text accuracy: exact text matches between plan and tutorial for "
           "referenced elements.\n"
           "2. Location consistency: location indicators align with tutorial descriptions.\n"
           "3. Operation sequence: prerequisites and dependencies match tutorial methodology.\n"
           "4. Interaction method: specified actions align with tutorial instructions.\n"
           "5. Attribute precision: element types, properties, and characteristics match "
           "tutorial specifications.\n\n"
           "Evaluation principles:\n"
           "1. Accept: plan steps that extend beyond tutorial scope (additional operations are "
           "allowed).\n"
           "2. Reject: any tutorial-referenced operation with misaligned text, location, or "
           "method.\n\n"
           "Plan:\n" + generated_plan + "\n\nTutorial:\n" + reference_procedure + "\n\n"
           "Output JSON: {\"rationale\": \"Your rationale of your evaluation\", \"answer\": \"yes/no\"}\n";
}

inline std::string milestone_probe(const Goal& goal, const std::string& segment_a,
                                   const std::string& segment_b) {
    return "You are evaluating automation trajectories to identify which one is more likely to "
           "succeed in completing the given task.\n\n"
           "The following two trajectory segments come from different attempts at the same "
           "task. Determine which segment demonstrates better progress toward completing the "
           "task objective.\n\n"
           "Task objective: " + goal.text + "\n\n"
           "Segment A:\n" + segment_a + "\n\nSegment B:\n" + segment_b + "\n\n"
           "Output JSON: {\"answer\": \"A/B\", \"rationale\": \"...\"}\n";
}

inline std::string iterative_state(const Goal& goal, const std::string& imagined_prefix,
                                   EnvironmentProfile profile) {
    return "You are a world-model assistant. Given the task objective and the imagined "
           "interaction prefix below, predict the next state of the " + to_string(profile) +
           " environment. Describe only the resulting state.\n\n"
           "Task objective: " + goal.text + "\n\nImagined prefix:\n" + imagined_prefix + "\n";
}

inline std::string iterative_action(const Goal& goal, const std::string& imagined_prefix,
                                    EnvironmentProfile profile) {
    return "You are a world-model assistant. Given the task objective and the imagined "
           "interaction prefix below, predict the next thought and action the agent would "
           "take.\n\n" + action_space_definition(profile) +
           "\nTask objective: " + goal.text + "\n\nImagined prefix:\n" + imagined_prefix +
           "\n\nOutput JSON: {\"thought\": \"...\", \"action\": {\"action_type\": \"...\", "
           "\"parameters\": {...}}}\n";
}

}  // namespace rwom::prompts
