#pragma once

#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rwom/actions.hpp"
#include "rwom/common.hpp"

namespace rwom {

struct Goal {
    std::string id;
    std::string text;  // natural-language objective

    bool operator==(const Goal&) const = default;
};

enum class ObservationSource { live, mock, imagined };

inline std::string to_string(ObservationSource s) {
    switch (s) {
        case ObservationSource::live: return "live";
        case ObservationSource::mock: return "mock";
        case ObservationSource::imagined: return "imagined";
    }
    return "?";
}

inline ObservationSource observation_source_from_string(std::string_view s) {
    if (s == "live") return ObservationSource::live;
    if (s == "imagined") return ObservationSource::imagined;
    return ObservationSource::mock;
}

struct Observation {
    std::string id;
    std::size_t step_index = 0;
    std::string content;  // accessibility tree or state description
    ObservationSource source = ObservationSource::mock;

    bool operator==(const Observation&) const = default;
};

struct Thought {
    std::string text;  // may be empty for vanilla baselines

    bool operator==(const Thought&) const = default;
};

struct Step {
    Observation observation;
    Thought thought;
    ActionCommand action;

    bool operator==(const Step&) const = default;
};

enum class TrajectoryOutcome { success, failure, unknown };

inline std::string to_string(TrajectoryOutcome o) {
    switch (o) {
        case TrajectoryOutcome::success: return "success";
        case TrajectoryOutcome::failure: return "failure";
        case TrajectoryOutcome::unknown: return "unknown";
    }
    return "?";
}

inline TrajectoryOutcome outcome_from_string(std::string_view s) {
    if (s == "success") return TrajectoryOutcome::success;
    if (s == "failure") return TrajectoryOutcome::failure;
    return TrajectoryOutcome::unknown;
}

struct Trajectory {
    Goal goal;
    std::vector<Step> steps;
    TrajectoryOutcome outcome = TrajectoryOutcome::unknown;

    bool operator==(const Trajectory&) const = default;

    // Step indices 0..n-1 contiguous; at most one terminal action and only at
    // the final step.
    void validate() const {
        for (std::size_t i = 0; i < steps.size(); ++i) {
            if (steps[i].observation.step_index != i) {
                throw InvalidSpec("trajectory step index not contiguous at position " + std::to_string(i));
            }
            if (steps[i].action.terminal() && i + 1 != steps.size()) {
                throw InvalidSpec("terminal action before the final step at position " + std::to_string(i));
            }
        }
    }
};

// Ordered candidate (thought, action) pairs, most confident first.
struct CandidateSet {
    std::vector<std::pair<Thought, ActionCommand>> candidates;

    std::size_t size() const { return candidates.size(); }
};

namespace detail {

inline nlohmann::json step_to_json(const Step& s) {
    return {{"step_index", s.observation.step_index},
            {"observation",
             {{"id", s.observation.id},
              {"content", s.observation.content},
              {"source", to_string(s.observation.source)}}},
            {"thought", s.thought.text},
            {"action", s.action.to_json()}};
}

inline Step step_from_json(const nlohmann::json& j) {
    Step s;
    s.observation.step_index = j.at("step_index").get<std::size_t>();
    const auto& obs = j.at("observation");
    s.observation.id = obs.at("id").get<std::string>();
    s.observation.content = obs.at("content").get<std::string>();
    s.observation.source = observation_source_from_string(obs.at("source").get<std::string>());
    s.thought.text = j.at("thought").get<std::string>();

    const auto& act = j.at("action");
    auto profile = profile_from_string(act.at("profile").get<std::string>());
    if (!profile) {
        throw InvalidSpec("unknown environment profile in serialized action");
    }
    auto parsed = parse_action(act, *profile);
    if (!parsed.ok()) {
        throw InvalidSpec("invalid serialized action: " + to_string(parsed.error().kind) + " " +
                          parsed.error().detail);
    }
    s.action = std::move(parsed).value();
    return s;
}

}  // namespace detail

// JSONL: line 1 = {"goal":..., "outcome":...}; one step per following line.
// Byte-stable for identical inputs (sorted object keys, \n separators).
inline std::string serialize_trajectory(const Trajectory& t) {
    t.validate();
    std::string out;
    nlohmann::json header = {{"goal", {{"id", t.goal.id}, {"text", t.goal.text}}},
                             {"outcome", to_string(t.outcome)}};
    out += header.dump();
    out += '\n';
    for (const auto& step : t.steps) {
        out += detail::step_to_json(step).dump();
        out += '\n';
    }
    return out;
}

inline Trajectory deserialize_trajectory(const std::string& data) {
    std::istringstream in(data);
    std::string line;
    if (!std::getline(in, line)) {
        throw InvalidSpec("empty trajectory stream");
    }
    nlohmann::json header = nlohmann::json::parse(line);
    Trajectory t;
    t.goal.id = header.at("goal").at("id").get<std::string>();
    t.goal.text = header.at("goal").at("text").get<std::string>();
    t.outcome = outcome_from_string(header.at("outcome").get<std::string>());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.steps.push_back(detail::step_from_json(nlohmann::json::parse(line)));
    }
    t.validate();
    return t;
}

}  // namespace rwom
