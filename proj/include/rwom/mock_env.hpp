#pragma once

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "rwom/actions.hpp"
#include "rwom/common.hpp"
#include "rwom/trajectory.hpp"

namespace rwom {

struct EnvState {
    std::string state_id;
    std::string observation_text;
    bool is_goal = false;
};

struct MockEnvSpec {
    std::vector<EnvState> states;
    // (state_id, canonical action key) -> successor state_id
    std::map<std::pair<std::string, std::string>, std::string> transitions;
    std::string initial;
    std::set<std::string> goal_states;

    void validate() const {
        std::set<std::string> ids;
        for (const auto& s : states) {
            if (!ids.insert(s.state_id).second) {
                throw InvalidSpec("duplicate state id: " + s.state_id);
            }
        }
        if (!ids.count(initial)) {
            throw InvalidSpec("initial state does not exist: " + initial);
        }
        for (const auto& [key, dst] : transitions) {
            if (!ids.count(key.first)) {
                throw InvalidSpec("transition from unknown state: " + key.first);
            }
            if (!ids.count(dst)) {
                throw InvalidSpec("transition to unknown state: " + dst);
            }
        }
        for (const auto& g : goal_states) {
            if (!ids.count(g)) {
                throw InvalidSpec("goal predicate names unknown state: " + g);
            }
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json jstates = nlohmann::json::array();
        for (const auto& s : states) {
            jstates.push_back({{"id", s.state_id},
                               {"observation", s.observation_text},
                               {"is_goal", s.is_goal}});
        }
        nlohmann::json jtrans = nlohmann::json::array();
        for (const auto& [key, dst] : transitions) {
            jtrans.push_back({{"from", key.first}, {"action_key", key.second}, {"to", dst}});
        }
        return {{"states", jstates},
                {"transitions", jtrans},
                {"initial", initial},
                {"goals", std::vector<std::string>(goal_states.begin(), goal_states.end())}};
    }

    static MockEnvSpec from_json(const nlohmann::json& j) {
        MockEnvSpec spec;
        for (const auto& s : j.at("states")) {
            spec.states.push_back({s.at("id").get<std::string>(),
                                   s.at("observation").get<std::string>(),
                                   s.value("is_goal", false)});
        }
        for (const auto& t : j.at("transitions")) {
            auto key = std::make_pair(t.at("from").get<std::string>(),
                                      t.at("action_key").get<std::string>());
            if (spec.transitions.count(key)) {
                throw InvalidSpec("duplicate transition for " + key.first + " / " + key.second);
            }
            spec.transitions[key] = t.at("to").get<std::string>();
        }
        spec.initial = j.at("initial").get<std::string>();
        for (const auto& g : j.at("goals")) {
            spec.goal_states.insert(g.get<std::string>());
        }
        for (auto& s : spec.states) {
            s.is_goal = spec.goal_states.count(s.state_id) > 0;
        }
        spec.validate();
        return spec;
    }

    static MockEnvSpec from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InvalidSpec("cannot open env spec: " + path);
        return from_json(nlohmann::json::parse(in));
    }
};

struct StepOutcome {
    Observation observation;
    bool done = false;
    bool success = false;
};

// Deterministic finite-state environment: a pure function of
// (state, canonical action key). Unknown actions self-loop with a notice,
// so fixtures can encode unproductive stuck paths.
class MockEnvironment {
public:
    explicit MockEnvironment(MockEnvSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        for (const auto& s : spec_.states) by_id_[s.state_id] = &s;
    }

    Observation reset() {
        current_ = spec_.initial;
        step_count_ = 0;
        return observe();
    }

    StepOutcome step(const ActionCommand& action) {
        const std::string key = action.canonical_key();
        bool moved = false;
        auto it = spec_.transitions.find({current_, key});
        if (it != spec_.transitions.end()) {
            current_ = it->second;
            moved = true;
        }
        ++step_count_;

        StepOutcome out;
        out.observation = observe();
        if (!moved && !action.terminal()) {
            out.observation.content += "\n[notice] The interface did not change.";
        }
        bool at_goal = spec_.goal_states.count(current_) > 0;
        if (action.terminal() || at_goal) {
            out.done = true;
            out.success = at_goal;
        }
        return out;
    }

    const std::string& current_state() const { return current_; }
    const MockEnvSpec& spec() const { return spec_; }

private:
    Observation observe() const {
        auto it = by_id_.find(current_);
        return {current_, step_count_, it->second->observation_text, ObservationSource::mock};
    }

    MockEnvSpec spec_;
    std::map<std::string, const EnvState*> by_id_;
    std::string current_;
    std::size_t step_count_ = 0;
};

}  // namespace rwom
