#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rwom/common.hpp"

namespace rwom {

enum class EnvironmentProfile { webarena, osworld, mock };

inline std::string to_string(EnvironmentProfile p) {
    switch (p) {
        case EnvironmentProfile::webarena: return "webarena";
        case EnvironmentProfile::osworld: return "osworld";
        case EnvironmentProfile::mock: return "mock";
    }
    return "?";
}

inline std::optional<EnvironmentProfile> profile_from_string(std::string_view s) {
    if (s == "webarena") return EnvironmentProfile::webarena;
    if (s == "osworld") return EnvironmentProfile::osworld;
    if (s == "mock") return EnvironmentProfile::mock;
    return std::nullopt;
}

// One entry of the action registry: fixed parameter schema for an action type
// within one environment profile.
struct ActionSchema {
    std::string action_type;
    std::vector<std::string> required_params;
    std::vector<std::string> optional_params;
    bool terminal = false;
    // Parameters whose values identify a transition in the mock environment;
    // free-text parameters (typed content, answers) are not significant.
    std::vector<std::string> significant_params;
};

// The registry is fixed at compile time: 12 WebArena actions, 13 OSWorld
// actions, and a mock profile mirroring WebArena plus `done`.
inline const std::vector<ActionSchema>& webarena_actions() {
    static const std::vector<ActionSchema> v = {
        {"click", {"id"}, {}, false, {"id"}},
        {"type", {"id", "text"}, {"press_enter"}, false, {"id"}},
        {"hover", {"id"}, {}, false, {"id"}},
        {"press", {"key"}, {}, false, {"key"}},
        {"scroll", {"direction"}, {}, false, {"direction"}},
        {"new_tab", {}, {}, false, {}},
        {"tab_focus", {"tab_index"}, {}, false, {"tab_index"}},
        {"close_tab", {}, {}, false, {}},
        {"goto", {"url"}, {}, false, {"url"}},
        {"go_back", {}, {}, false, {}},
        {"go_forward", {}, {}, false, {}},
        {"stop", {}, {"answer"}, true, {}},
    };
    return v;
}

inline const std::vector<ActionSchema>& osworld_actions() {
    static const std::vector<ActionSchema> v = {
        {"click", {"element"}, {}, false, {"element"}},
        {"drag_and_drop", {"source", "target"}, {}, false, {"source", "target"}},
        {"highlight_text_span", {"start_phrase", "end_phrase"}, {}, false, {"start_phrase", "end_phrase"}},
        {"hold_and_press", {"hold_keys", "press_keys"}, {}, false, {"hold_keys", "press_keys"}},
        {"hotkey", {"keys"}, {}, false, {"keys"}},
        {"open", {"name"}, {}, false, {"name"}},
        {"scroll", {"element", "direction"}, {}, false, {"element", "direction"}},
        {"set_cell_values", {"values"}, {"sheet"}, false, {}},
        {"switch_applications", {"app"}, {}, false, {"app"}},
        {"type", {"element", "text"}, {}, false, {"element"}},
        {"wait", {}, {"seconds"}, false, {}},
        {"done", {}, {"answer"}, true, {}},
        {"fail", {}, {"answer"}, true, {}},
    };
    return v;
}

inline const std::vector<ActionSchema>& mock_actions() {
    static const std::vector<ActionSchema> v = [] {
        std::vector<ActionSchema> m = webarena_actions();
        m.push_back({"done", {}, {"answer"}, true, {}});
        return m;
    }();
    return v;
}

inline const std::vector<ActionSchema>& actions_for(EnvironmentProfile p) {
    switch (p) {
        case EnvironmentProfile::webarena: return webarena_actions();
        case EnvironmentProfile::osworld: return osworld_actions();
        case EnvironmentProfile::mock: return mock_actions();
    }
    return webarena_actions();
}

inline const ActionSchema* find_schema(EnvironmentProfile p, std::string_view action_type) {
    for (const auto& s : actions_for(p)) {
        if (s.action_type == action_type) return &s;
    }
    return nullptr;
}

// A typed, validated action. Immutable after construction through parse_action.
struct ActionCommand {
    std::string action_type;
    std::map<std::string, std::string> parameters;
    EnvironmentProfile environment_profile = EnvironmentProfile::mock;

    bool terminal() const {
        const ActionSchema* s = find_schema(environment_profile, action_type);
        return s != nullptr && s->terminal;
    }

    bool operator==(const ActionCommand& other) const = default;

    nlohmann::json to_json() const {
        nlohmann::json params = nlohmann::json::object();
        for (const auto& [k, v] : parameters) params[k] = v;
        return {{"action_type", action_type},
                {"parameters", params},
                {"profile", to_string(environment_profile)}};
    }

    // Transition key for the mock environment: action_type plus sorted
    // significant parameters.
    std::string canonical_key() const {
        const ActionSchema* s = find_schema(environment_profile, action_type);
        std::string key = action_type;
        if (s == nullptr) return key;
        std::vector<std::string> sig = s->significant_params;
        std::sort(sig.begin(), sig.end());
        for (const auto& name : sig) {
            auto it = parameters.find(name);
            if (it != parameters.end()) key += "|" + name + "=" + it->second;
        }
        return key;
    }
};

enum class ParseErrorKind { unknown_action_type, missing_parameter, unexpected_parameter, wrong_profile, malformed };

struct ParseError {
    ParseErrorKind kind;
    std::string detail;
};

inline std::string to_string(ParseErrorKind k) {
    switch (k) {
        case ParseErrorKind::unknown_action_type: return "UnknownActionType";
        case ParseErrorKind::missing_parameter: return "MissingParameter";
        case ParseErrorKind::unexpected_parameter: return "UnexpectedParameter";
        case ParseErrorKind::wrong_profile: return "WrongProfile";
        case ParseErrorKind::malformed: return "Malformed";
    }
    return "?";
}

using ActionParseResult = Result<ActionCommand, ParseError>;

// Validates a raw {"action_type":..., "parameters":{...}} object against the
// profile's registry. Unknown extras are rejected, not ignored.
inline ActionParseResult parse_action(const nlohmann::json& raw, EnvironmentProfile profile) {
    if (!raw.is_object() || !raw.contains("action_type") || !raw["action_type"].is_string()) {
        return ParseError{ParseErrorKind::malformed, "action_type field missing or not a string"};
    }
    const std::string type = raw["action_type"].get<std::string>();
    const ActionSchema* schema = find_schema(profile, type);
    if (schema == nullptr) {
        return ParseError{ParseErrorKind::unknown_action_type,
                          type + " is not in the " + to_string(profile) + " action set"};
    }

    std::map<std::string, std::string> params;
    if (raw.contains("parameters")) {
        if (!raw["parameters"].is_object()) {
            return ParseError{ParseErrorKind::malformed, "parameters is not an object"};
        }
        for (const auto& [k, v] : raw["parameters"].items()) {
            if (v.is_string()) {
                params[k] = v.get<std::string>();
            } else {
                params[k] = v.dump();
            }
        }
    }

    for (const auto& name : schema->required_params) {
        if (!params.count(name)) {
            return ParseError{ParseErrorKind::missing_parameter, name};
        }
    }
    for (const auto& [name, _] : params) {
        bool known = std::count(schema->required_params.begin(), schema->required_params.end(), name) ||
                     std::count(schema->optional_params.begin(), schema->optional_params.end(), name);
        if (!known) {
            return ParseError{ParseErrorKind::unexpected_parameter, name};
        }
    }
    return ActionCommand{type, std::move(params), profile};
}

}  // namespace rwom
