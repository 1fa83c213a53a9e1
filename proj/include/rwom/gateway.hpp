#pragma once

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rwom/common.hpp"

namespace rwom {

enum class PromptTemplate {
    candidate_gen,
    longcot_rollout,
    reward_rank,
    query_rewrite,
    rerank,
    next_state_probe,
    plan_gen,
    plan_judge,
    milestone_probe,
    iterative_state,
    iterative_action,
};

inline std::string to_string(PromptTemplate t) {
    switch (t) {
        case PromptTemplate::candidate_gen: return "candidate_gen";
        case PromptTemplate::longcot_rollout: return "longcot_rollout";
        case PromptTemplate::reward_rank: return "reward_rank";
        case PromptTemplate::query_rewrite: return "query_rewrite";
        case PromptTemplate::rerank: return "rerank";
        case PromptTemplate::next_state_probe: return "next_state_probe";
        case PromptTemplate::plan_gen: return "plan_gen";
        case PromptTemplate::plan_judge: return "plan_judge";
        case PromptTemplate::milestone_probe: return "milestone_probe";
        case PromptTemplate::iterative_state: return "iterative_state";
        case PromptTemplate::iterative_action: return "iterative_action";
    }
    return "?";
}

// Accounting phases, one bucket per pipeline stage.
enum class CallPhase { propose, rollout, reward, rewrite, rerank, probe };

inline std::string to_string(CallPhase p) {
    switch (p) {
        case CallPhase::propose: return "propose";
        case CallPhase::rollout: return "rollout";
        case CallPhase::reward: return "reward";
        case CallPhase::rewrite: return "rewrite";
        case CallPhase::rerank: return "rerank";
        case CallPhase::probe: return "probe";
    }
    return "?";
}

inline const std::vector<CallPhase>& all_phases() {
    static const std::vector<CallPhase> v = {CallPhase::propose, CallPhase::rollout, CallPhase::reward,
                                             CallPhase::rewrite, CallPhase::rerank, CallPhase::probe};
    return v;
}

// Per-phase LLM call counters. Internally synchronized; total always equals
// the sum of the per-phase counters.
class CallLedger {
public:
    void record(CallPhase phase) {
        std::lock_guard<std::mutex> lock(mu_);
        ++counters_[phase];
        ++total_;
    }

    std::size_t count(CallPhase phase) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = counters_.find(phase);
        return it == counters_.end() ? 0 : it->second;
    }

    std::size_t total() const {
        std::lock_guard<std::mutex> lock(mu_);
        return total_;
    }

    nlohmann::json to_json() const {
        std::lock_guard<std::mutex> lock(mu_);
        nlohmann::json counters = nlohmann::json::object();
        for (CallPhase p : all_phases()) {
            auto it = counters_.find(p);
            counters[to_string(p)] = it == counters_.end() ? 0 : it->second;
        }
        return {{"counters", counters}, {"total", total_}};
    }

private:
    mutable std::mutex mu_;
    std::map<CallPhase, std::size_t> counters_;
    std::size_t total_ = 0;
};

struct PromptRequest {
    PromptTemplate template_id = PromptTemplate::candidate_gen;
    std::string rendered_text;
    std::size_t max_output_tokens = 2048;
    double temperature = 0.0;
    // Declared identity of this call; the scripted backend keys fixtures on
    // (template_id, key_fields) so cosmetic template edits don't invalidate
    // recorded fixtures.
    std::map<std::string, std::string> key_fields;
    CallPhase phase = CallPhase::propose;
};

enum class BackendKind { remote, scripted };

struct LlmResponse {
    std::string raw_text;
    std::optional<nlohmann::json> parsed;
    std::uint64_t call_id = 0;
    BackendKind backend = BackendKind::scripted;
};

// Canonical fixture key: template name + sorted key=value fields.
inline std::string fixture_key(PromptTemplate t, const std::map<std::string, std::string>& fields) {
    std::string key = to_string(t);
    for (const auto& [k, v] : fields) {
        key += "|" + k + "=" + v;
    }
    return key;
}

namespace schema {

inline bool is_string(const nlohmann::json& j, const char* field) {
    return j.contains(field) && j[field].is_string();
}

inline bool is_int_array(const nlohmann::json& j, const char* field) {
    if (!j.contains(field) || !j[field].is_array()) return false;
    for (const auto& e : j[field]) {
        if (!e.is_number_integer()) return false;
    }
    return true;
}

// Response schema per template. Free-text templates (rollouts, rewrite,
// plan generation, iterative state) have no JSON schema.
inline bool has_json_schema(PromptTemplate t) {
    switch (t) {
        case PromptTemplate::longcot_rollout:
        case PromptTemplate::query_rewrite:
        case PromptTemplate::plan_gen:
        case PromptTemplate::iterative_state:
            return false;
        default:
            return true;
    }
}

inline bool validate(PromptTemplate t, const nlohmann::json& j) {
    if (!j.is_object()) return false;
    switch (t) {
        case PromptTemplate::candidate_gen: {
            if (!is_string(j, "observation") || !j.contains("action_candidates") ||
                !j["action_candidates"].is_array()) {
                return false;
            }
            for (const auto& c : j["action_candidates"]) {
                if (!c.is_object() || !is_string(c, "thought_and_action") || !c.contains("action_code")) {
                    return false;
                }
            }
            return true;
        }
        case PromptTemplate::reward_rank:
            return is_int_array(j, "ranking") && is_string(j, "thought");
        case PromptTemplate::rerank:
            return is_int_array(j, "reranked_indexes");
        case PromptTemplate::next_state_probe:
            return is_string(j, "rationale") && is_string(j, "choice") &&
                   (j["choice"] == "A" || j["choice"] == "B");
        case PromptTemplate::plan_judge:
            return is_string(j, "rationale") && is_string(j, "answer") &&
                   (j["answer"] == "yes" || j["answer"] == "no");
        case PromptTemplate::milestone_probe:
            return is_string(j, "rationale") && is_string(j, "answer") &&
                   (j["answer"] == "A" || j["answer"] == "B");
        case PromptTemplate::iterative_action:
            return is_string(j, "thought") && j.contains("action") && j["action"].is_object();
        default:
            return false;
    }
}

// Extracts the first JSON object from the raw completion text, tolerating
// surrounding prose or markdown fences.
inline std::optional<nlohmann::json> extract_json(const std::string& raw) {
    std::size_t start = raw.find('{');
    while (start != std::string::npos) {
        int depth = 0;
        bool in_string = false;
        bool escape = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            char c = raw[i];
            if (escape) {
                escape = false;
            } else if (in_string) {
                if (c == '\\') escape = true;
                else if (c == '"') in_string = false;
            } else if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    auto parsed = nlohmann::json::parse(raw.substr(start, i - start + 1), nullptr, false);
                    if (!parsed.is_discarded()) return parsed;
                    break;
                }
            }
        }
        start = raw.find('{', start + 1);
    }
    return std::nullopt;
}

}  // namespace schema

// Raw completion provider. Implementations must be safe for concurrent calls.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual BackendKind kind() const = 0;
    virtual std::string generate(const PromptRequest& req) = 0;
};

// Deterministic table-lookup backend: a pure function of
// (template_id, key_fields). Read-only after load.
class ScriptedBackend : public LlmBackend {
public:
    ScriptedBackend() = default;

    explicit ScriptedBackend(std::map<std::string, std::string> fixtures)
        : fixtures_(std::move(fixtures)) {}

    static ScriptedBackend from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw RwomError("cannot open fixture file: " + path);
        nlohmann::json j = nlohmann::json::parse(in);
        std::map<std::string, std::string> fixtures;
        for (const auto& [k, v] : j.items()) {
            fixtures[k] = v.get<std::string>();
        }
        return ScriptedBackend(std::move(fixtures));
    }

    void add(PromptTemplate t, const std::map<std::string, std::string>& fields, std::string response) {
        fixtures_[fixture_key(t, fields)] = std::move(response);
    }

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [k, v] : fixtures_) j[k] = v;
        return j;
    }

    BackendKind kind() const override { return BackendKind::scripted; }

    std::string generate(const PromptRequest& req) override {
        auto it = fixtures_.find(fixture_key(req.template_id, req.key_fields));
        if (it == fixtures_.end()) {
            throw MissingFixture("no fixture for key: " + fixture_key(req.template_id, req.key_fields));
        }
        return it->second;
    }

private:
    std::map<std::string, std::string> fixtures_;
};

struct RemoteBackendConfig {
    std::string base_url;        // e.g. http://host:port
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key_env = "RWOM_API_KEY";
};

// JSON-over-HTTP chat-completion backend. Declared here; defined in
// remote_backend.hpp to keep httplib out of the default include set.
class RemoteBackend;

// Uniform completion interface: renders through a backend, validates the
// template's response schema, retries malformed JSON with a corrective
// suffix, and accounts every call in the ledger.
class Gateway {
public:
    Gateway(std::shared_ptr<LlmBackend> backend, std::shared_ptr<CallLedger> ledger)
        : backend_(std::move(backend)), ledger_(std::move(ledger)) {}

    static constexpr int kSchemaRetries = 2;

    LlmResponse complete(const PromptRequest& req) {
        if (!backend_) throw BackendUnreachable("no backend configured");
        ledger_->record(req.phase);
        const std::uint64_t call_id = next_call_id_.fetch_add(1) + 1;

        PromptRequest attempt = req;
        std::string raw;
        for (int i = 0; i <= kSchemaRetries; ++i) {
            raw = backend_->generate(attempt);
            if (!schema::has_json_schema(req.template_id)) {
                return {raw, std::nullopt, call_id, backend_->kind()};
            }
            auto parsed = schema::extract_json(raw);
            if (parsed && schema::validate(req.template_id, *parsed)) {
                return {raw, parsed, call_id, backend_->kind()};
            }
            // The scripted backend is referentially transparent, so retrying
            // it cannot change the outcome.
            if (backend_->kind() == BackendKind::scripted) break;
            attempt.rendered_text = req.rendered_text + "\n\nOutput valid JSON only.";
        }
        log::warn("schema parse exhausted for template " + to_string(req.template_id));
        return {raw, std::nullopt, call_id, backend_->kind()};
    }

    CallLedger& ledger() { return *ledger_; }
    const CallLedger& ledger() const { return *ledger_; }

private:
    std::shared_ptr<LlmBackend> backend_;
    std::shared_ptr<CallLedger> ledger_;
    std::atomic<std::uint64_t> next_call_id_{0};
};

}  // namespace rwom
