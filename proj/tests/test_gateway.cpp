#include <filesystem>
#include <fstream>
#include <memory>
#include <vector>

#include "doctest.h"
#include "rwom/gateway.hpp"

using namespace rwom;

namespace {

struct GatewayFixture {
    std::shared_ptr<ScriptedBackend> backend = std::make_shared<ScriptedBackend>();
    std::shared_ptr<CallLedger> ledger = std::make_shared<CallLedger>();
    Gateway gateway{backend, ledger};

    PromptRequest request(PromptTemplate t, std::map<std::string, std::string> keys,
                          CallPhase phase = CallPhase::propose) {
        PromptRequest req;
        req.template_id = t;
        req.rendered_text = "prompt text";
        req.key_fields = std::move(keys);
        req.phase = phase;
        return req;
    }
};

}  // namespace

TEST_CASE("scripted lookup returns the canned response, parsed") {
    GatewayFixture f;
    f.backend->add(PromptTemplate::reward_rank, {{"goal", "t1"}, {"obs", "s0"}},
                   R"({"ranking":[0,2,1],"thought":"middle rollout stalls"})");
    auto res = f.gateway.complete(f.request(PromptTemplate::reward_rank,
                                            {{"goal", "t1"}, {"obs", "s0"}}, CallPhase::reward));
    REQUIRE(res.parsed.has_value());
    CHECK((*res.parsed)["ranking"] == nlohmann::json({0, 2, 1}));
    CHECK(res.backend == BackendKind::scripted);
}

TEST_CASE("missing fixtures raise MissingFixture after recording the call") {
    GatewayFixture f;
    CHECK_THROWS_AS(
        f.gateway.complete(f.request(PromptTemplate::candidate_gen, {{"goal", "nope"}})),
        MissingFixture);
    CHECK(f.ledger->total() == 1);  // the attempt is still accounted
}

TEST_CASE("scripted backend is referentially transparent") {
    GatewayFixture f;
    f.backend->add(PromptTemplate::rerank, {{"goal", "q1"}}, R"({"reranked_indexes":[0,2,1]})");
    auto a = f.gateway.complete(f.request(PromptTemplate::rerank, {{"goal", "q1"}}));
    auto b = f.gateway.complete(f.request(PromptTemplate::rerank, {{"goal", "q1"}}));
    CHECK(a.raw_text == b.raw_text);
    CHECK(*a.parsed == *b.parsed);
    CHECK(a.call_id < b.call_id);  // call ids stay monotonic
}

TEST_CASE("ledger increments exactly once per complete, including failed parses") {
    GatewayFixture f;
    f.backend->add(PromptTemplate::reward_rank, {{"k", "bad"}}, "not json at all");
    std::vector<std::string> warnings;
    log::set_sink([&](std::string_view m) { warnings.emplace_back(m); });
    auto res = f.gateway.complete(
        f.request(PromptTemplate::reward_rank, {{"k", "bad"}}, CallPhase::reward));
    log::set_sink(nullptr);
    CHECK_FALSE(res.parsed.has_value());
    CHECK(res.raw_text == "not json at all");
    CHECK(f.ledger->count(CallPhase::reward) == 1);
    CHECK(f.ledger->total() == 1);
    CHECK_FALSE(warnings.empty());
}

TEST_CASE("ledger total equals the sum of per-phase counters") {
    CallLedger ledger;
    ledger.record(CallPhase::propose);
    ledger.record(CallPhase::rollout);
    ledger.record(CallPhase::rollout);
    ledger.record(CallPhase::probe);
    auto j = ledger.to_json();
    std::size_t sum = 0;
    for (const auto& [_, v] : j["counters"].items()) sum += v.get<std::size_t>();
    CHECK(sum == j["total"].get<std::size_t>());
    CHECK(ledger.total() == 4);
    CHECK(ledger.count(CallPhase::rollout) == 2);
    CHECK(ledger.count(CallPhase::rerank) == 0);
    CHECK(j["counters"].size() == 6);  // every phase always present
}

TEST_CASE("free-text templates bypass schema parsing") {
    GatewayFixture f;
    f.backend->add(PromptTemplate::longcot_rollout, {{"c", "1"}}, "STATE 0: here\nSTATE 1: there");
    auto res = f.gateway.complete(f.request(PromptTemplate::longcot_rollout, {{"c", "1"}},
                                            CallPhase::rollout));
    CHECK_FALSE(res.parsed.has_value());
    CHECK(res.raw_text == "STATE 0: here\nSTATE 1: there");
}

TEST_CASE("extract_json tolerates surrounding prose and fences") {
    auto j = schema::extract_json("Sure, here you go:\n```json\n{\"answer\":\"yes\","
                                  "\"rationale\":\"ok {nested}\"}\n```\nThanks!");
    REQUIRE(j.has_value());
    CHECK((*j)["answer"] == "yes");
    CHECK_FALSE(schema::extract_json("no braces here").has_value());
    CHECK_FALSE(schema::extract_json("{broken").has_value());
}

TEST_CASE("response schemas validate per template") {
    using nlohmann::json;
    CHECK(schema::validate(PromptTemplate::candidate_gen,
                           json{{"observation", "s"},
                                {"action_candidates",
                                 json::array({{{"thought_and_action", "t"},
                                               {"action_code", json::object()}}})}}));
    CHECK_FALSE(schema::validate(PromptTemplate::candidate_gen, json{{"observation", "s"}}));
    CHECK(schema::validate(PromptTemplate::reward_rank,
                           json{{"ranking", {1, 0}}, {"thought", "x"}}));
    CHECK_FALSE(schema::validate(PromptTemplate::reward_rank,
                                 json{{"ranking", {"a"}}, {"thought", "x"}}));
    CHECK(schema::validate(PromptTemplate::rerank, json{{"reranked_indexes", {0, 2, 1}}}));
    CHECK(schema::validate(PromptTemplate::next_state_probe,
                           json{{"rationale", "r"}, {"choice", "A"}}));
    CHECK_FALSE(schema::validate(PromptTemplate::next_state_probe,
                                 json{{"rationale", "r"}, {"choice", "C"}}));
    CHECK(schema::validate(PromptTemplate::plan_judge,
                           json{{"rationale", "r"}, {"answer", "yes"}}));
    CHECK_FALSE(schema::validate(PromptTemplate::plan_judge,
                                 json{{"rationale", "r"}, {"answer", "maybe"}}));
    CHECK(schema::validate(PromptTemplate::milestone_probe,
                           json{{"rationale", "r"}, {"answer", "B"}}));
    CHECK(schema::validate(PromptTemplate::iterative_action,
                           json{{"thought", "t"}, {"action", json::object()}}));
}

TEST_CASE("fixture files round-trip through to_json and from_file") {
    GatewayFixture f;
    f.backend->add(PromptTemplate::candidate_gen, {{"goal", "t1"}, {"obs", "s0"}}, "payload");
    auto tmp = std::filesystem::temp_directory_path() / "rwom_fixture_roundtrip.json";
    {
        std::ofstream out(tmp);
        out << f.backend->to_json().dump();
    }
    ScriptedBackend loaded = ScriptedBackend::from_file(tmp.string());
    PromptRequest req;
    req.template_id = PromptTemplate::candidate_gen;
    req.key_fields = {{"goal", "t1"}, {"obs", "s0"}};
    req.rendered_text = "x";
    CHECK(loaded.generate(req) == "payload");
    std::filesystem::remove(tmp);
}
