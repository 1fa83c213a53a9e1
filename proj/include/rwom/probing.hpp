#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rwom/gateway.hpp"
#include "rwom/prompts.hpp"
#include "rwom/retrieval.hpp"
#include "rwom/similarity.hpp"
#include "rwom/trajectory.hpp"

namespace rwom {

enum class ProbeSide { A, B };

inline std::string to_string(ProbeSide s) { return s == ProbeSide::A ? "A" : "B"; }

// Lexical-similarity buckets; 0.8 and 0.9 fall in the upper bucket of each
// boundary pair.
enum class SimilarityBucket { low, mid, high };

inline SimilarityBucket bucket_for(double sim) {
    if (sim < 0.8) return SimilarityBucket::low;
    if (sim < 0.9) return SimilarityBucket::mid;
    return SimilarityBucket::high;
}

inline std::string to_string(SimilarityBucket b) {
    switch (b) {
        case SimilarityBucket::low: return "[0, 0.8)";
        case SimilarityBucket::mid: return "[0.8, 0.9)";
        case SimilarityBucket::high: return "[0.9, 1]";
    }
    return "?";
}

struct NextStateProbe {
    std::string probe_id;
    std::string goal_id;
    std::size_t step = 0;  // 1-based step index i, within [2, n-2]
    std::string context_observation;
    std::string context_thought;
    nlohmann::json context_action;
    std::string option_a;
    std::string option_b;
    ProbeSide gold = ProbeSide::A;
    double sim = 0.0;  // similarity between true next state and distractor
    SimilarityBucket bucket = SimilarityBucket::low;

    nlohmann::json to_json() const {
        return {{"probe_id", probe_id},       {"goal_id", goal_id},
                {"step", step},               {"context_observation", context_observation},
                {"context_thought", context_thought}, {"context_action", context_action},
                {"option_a", option_a},       {"option_b", option_b},
                {"gold", to_string(gold)},    {"similarity", sim},
                {"bucket", to_string(bucket)}};
    }

    static NextStateProbe from_json(const nlohmann::json& j) {
        NextStateProbe p;
        p.probe_id = j.at("probe_id").get<std::string>();
        p.goal_id = j.at("goal_id").get<std::string>();
        p.step = j.at("step").get<std::size_t>();
        p.context_observation = j.at("context_observation").get<std::string>();
        p.context_thought = j.at("context_thought").get<std::string>();
        p.context_action = j.at("context_action");
        p.option_a = j.at("option_a").get<std::string>();
        p.option_b = j.at("option_b").get<std::string>();
        p.gold = j.at("gold") == "A" ? ProbeSide::A : ProbeSide::B;
        p.sim = j.at("similarity").get<double>();
        p.bucket = bucket_for(p.sim);
        return p;
    }
};

struct PlanProbe {
    std::string probe_id;
    Goal goal;
    Observation initial_obs;
    TutorialChunk reference_chunk;  // the reference procedure
    std::string generated_plan;     // filled at evaluation time

    nlohmann::json to_json() const {
        return {{"probe_id", probe_id},
                {"goal", {{"id", goal.id}, {"text", goal.text}}},
                {"initial_observation", initial_obs.content},
                {"reference_chunk",
                 {{"chunk_id", reference_chunk.chunk_id},
                  {"source_uri", reference_chunk.source_uri},
                  {"text", reference_chunk.text}}}};
    }

    static PlanProbe from_json(const nlohmann::json& j) {
        PlanProbe p;
        p.probe_id = j.at("probe_id").get<std::string>();
        p.goal = {j.at("goal").at("id").get<std::string>(), j.at("goal").at("text").get<std::string>()};
        p.initial_obs = {"o1", 0, j.at("initial_observation").get<std::string>(),
                         ObservationSource::mock};
        p.reference_chunk = {j.at("reference_chunk").at("chunk_id").get<std::string>(),
                             j.at("reference_chunk").at("source_uri").get<std::string>(),
                             j.at("reference_chunk").at("text").get<std::string>(), 0};
        return p;
    }
};

struct MilestoneProbe {
    std::string probe_id;
    std::string goal_id;
    std::string goal_text;
    std::size_t start = 0;       // 1-based start index i
    std::size_t length = 3;      // l
    std::size_t interval = 2;    // h
    std::vector<std::string> seq_true;
    std::vector<std::string> seq_false;
    ProbeSide gold = ProbeSide::A;  // which presented side holds seq_true

    nlohmann::json to_json() const {
        return {{"probe_id", probe_id}, {"goal_id", goal_id},   {"goal_text", goal_text},
                {"start", start},       {"length", length},     {"interval", interval},
                {"seq_true", seq_true}, {"seq_false", seq_false}, {"gold", to_string(gold)}};
    }

    static MilestoneProbe from_json(const nlohmann::json& j) {
        MilestoneProbe p;
        p.probe_id = j.at("probe_id").get<std::string>();
        p.goal_id = j.at("goal_id").get<std::string>();
        p.goal_text = j.at("goal_text").get<std::string>();
        p.start = j.at("start").get<std::size_t>();
        p.length = j.at("length").get<std::size_t>();
        p.interval = j.at("interval").get<std::size_t>();
        p.seq_true = j.at("seq_true").get<std::vector<std::string>>();
        p.seq_false = j.at("seq_false").get<std::vector<std::string>>();
        p.gold = j.at("gold") == "A" ? ProbeSide::A : ProbeSide::B;
        return p;
    }
};

struct MiningStats {
    std::size_t skipped_too_short = 0;
    std::size_t skipped_no_pair = 0;
    std::size_t skipped_no_distractor = 0;
};

// The [2, n-2] step window, 1-based as in the trajectory record
// (g, (o_1, t_1, a_1), ...); 0-based storage index = i - 1.
inline bool in_probe_window(std::size_t i_one_based, std::size_t n) {
    return i_one_based >= 2 && i_one_based + 2 <= n;
}

// Mines next-state probes: for each eligible (o_i, a_i, o_{i+1}) triplet the
// distractor is the most lexically similar other observation from the same
// trajectory. Gold side assignment is seeded and reproducible.
inline std::vector<NextStateProbe> mine_next_state(const std::vector<Trajectory>& trajectories,
                                                   std::uint64_t seed, MiningStats* stats = nullptr) {
    std::vector<NextStateProbe> probes;
    std::mt19937_64 rng(seed);
    for (const auto& traj : trajectories) {
        const std::size_t n = traj.steps.size();
        if (n < 5) {
            if (stats) ++stats->skipped_too_short;
            continue;
        }
        for (std::size_t i = 2; i + 2 <= n; ++i) {  // 1-based i in [2, n-2]
            const std::size_t idx = i - 1;
            const std::string& true_next = traj.steps[idx + 1].observation.content;

            // Argmax over other observations; ties broken by smallest step
            // distance from i+1, then by lower index. Byte-identical
            // duplicates of the true next observation are excluded.
            std::optional<std::size_t> best;
            double best_sim = -1.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == idx + 1) continue;
                const std::string& cand = traj.steps[j].observation.content;
                if (cand == true_next) continue;
                double s = similarity(cand, true_next);
                bool better = false;
                if (s > best_sim) {
                    better = true;
                } else if (s == best_sim && best) {
                    auto dist = [&](std::size_t x) {
                        return x > idx + 1 ? x - (idx + 1) : (idx + 1) - x;
                    };
                    if (dist(j) < dist(*best) || (dist(j) == dist(*best) && j < *best)) better = true;
                }
                if (better) {
                    best = j;
                    best_sim = s;
                }
            }
            if (!best) {
                if (stats) ++stats->skipped_no_distractor;
                continue;
            }

            NextStateProbe p;
            p.probe_id = traj.goal.id + "#ns" + std::to_string(i);
            p.goal_id = traj.goal.id;
            p.step = i;
            p.context_observation = traj.steps[idx].observation.content;
            p.context_thought = traj.steps[idx].thought.text;
            p.context_action = traj.steps[idx].action.to_json();
            p.sim = best_sim;
            p.bucket = bucket_for(best_sim);
            const std::string& distractor = traj.steps[*best].observation.content;
            bool gold_is_a = (rng() & 1) == 0;
            p.gold = gold_is_a ? ProbeSide::A : ProbeSide::B;
            p.option_a = gold_is_a ? true_next : distractor;
            p.option_b = gold_is_a ? distractor : true_next;
            probes.push_back(std::move(p));
        }
    }
    return probes;
}

// Mines milestone probes from paired success/failure trajectories of the
// same goal: subsequences {o_i, o_{i+h}, ..., o_{i+(l-1)h}} with both
// endpoints inside [2, n-2] of their trajectory, for every i valid in both.
inline std::vector<MilestoneProbe> mine_milestones(const std::vector<Trajectory>& success_trajs,
                                                   const std::vector<Trajectory>& failure_trajs,
                                                   std::uint64_t seed, std::size_t l = 3,
                                                   std::size_t h = 2, MiningStats* stats = nullptr) {
    std::map<std::string, const Trajectory*> failures;
    for (const auto& t : failure_trajs) failures[t.goal.id] = &t;

    auto valid_start = [&](const Trajectory& t, std::size_t i) {
        const std::size_t n = t.steps.size();
        const std::size_t end = i + (l - 1) * h;
        return in_probe_window(i, n) && in_probe_window(end, n);
    };
    auto sample = [&](const Trajectory& t, std::size_t i) {
        std::vector<std::string> seq;
        for (std::size_t j = 0; j < l; ++j) {
            seq.push_back(t.steps[i - 1 + j * h].observation.content);
        }
        return seq;
    };

    std::vector<MilestoneProbe> probes;
    std::mt19937_64 rng(seed);
    for (const auto& succ : success_trajs) {
        auto it = failures.find(succ.goal.id);
        if (it == failures.end()) {
            if (stats) ++stats->skipped_no_pair;
            continue;
        }
        const Trajectory& fail = *it->second;
        bool any = false;
        std::size_t max_n = std::max(succ.steps.size(), fail.steps.size());
        for (std::size_t i = 2; i + 2 <= max_n; ++i) {
            if (!valid_start(succ, i) || !valid_start(fail, i)) continue;
            any = true;
            MilestoneProbe p;
            p.probe_id = succ.goal.id + "#ms" + std::to_string(i);
            p.goal_id = succ.goal.id;
            p.goal_text = succ.goal.text;
            p.start = i;
            p.length = l;
            p.interval = h;
            p.seq_true = sample(succ, i);
            p.seq_false = sample(fail, i);
            p.gold = (rng() & 1) == 0 ? ProbeSide::A : ProbeSide::B;
            probes.push_back(std::move(p));
        }
        if (!any && stats) ++stats->skipped_too_short;
    }
    return probes;
}

struct BucketReport {
    std::size_t total = 0;
    std::size_t correct = 0;

    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

struct NextStateReport {
    BucketReport overall;
    std::map<SimilarityBucket, BucketReport> buckets;
    std::size_t unparsed = 0;

    nlohmann::json to_json() const {
        nlohmann::json jb = nlohmann::json::object();
        for (const auto& [bucket, rep] : buckets) {
            jb[to_string(bucket)] = {{"total", rep.total},
                                     {"correct", rep.correct},
                                     {"accuracy", rep.accuracy()}};
        }
        return {{"overall",
                 {{"total", overall.total}, {"correct", overall.correct}, {"accuracy", overall.accuracy()}}},
                {"by_similarity", jb},
                {"unparsed", unparsed}};
    }
};

inline NextStateReport evaluate_next_state(const std::vector<NextStateProbe>& probes,
                                           Gateway& gateway) {
    NextStateReport report;
    for (const auto& p : probes) {
        PromptRequest req;
        req.template_id = PromptTemplate::next_state_probe;
        req.rendered_text = prompts::next_state_probe(p.context_observation, p.context_action.dump(),
                                                      p.option_a, p.option_b);
        req.key_fields = {{"probe", p.probe_id}};
        req.phase = CallPhase::probe;
        LlmResponse res = gateway.complete(req);

        ++report.overall.total;
        ++report.buckets[p.bucket].total;
        if (!res.parsed) {
            ++report.unparsed;  // counted incorrect
            continue;
        }
        ProbeSide choice = (*res.parsed)["choice"] == "A" ? ProbeSide::A : ProbeSide::B;
        if (choice == p.gold) {
            ++report.overall.correct;
            ++report.buckets[p.bucket].correct;
        }
    }
    return report;
}

struct PlanReport {
    std::size_t total = 0;
    std::size_t aligned = 0;
    std::size_t unparsed = 0;

    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(aligned) / total; }

    nlohmann::json to_json() const {
        return {{"total", total}, {"aligned", aligned}, {"accuracy", accuracy()}, {"unparsed", unparsed}};
    }
};

// Two-phase plan alignment: the generator drafts a plan from (goal, o_1)
// without tutorial access; the judge grades it against the reference chunk.
inline PlanReport evaluate_plan_alignment(std::vector<PlanProbe>& probes, Gateway& generator,
                                          Gateway& judge) {
    PlanReport report;
    for (auto& p : probes) {
        PromptRequest gen;
        gen.template_id = PromptTemplate::plan_gen;
        gen.rendered_text = prompts::plan_gen(p.goal, p.initial_obs);
        gen.key_fields = {{"probe", p.probe_id}};
        gen.phase = CallPhase::probe;
        p.generated_plan = generator.complete(gen).raw_text;

        PromptRequest jreq;
        jreq.template_id = PromptTemplate::plan_judge;
        jreq.rendered_text = prompts::plan_judge(p.generated_plan, p.reference_chunk.text);
        jreq.key_fields = {{"probe", p.probe_id}};
        jreq.phase = CallPhase::probe;
        LlmResponse res = judge.complete(jreq);

        ++report.total;
        if (!res.parsed) {
            ++report.unparsed;  // counted not-aligned
            continue;
        }
        if ((*res.parsed)["answer"] == "yes") ++report.aligned;
    }
    return report;
}

struct MilestoneReport {
    BucketReport overall;
    std::size_t unparsed = 0;

    nlohmann::json to_json() const {
        return {{"total", overall.total},
                {"correct", overall.correct},
                {"accuracy", overall.accuracy()},
                {"unparsed", unparsed}};
    }
};

inline MilestoneReport evaluate_milestones(const std::vector<MilestoneProbe>& probes,
                                           Gateway& gateway) {
    MilestoneReport report;
    for (const auto& p : probes) {
        auto render_seq = [](const std::vector<std::string>& seq) {
            std::string out;
            for (std::size_t i = 0; i < seq.size(); ++i) {
                out += "Transition " + std::to_string(i) + ": " + seq[i] + "\n";
            }
            return out;
        };
        const bool true_is_a = p.gold == ProbeSide::A;
        PromptRequest req;
        req.template_id = PromptTemplate::milestone_probe;
        req.rendered_text = prompts::milestone_probe(
            Goal{p.goal_id, p.goal_text}, render_seq(true_is_a ? p.seq_true : p.seq_false),
            render_seq(true_is_a ? p.seq_false : p.seq_true));
        req.key_fields = {{"probe", p.probe_id}};
        req.phase = CallPhase::probe;
        LlmResponse res = gateway.complete(req);

        ++report.overall.total;
        if (!res.parsed) {
            ++report.unparsed;
            continue;
        }
        ProbeSide answer = (*res.parsed)["answer"] == "A" ? ProbeSide::A : ProbeSide::B;
        if (answer == p.gold) ++report.overall.correct;
    }
    return report;
}

template <typename Probe>
inline std::string probes_to_jsonl(const std::vector<Probe>& probes) {
    std::string out;
    for (const auto& p : probes) {
        out += p.to_json().dump();
        out += '\n';
    }
    return out;
}

template <typename Probe>
inline std::vector<Probe> probes_from_jsonl(const std::string& data) {
    std::vector<Probe> probes;
    std::istringstream in(data);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        probes.push_back(Probe::from_json(nlohmann::json::parse(line)));
    }
    return probes;
}

// Aligned text table mirroring the accuracy-report columns.
inline std::string next_state_table(const NextStateReport& r) {
    std::ostringstream out;
    out << "bucket        total  correct  accuracy\n";
    for (SimilarityBucket b : {SimilarityBucket::low, SimilarityBucket::mid, SimilarityBucket::high}) {
        auto it = r.buckets.find(b);
        BucketReport rep = it == r.buckets.end() ? BucketReport{} : it->second;
        out << to_string(b);
        for (std::size_t i = to_string(b).size(); i < 14; ++i) out << ' ';
        out << rep.total << "      " << rep.correct << "        " << rep.accuracy() << "\n";
    }
    out << "overall       " << r.overall.total << "      " << r.overall.correct << "        "
        << r.overall.accuracy() << "\n";
    return out.str();
}

}  // namespace rwom
