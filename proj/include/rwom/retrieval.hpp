#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rwom/common.hpp"
#include "rwom/gateway.hpp"
#include "rwom/prompts.hpp"
#include "rwom/trajectory.hpp"

namespace rwom {

struct TutorialChunk {
    std::string chunk_id;
    std::string source_uri;
    std::string text;
    std::size_t token_estimate = 0;

    bool operator==(const TutorialChunk&) const = default;
};

struct EmbeddingVector {
    std::vector<double> values;
    double norm = 0.0;
};

struct RetrievalQuery {
    std::string original;
    std::string rewritten;
};

struct EvidenceProvenance {
    double cosine_score = 0.0;
    std::size_t pre_rerank_index = 0;
    std::size_t post_rerank_rank = 0;
};

// Reranked tutorial chunks grounding rollouts and reward ranking.
struct EvidenceSet {
    std::vector<TutorialChunk> chunks;
    std::vector<EvidenceProvenance> provenance;  // parallel to chunks

    std::vector<std::string> texts() const {
        std::vector<std::string> out;
        out.reserve(chunks.size());
        for (const auto& c : chunks) out.push_back(c.text);
        return out;
    }
};

struct ChunkingConfig {
    std::size_t window = 4096;   // W, characters
    std::size_t overlap = 256;   // V, characters
};

struct EmptyCorpus : RwomError {
    using RwomError::RwomError;
};

struct IndexEmpty : RwomError {
    using RwomError::RwomError;
};

namespace detail {

// Chunk boundary rule: take the window [pos, pos+W); if a paragraph break
// ("\n\n") ends inside the second half of the window, cut there instead of
// mid-paragraph. The next chunk starts overlap characters before the cut.
inline std::vector<std::pair<std::size_t, std::size_t>> chunk_spans(const std::string& text,
                                                                    const ChunkingConfig& cfg) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    const std::size_t n = text.size();
    std::size_t pos = 0;
    while (pos < n) {
        std::size_t end = pos + cfg.window;
        if (end >= n) {
            spans.emplace_back(pos, n);
            break;
        }
        std::size_t cut = end;
        std::size_t search_from = pos + cfg.window / 2;
        if (end >= 2) {
            std::size_t brk = text.rfind("\n\n", end - 2);
            if (brk != std::string::npos && brk + 2 <= end && brk + 2 > search_from && brk + 2 > pos) {
                cut = brk + 2;
            }
        }
        spans.emplace_back(pos, cut);
        std::size_t next = cut > cfg.overlap ? cut - cfg.overlap : 0;
        if (next <= pos) next = cut;  // guarantee forward progress
        pos = next;
    }
    return spans;
}

inline std::size_t estimate_tokens(const std::string& text) {
    return (text.size() + 3) / 4;
}

}  // namespace detail

// Deterministic chunking of a directory of .md/.txt files. Files are visited
// in lexicographic order of their relative paths; chunk ids are
// "<relative-path>#<ordinal>" and stable across runs.
inline std::vector<TutorialChunk> ingest(const std::filesystem::path& corpus_dir,
                                         const ChunkingConfig& cfg = {}) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(corpus_dir)) {
        throw EmptyCorpus("not a directory: " + corpus_dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(corpus_dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        if (ext == ".md" || ext == ".txt") files.push_back(entry.path());
    }
    std::vector<std::string> rels;
    rels.reserve(files.size());
    for (const auto& f : files) rels.push_back(fs::relative(f, corpus_dir).generic_string());
    std::sort(rels.begin(), rels.end());

    std::vector<TutorialChunk> chunks;
    for (const auto& rel : rels) {
        std::ifstream in(corpus_dir / rel, std::ios::binary);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (text.empty()) continue;
        auto spans = detail::chunk_spans(text, cfg);
        for (std::size_t i = 0; i < spans.size(); ++i) {
            std::string piece = text.substr(spans[i].first, spans[i].second - spans[i].first);
            chunks.push_back({rel + "#" + std::to_string(i), rel, piece, detail::estimate_tokens(piece)});
        }
    }
    if (chunks.empty()) {
        throw EmptyCorpus("no chunks produced from " + corpus_dir.string());
    }
    return chunks;
}

// Deterministic hashing embedder for offline tests: word and word-bigram
// FNV hashes scattered into a fixed-dimension signed count vector, then
// unit-normalized. No model weights, no network.
class HashingEmbedder {
public:
    explicit HashingEmbedder(std::size_t dim = 256) : dim_(dim) {}

    std::size_t dim() const { return dim_; }

    EmbeddingVector embed(const std::string& text) const {
        if (text.empty()) throw RwomError("cannot embed empty text");
        std::vector<double> v(dim_, 0.0);
        std::vector<std::string> tokens = tokenize(text);
        std::string prev;
        for (const auto& tok : tokens) {
            scatter(v, tok);
            if (!prev.empty()) scatter(v, prev + " " + tok);
            prev = tok;
        }
        double norm_sq = 0.0;
        for (double x : v) norm_sq += x * x;
        if (norm_sq == 0.0) {
            v[0] = 1.0;
            norm_sq = 1.0;
        }
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& x : v) x *= inv;
        return {std::move(v), 1.0f};
    }

private:
    static std::vector<std::string> tokenize(const std::string& text) {
        std::vector<std::string> tokens;
        std::string cur;
        for (char c : text) {
            if (std::isalnum(static_cast<unsigned char>(c))) {
                cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            } else if (!cur.empty()) {
                tokens.push_back(std::move(cur));
                cur.clear();
            }
        }
        if (!cur.empty()) tokens.push_back(std::move(cur));
        return tokens;
    }

    void scatter(std::vector<double>& v, const std::string& feature) const {
        std::uint64_t h = fnv1a(feature);
        std::size_t idx = h % dim_;
        double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
        v[idx] += sign;
    }

    std::size_t dim_;
};

inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
    }
    return dot;
}

struct SearchHit {
    std::size_t index = 0;  // position in the index's chunk table
    double score = 0.0;
};

// Exact flat cosine index. Build is exclusive; searches after build are
// read-only and may run concurrently.
class FlatIndex {
public:
    FlatIndex() = default;

    FlatIndex(std::vector<TutorialChunk> chunks, const HashingEmbedder& embedder)
        : dim_(embedder.dim()), chunks_(std::move(chunks)) {
        vectors_.reserve(chunks_.size());
        for (const auto& c : chunks_) vectors_.push_back(embedder.embed(c.text));
    }

    std::size_t size() const { return chunks_.size(); }
    std::size_t dim() const { return dim_; }
    const std::vector<TutorialChunk>& chunks() const { return chunks_; }
    const EmbeddingVector& vector(std::size_t i) const { return vectors_[i]; }

    // Exact top-k, descending score, ties broken by ascending chunk_id.
    std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k) const {
        if (chunks_.empty()) throw IndexEmpty("search on empty index");
        std::vector<SearchHit> hits(chunks_.size());
        for (std::size_t i = 0; i < chunks_.size(); ++i) {
            hits[i] = {i, cosine(query, vectors_[i])};
        }
        auto better = [this](const SearchHit& a, const SearchHit& b) {
            if (a.score != b.score) return a.score > b.score;
            return chunks_[a.index].chunk_id < chunks_[b.index].chunk_id;
        };
        k = std::min(k, hits.size());
        std::partial_sort(hits.begin(), hits.begin() + k, hits.end(), better);
        hits.resize(k);
        return hits;
    }

    // Binary layout: magic, version, dim, count, then per chunk the id /
    // source / text strings, token estimate, and packed double vector.
    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw RwomError("cannot write index: " + path.string());
        const char magic[8] = {'R', 'W', 'O', 'M', 'I', 'D', 'X', '1'};
        out.write(magic, 8);
        write_u64(out, dim_);
        write_u64(out, chunks_.size());
        for (std::size_t i = 0; i < chunks_.size(); ++i) {
            write_string(out, chunks_[i].chunk_id);
            write_string(out, chunks_[i].source_uri);
            write_string(out, chunks_[i].text);
            write_u64(out, chunks_[i].token_estimate);
            out.write(reinterpret_cast<const char*>(vectors_[i].values.data()),
                      static_cast<std::streamsize>(dim_ * sizeof(double)));
        }
    }

    static FlatIndex load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw RwomError("cannot open index: " + path.string());
        char magic[8];
        in.read(magic, 8);
        if (std::memcmp(magic, "RWOMIDX1", 8) != 0) {
            throw RwomError("bad index header in " + path.string());
        }
        FlatIndex index;
        index.dim_ = read_u64(in);
        std::size_t count = read_u64(in);
        index.chunks_.resize(count);
        index.vectors_.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            index.chunks_[i].chunk_id = read_string(in);
            index.chunks_[i].source_uri = read_string(in);
            index.chunks_[i].text = read_string(in);
            index.chunks_[i].token_estimate = read_u64(in);
            index.vectors_[i].values.resize(index.dim_);
            in.read(reinterpret_cast<char*>(index.vectors_[i].values.data()),
                    static_cast<std::streamsize>(index.dim_ * sizeof(double)));
            index.vectors_[i].norm = 1.0;
        }
        if (!in) throw RwomError("truncated index file: " + path.string());
        return index;
    }

private:
    static void write_u64(std::ostream& out, std::uint64_t v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    static std::uint64_t read_u64(std::istream& in) {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    }
    static void write_string(std::ostream& out, const std::string& s) {
        write_u64(out, s.size());
        out.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    static std::string read_string(std::istream& in) {
        std::string s(read_u64(in), '\0');
        in.read(s.data(), static_cast<std::streamsize>(s.size()));
        return s;
    }

    std::size_t dim_ = 0;
    std::vector<TutorialChunk> chunks_;
    std::vector<EmbeddingVector> vectors_;
};

struct RetrievalConfig {
    std::size_t top_k = 5;
    bool rewrite_enabled = true;
    // Rerank pool is wider than the final evidence set, truncated after
    // reranking.
    std::size_t pool_factor = 2;
};

// Grounding pipeline: rewrite -> embed -> exact top-k -> listwise rerank.
class Retriever {
public:
    Retriever(const FlatIndex& index, const HashingEmbedder& embedder, Gateway& gateway,
              RetrievalConfig cfg = {})
        : index_(index), embedder_(embedder), gateway_(gateway), cfg_(cfg) {}

    RetrievalQuery rewrite_query(const Goal& goal) const {
        if (!cfg_.rewrite_enabled) return {goal.text, goal.text};
        PromptRequest req;
        req.template_id = PromptTemplate::query_rewrite;
        req.rendered_text = prompts::query_rewrite(goal);
        req.key_fields = {{"goal", goal.id}};
        req.phase = CallPhase::rewrite;
        try {
            LlmResponse res = gateway_.complete(req);
            std::string text = trim(res.raw_text);
            if (text.empty()) return {goal.text, goal.text};
            return {goal.text, text};
        } catch (const BackendUnreachable&) {
            return {goal.text, goal.text};  // degrade to passthrough
        }
    }

    // Listwise rerank of candidate chunks; degrades to the incoming cosine
    // order when the response is not a valid permutation.
    EvidenceSet rerank(const std::vector<TutorialChunk>& candidates,
                       const std::vector<double>& scores, const RetrievalQuery& query,
                       const std::string& goal_id) const {
        EvidenceSet out;
        if (candidates.empty()) return out;
        std::vector<std::size_t> order(candidates.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

        if (candidates.size() > 1) {
            PromptRequest req;
            req.template_id = PromptTemplate::rerank;
            std::vector<std::string> docs;
            docs.reserve(candidates.size());
            for (const auto& c : candidates) docs.push_back(c.text);
            req.rendered_text = prompts::rerank(query.rewritten, docs);
            req.key_fields = {{"goal", goal_id}};
            req.phase = CallPhase::rerank;
            try {
                LlmResponse res = gateway_.complete(req);
                if (res.parsed) {
                    std::vector<std::size_t> proposed;
                    for (const auto& e : (*res.parsed)["reranked_indexes"]) {
                        proposed.push_back(e.get<std::size_t>());
                    }
                    if (is_permutation_of(proposed, candidates.size())) {
                        order = proposed;
                    } else {
                        log::warn("rerank output is not a permutation; keeping cosine order");
                    }
                } else {
                    log::warn("rerank output unparsed; keeping cosine order");
                }
            } catch (const BackendUnreachable& e) {
                log::warn(std::string("rerank unavailable (") + e.what() + "); keeping cosine order");
            }
        }

        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            std::size_t idx = order[rank];
            out.chunks.push_back(candidates[idx]);
            out.provenance.push_back({scores[idx], idx, rank});
        }
        return out;
    }

    // Evidence retrieval for one task: rewrite, embed, exact search over a
    // 2x pool, rerank, truncate to top_k.
    EvidenceSet ground(const Goal& goal) const {
        RetrievalQuery query = rewrite_query(goal);
        EmbeddingVector qvec = embedder_.embed(query.rewritten);
        std::size_t pool = std::min(cfg_.pool_factor * cfg_.top_k, index_.size());
        auto hits = index_.search(qvec, pool);

        std::vector<TutorialChunk> candidates;
        std::vector<double> scores;
        for (const auto& h : hits) {
            candidates.push_back(index_.chunks()[h.index]);
            scores.push_back(h.score);
        }
        EvidenceSet evidence = rerank(candidates, scores, query, goal.id);
        if (evidence.chunks.size() > cfg_.top_k) {
            evidence.chunks.resize(cfg_.top_k);
            evidence.provenance.resize(cfg_.top_k);
        }
        return evidence;
    }

    const RetrievalConfig& config() const { return cfg_; }

private:
    static bool is_permutation_of(const std::vector<std::size_t>& v, std::size_t n) {
        if (v.size() != n) return false;
        std::vector<bool> seen(n, false);
        for (std::size_t x : v) {
            if (x >= n || seen[x]) return false;
            seen[x] = true;
        }
        return true;
    }

    static std::string trim(const std::string& s) {
        std::size_t b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        std::size_t e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    const FlatIndex& index_;
    const HashingEmbedder& embedder_;
    Gateway& gateway_;
    RetrievalConfig cfg_;
};

}  // namespace rwom
