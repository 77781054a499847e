#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dail/corpus.hpp"
#include "dail/embedding.hpp"

namespace dail::selection {

struct ExampleScore {
    double question_jaccard = 0.0;  // masked-question token overlap with the target
    double query_jaccard = 0.0;     // skeleton overlap with the strategy's reference query
    double cosine = 0.0;            // ranking similarity the strategy used
};

struct SelectionResult {
    std::vector<Instance> chosen;  // strategy priority order, best first
    std::vector<ExampleScore> per_example;
    std::string strategy;
    int k = 0;
};

enum class Strategy { Random, QuestionSimilarity, MaskedQuestionSimilarity, QuerySimilarity, Dail, UpperLimit };

enum class PreliminarySource { File, ZeroShotPass };

struct SelectionConfig {
    Strategy strategy = Strategy::Dail;
    int k = 5;
    double tau = 0.9;  // leaderboard profile uses 0.85
    std::uint64_t seed = 0;
    PreliminarySource preliminary_source = PreliminarySource::ZeroShotPass;
    std::filesystem::path preliminary_file;
};

Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy s);

// |a ∩ b| / |a ∪ b|; both empty → 1.0.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

// Tokens of a masked question, lowercased, mask placeholders removed:
// the "remaining tokens" whose overlap the similarity reports quote.
std::set<std::string> question_token_set(const std::string& masked_question);

// Uniform sample without replacement; deterministic per seed.
SelectionResult select_random(const CandidatePool& pool, int k, std::uint64_t seed);

// Post-hoc similarity columns for strategies that do not rank by them
// (random selection): masked-question overlap with the target and skeleton
// overlap with the reference query.
std::vector<ExampleScore> score_examples(const Instance& target,
                                         const std::vector<Instance>& chosen,
                                         const SchemaIndex& schemas,
                                         const std::optional<std::string>& reference_sql);

// Top-k nearest questions by embedding cosine; masked=true gives
// masked-question similarity. reference_sql, when present, fills the
// query_jaccard reporting column.
SelectionResult select_by_question(const CandidatePool& pool, const Instance& target, int k,
                                   bool masked, embedding::CachingEmbedder& embedder,
                                   const SchemaIndex& schemas,
                                   const std::optional<std::string>& reference_sql = std::nullopt);

// Greedy pick by binary keyword-vector cosine against the preliminary query,
// skipping exact-duplicate syntax vectors; remaining slots fill in pool order.
SelectionResult select_qrs(const CandidatePool& pool, const std::string& preliminary_sql, int k);

// Two-tier ordering: sort by masked-question cosine, then move candidates
// whose gold skeleton clears tau against the preliminary skeleton to the
// front (each tier keeps its cosine order), and take the top k.
SelectionResult select_dail(const CandidatePool& pool, const Instance& target,
                            const std::string& preliminary_sql, int k, double tau,
                            embedding::CachingEmbedder& embedder, const SchemaIndex& schemas);

// select_dail with the ground-truth query standing in for the preliminary.
SelectionResult select_upper_limit(const CandidatePool& pool, const Instance& target,
                                   const std::string& gold_sql, int k, double tau,
                                   embedding::CachingEmbedder& embedder,
                                   const SchemaIndex& schemas);

} // namespace dail::selection
