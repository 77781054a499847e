#include "dail/selection.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>

#include "dail/error.hpp"
#include "dail/masking.hpp"
#include "dail/sqlkit.hpp"

namespace dail::selection {
namespace {

std::string masked_text(const Instance& inst, const SchemaIndex& schemas) {
    return masking::mask_with_schema(inst.question, schemas.at(inst.db_id)).masked;
}

// presence vector over the fixed keyword list
std::vector<int> syntax_vector(const std::string& sql) {
    const auto& keywords = sqlkit::syntax_keywords();
    std::vector<int> v(keywords.size(), 0);
    std::set<std::string> present;
    try {
        for (const auto& tok : sqlkit::lex(sql)) {
            if (tok.kind == sqlkit::TokenKind::Word && !tok.quoted) present.insert(tok.lower);
        }
    } catch (const ParseError&) {
        // fall back to whatever whitespace tokens look like keywords
        std::string word;
        for (char raw : sql + " ") {
            char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
                word += c;
            } else {
                if (!word.empty()) present.insert(word);
                word.clear();
            }
        }
    }
    for (std::size_t i = 0; i < keywords.size(); ++i) {
        if (present.count(keywords[i])) v[i] = 1;
    }
    return v;
}

double binary_cosine(const std::vector<int>& a, const std::vector<int>& b) {
    int dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] & b[i];
        na += a[i];
        nb += b[i];
    }
    if (na == 0 || nb == 0) return -1.0;
    return dot / std::sqrt(static_cast<double>(na) * nb);
}

} // namespace

Strategy parse_strategy(const std::string& name) {
    std::string n;
    for (char c : name) n += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (n == "random") return Strategy::Random;
    if (n == "qts" || n == "qts_s" || n == "question") return Strategy::QuestionSimilarity;
    if (n == "mqs" || n == "mqs_s" || n == "masked_question") return Strategy::MaskedQuestionSimilarity;
    if (n == "qrs" || n == "qrs_s" || n == "query") return Strategy::QuerySimilarity;
    if (n == "dail" || n == "dail_s") return Strategy::Dail;
    if (n == "upper_limit" || n == "upper-limit") return Strategy::UpperLimit;
    throw ConfigError("unknown selection strategy: " + name);
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::Random: return "random";
        case Strategy::QuestionSimilarity: return "qts";
        case Strategy::MaskedQuestionSimilarity: return "mqs";
        case Strategy::QuerySimilarity: return "qrs";
        case Strategy::Dail: return "dail";
        case Strategy::UpperLimit: return "upper_limit";
    }
    return "?";
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& x : a) {
        if (b.count(x)) ++inter;
    }
    std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::set<std::string> question_token_set(const std::string& masked_question) {
    std::set<std::string> out;
    std::string word;
    auto flush = [&] {
        if (!word.empty() && word != "<mask>" && word != "<unk>") {
            out.insert(word);
        }
        word.clear();
    };
    for (char raw : masked_question) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '<' || c == '>') {
            word += c;
        } else {
            flush();
        }
    }
    flush();
    return out;
}

std::vector<ExampleScore> score_examples(const Instance& target,
                                         const std::vector<Instance>& chosen,
                                         const SchemaIndex& schemas,
                                         const std::optional<std::string>& reference_sql) {
    std::set<std::string> target_tokens = question_token_set(masked_text(target, schemas));
    std::optional<std::set<std::string>> ref_skeleton;
    if (reference_sql) {
        ref_skeleton = sqlkit::extract_skeleton(*reference_sql).token_set;
    }
    std::vector<ExampleScore> scores;
    scores.reserve(chosen.size());
    for (const Instance& cand : chosen) {
        ExampleScore score;
        score.question_jaccard =
            jaccard(target_tokens, question_token_set(masked_text(cand, schemas)));
        if (ref_skeleton) {
            score.query_jaccard =
                jaccard(*ref_skeleton, sqlkit::extract_skeleton(cand.gold_sql).token_set);
        }
        scores.push_back(score);
    }
    return scores;
}

SelectionResult select_random(const CandidatePool& pool, int k, std::uint64_t seed) {
    SelectionResult result;
    result.strategy = "random";
    result.k = k;
    std::vector<std::size_t> indices(pool.instances.size());
    std::iota(indices.begin(), indices.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(indices.begin(), indices.end(), rng);
    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), indices.size());
    for (std::size_t i = 0; i < take; ++i) {
        result.chosen.push_back(pool.instances[indices[i]]);
        result.per_example.push_back({});
    }
    return result;
}

SelectionResult select_by_question(const CandidatePool& pool, const Instance& target, int k,
                                   bool masked, embedding::CachingEmbedder& embedder,
                                   const SchemaIndex& schemas,
                                   const std::optional<std::string>& reference_sql) {
    SelectionResult result;
    result.strategy = masked ? "mqs" : "qts";
    result.k = k;

    std::string target_masked = masked_text(target, schemas);
    std::string target_text = masked ? target_masked : target.question;
    embedding::EmbeddingVector target_vec = embedder.embed(target_text);

    std::vector<std::string> cand_masked(pool.instances.size());
    std::vector<embedding::EmbeddingVector> cand_vecs;
    cand_vecs.reserve(pool.instances.size());
    for (std::size_t i = 0; i < pool.instances.size(); ++i) {
        cand_masked[i] = masked_text(pool.instances[i], schemas);
        cand_vecs.push_back(embedder.embed(masked ? cand_masked[i] : pool.instances[i].question));
    }

    auto ranked = embedding::rank_by_cosine(target_vec, cand_vecs);
    std::set<std::string> target_tokens = question_token_set(target_masked);
    std::optional<std::set<std::string>> ref_skeleton;
    if (reference_sql) {
        ref_skeleton = sqlkit::extract_skeleton(*reference_sql).token_set;
    }

    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), ranked.size());
    for (std::size_t i = 0; i < take; ++i) {
        const auto& entry = ranked[i];
        const Instance& cand = pool.instances[entry.index];
        ExampleScore score;
        score.cosine = entry.similarity;
        score.question_jaccard = jaccard(target_tokens, question_token_set(cand_masked[entry.index]));
        if (ref_skeleton) {
            score.query_jaccard =
                jaccard(*ref_skeleton, sqlkit::extract_skeleton(cand.gold_sql).token_set);
        }
        result.chosen.push_back(cand);
        result.per_example.push_back(score);
    }
    return result;
}

SelectionResult select_qrs(const CandidatePool& pool, const std::string& preliminary_sql, int k) {
    SelectionResult result;
    result.strategy = "qrs";
    result.k = k;
    if (k <= 0 || pool.instances.empty()) return result;

    std::vector<int> target_vec = syntax_vector(preliminary_sql);
    std::vector<std::vector<int>> vectors(pool.instances.size());
    std::vector<double> similarity(pool.instances.size());
    for (std::size_t i = 0; i < pool.instances.size(); ++i) {
        vectors[i] = syntax_vector(pool.instances[i].gold_sql);
        similarity[i] = binary_cosine(target_vec, vectors[i]);
    }

    std::vector<std::size_t> order(pool.instances.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (similarity[a] != similarity[b]) return similarity[a] > similarity[b];
        return a < b;
    });

    std::set<std::string> prelim_skeleton = sqlkit::extract_skeleton(preliminary_sql).token_set;
    std::vector<bool> taken(pool.instances.size(), false);
    std::vector<std::vector<int>> chosen_vectors;
    auto push = [&](std::size_t idx) {
        taken[idx] = true;
        chosen_vectors.push_back(vectors[idx]);
        const Instance& cand = pool.instances[idx];
        ExampleScore score;
        score.cosine = similarity[idx];
        score.query_jaccard =
            jaccard(prelim_skeleton, sqlkit::extract_skeleton(cand.gold_sql).token_set);
        result.chosen.push_back(cand);
        result.per_example.push_back(score);
    };

    // similarity pass, skipping duplicate syntax vectors for diversity
    for (std::size_t idx : order) {
        if (static_cast<int>(result.chosen.size()) >= k) break;
        bool duplicate = false;
        for (const auto& v : chosen_vectors) {
            if (v == vectors[idx]) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) push(idx);
    }
    // fill remaining slots in pool order
    for (std::size_t idx = 0; idx < pool.instances.size(); ++idx) {
        if (static_cast<int>(result.chosen.size()) >= k) break;
        if (!taken[idx]) push(idx);
    }
    return result;
}

SelectionResult select_dail(const CandidatePool& pool, const Instance& target,
                            const std::string& preliminary_sql, int k, double tau,
                            embedding::CachingEmbedder& embedder, const SchemaIndex& schemas) {
    SelectionResult result;
    result.strategy = "dail";
    result.k = k;

    std::string target_masked = masked_text(target, schemas);
    embedding::EmbeddingVector target_vec = embedder.embed(target_masked);

    std::vector<std::string> cand_masked(pool.instances.size());
    std::vector<embedding::EmbeddingVector> cand_vecs;
    cand_vecs.reserve(pool.instances.size());
    for (std::size_t i = 0; i < pool.instances.size(); ++i) {
        cand_masked[i] = masked_text(pool.instances[i], schemas);
        cand_vecs.push_back(embedder.embed(cand_masked[i]));
    }
    auto ranked = embedding::rank_by_cosine(target_vec, cand_vecs);

    std::set<std::string> prelim_skeleton = sqlkit::extract_skeleton(preliminary_sql).token_set;
    std::vector<double> query_sim(pool.instances.size());
    for (std::size_t i = 0; i < pool.instances.size(); ++i) {
        query_sim[i] =
            jaccard(prelim_skeleton, sqlkit::extract_skeleton(pool.instances[i].gold_sql).token_set);
    }

    // two tiers, each preserving the cosine order
    std::vector<embedding::RankEntry> high, low;
    for (const auto& entry : ranked) {
        (query_sim[entry.index] >= tau ? high : low).push_back(entry);
    }
    high.insert(high.end(), low.begin(), low.end());

    std::set<std::string> target_tokens = question_token_set(target_masked);
    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), high.size());
    for (std::size_t i = 0; i < take; ++i) {
        const auto& entry = high[i];
        ExampleScore score;
        score.cosine = entry.similarity;
        score.question_jaccard = jaccard(target_tokens, question_token_set(cand_masked[entry.index]));
        score.query_jaccard = query_sim[entry.index];
        result.chosen.push_back(pool.instances[entry.index]);
        result.per_example.push_back(score);
    }
    return result;
}

SelectionResult select_upper_limit(const CandidatePool& pool, const Instance& target,
                                   const std::string& gold_sql, int k, double tau,
                                   embedding::CachingEmbedder& embedder,
                                   const SchemaIndex& schemas) {
    SelectionResult result = select_dail(pool, target, gold_sql, k, tau, embedder, schemas);
    result.strategy = "upper_limit";
    return result;
}

} // namespace dail::selection
