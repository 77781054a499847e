#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

namespace dail::embedding {

struct EmbeddingVector {
    std::vector<float> values;
    std::string model_id;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual EmbeddingVector embed(const std::string& text) = 0;
    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts);
    virtual std::string model_id() const = 0;
};

// Deterministic offline fallback: hashed bag of words, fixed dimension,
// L2-normalized. Empty text maps to the zero vector.
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    static constexpr std::size_t kDim = 256;
    EmbeddingVector embed(const std::string& text) override;
    std::string model_id() const override { return "hash-bow-256"; }

    // Exposed for tests: lowercase tokens over [a-z0-9_<>] runs.
    static std::vector<std::string> tokenize(const std::string& text);
    static std::uint64_t fnv1a64(const std::string& token);
};

struct HttpEmbeddingConfig {
    std::string endpoint;      // e.g. http://localhost:8080
    std::string path = "/v1/embeddings";
    std::string model;
    std::string api_key_env;   // name of the env var holding the token
    int max_retries = 5;
    int base_backoff_ms = 1000;
    int max_in_flight = 4;
};

// Sentence-transformer style HTTP provider:
//   request  {"model": ..., "input": ["...", ...]}
//   response {"data": [{"embedding": [...]}, ...]}
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(HttpEmbeddingConfig config);
    EmbeddingVector embed(const std::string& text) override;
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;
    std::string model_id() const override { return config_.model; }

private:
    HttpEmbeddingConfig config_;
    std::unique_ptr<std::counting_semaphore<64>> slots_;
};

// Memory + optional disk cache keyed by (model_id, content hash). Safe for
// concurrent use; identical keys always carry identical values, so races on
// the disk files are benign.
class CachingEmbedder {
public:
    explicit CachingEmbedder(std::shared_ptr<EmbeddingProvider> provider,
                             std::optional<std::filesystem::path> cache_dir = std::nullopt);

    EmbeddingVector embed(const std::string& text);
    std::string model_id() const { return provider_->model_id(); }
    std::size_t cache_hits() const { return hits_; }

private:
    std::shared_ptr<EmbeddingProvider> provider_;
    std::optional<std::filesystem::path> cache_dir_;
    std::unordered_map<std::string, EmbeddingVector> memory_;
    std::mutex mutex_;
    std::size_t hits_ = 0;

    std::filesystem::path file_for(const std::string& key) const;
};

// −1 when either vector has zero norm (sorts last). Throws Error on
// model/dimension mismatch.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct RankEntry {
    std::size_t index = 0;
    double similarity = 0.0;
    bool zero_norm = false;
};

// Descending similarity, ties broken by ascending candidate index. The
// result is a permutation of the candidate indices.
std::vector<RankEntry> rank_by_cosine(const EmbeddingVector& target,
                                      const std::vector<EmbeddingVector>& candidates);

} // namespace dail::embedding
