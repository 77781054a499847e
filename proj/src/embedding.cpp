#include "dail/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "dail/error.hpp"
#include "dail/hash.hpp"
#include "dail/simd.hpp"
#include "httplib.h"
#include "json.hpp"

namespace dail::embedding {

using nlohmann::json;

std::vector<EmbeddingVector> EmbeddingProvider::embed_batch(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

std::vector<std::string> HashEmbeddingProvider::tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char raw : text) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
        bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '<' || c == '>';
        if (keep) {
            current += c;
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::uint64_t HashEmbeddingProvider::fnv1a64(const std::string& token) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : token) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

EmbeddingVector HashEmbeddingProvider::embed(const std::string& text) {
    EmbeddingVector v;
    v.model_id = model_id();
    v.values.assign(kDim, 0.0f);
    for (const std::string& token : tokenize(text)) {
        v.values[fnv1a64(token) % kDim] += 1.0f;
    }
    float norm = std::sqrt(simd::squared_norm(v.values));
    if (norm > 0.0f) {
        for (float& x : v.values) x /= norm;
    }
    return v;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEmbeddingConfig config)
    : config_(std::move(config)) {
    int slots = std::clamp(config_.max_in_flight, 1, 64);
    slots_ = std::make_unique<std::counting_semaphore<64>>(slots);
}

EmbeddingVector HttpEmbeddingProvider::embed(const std::string& text) {
    return embed_batch({text}).front();
}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) {
    slots_->acquire();
    struct Release {
        std::counting_semaphore<64>* s;
        ~Release() { s->release(); }
    } release{slots_.get()};

    json body = {{"model", config_.model}, {"input", texts}};
    std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(config_.base_backoff_ms) * (1LL << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        httplib::Client client(config_.endpoint);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!config_.api_key_env.empty()) {
            if (const char* key = std::getenv(config_.api_key_env.c_str())) {
                headers.emplace("Authorization", std::string("Bearer ") + key);
            }
        }
        auto res = client.Post(config_.path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw BackendError("embedding endpoint returned HTTP " + std::to_string(res->status) +
                               ": " + res->body);
        }
        try {
            json parsed = json::parse(res->body);
            std::vector<EmbeddingVector> out;
            for (const auto& item : parsed.at("data")) {
                EmbeddingVector v;
                v.model_id = config_.model;
                for (const auto& x : item.at("embedding")) {
                    v.values.push_back(x.get<float>());
                }
                out.push_back(std::move(v));
            }
            if (out.size() != texts.size()) {
                throw BackendError("embedding endpoint returned wrong item count");
            }
            return out;
        } catch (const json::exception& e) {
            throw BackendError(std::string("malformed embedding response: ") + e.what());
        }
    }
    throw BackendError("embedding request failed after retries: " + last_error);
}

CachingEmbedder::CachingEmbedder(std::shared_ptr<EmbeddingProvider> provider,
                                 std::optional<std::filesystem::path> cache_dir)
    : provider_(std::move(provider)), cache_dir_(std::move(cache_dir)) {
    if (cache_dir_) {
        std::filesystem::create_directories(*cache_dir_);
    }
}

std::filesystem::path CachingEmbedder::file_for(const std::string& key) const {
    return *cache_dir_ / (key + ".json");
}

EmbeddingVector CachingEmbedder::embed(const std::string& text) {
    std::string key = sha256_hex(provider_->model_id() + "\x1f" + text);
    {
        std::lock_guard lock(mutex_);
        auto it = memory_.find(key);
        if (it != memory_.end()) {
            ++hits_;
            return it->second;
        }
    }
    if (cache_dir_) {
        std::ifstream in(file_for(key));
        if (in) {
            try {
                json j;
                in >> j;
                EmbeddingVector v;
                v.model_id = j.at("model").get<std::string>();
                v.values = j.at("values").get<std::vector<float>>();
                std::lock_guard lock(mutex_);
                ++hits_;
                memory_.emplace(key, v);
                return v;
            } catch (const json::exception&) {
                // corrupt cache entry: fall through and recompute
            }
        }
    }
    EmbeddingVector v = provider_->embed(text);
    if (cache_dir_) {
        json j = {{"model", v.model_id}, {"values", v.values}};
        auto tmp = file_for(key);
        tmp += ".tmp";
        {
            std::ofstream out(tmp);
            out << j.dump();
        }
        std::error_code ec;
        std::filesystem::rename(tmp, file_for(key), ec);  // last writer wins
    }
    std::lock_guard lock(mutex_);
    memory_.emplace(key, v);
    return v;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.model_id != b.model_id) {
        throw Error("cosine_similarity: model mismatch (" + a.model_id + " vs " + b.model_id + ")");
    }
    if (a.values.size() != b.values.size()) {
        throw Error("cosine_similarity: dimension mismatch");
    }
    double na = simd::squared_norm(a.values);
    double nb = simd::squared_norm(b.values);
    if (na == 0.0 || nb == 0.0) {
        return -1.0;
    }
    return simd::dot(a.values, b.values) / std::sqrt(na * nb);
}

std::vector<RankEntry> rank_by_cosine(const EmbeddingVector& target,
                                      const std::vector<EmbeddingVector>& candidates) {
    std::vector<RankEntry> entries;
    entries.reserve(candidates.size());
    bool target_zero = simd::squared_norm(target.values) == 0.0f;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        RankEntry e;
        e.index = i;
        bool cand_zero = simd::squared_norm(candidates[i].values) == 0.0f;
        e.zero_norm = target_zero || cand_zero;
        e.similarity = cosine_similarity(target, candidates[i]);
        entries.push_back(e);
    }
    std::stable_sort(entries.begin(), entries.end(), [](const RankEntry& a, const RankEntry& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.index < b.index;
    });
    return entries;
}

} // namespace dail::embedding
