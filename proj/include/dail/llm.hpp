#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

#include "dail/corpus.hpp"
#include "dail/sqlexec.hpp"

namespace dail::llm {

struct CompletionRequest {
    std::string prompt;
    double temperature = 0.0;
    int max_tokens = 200;  // the response reserve
    std::string model_id;
    std::vector<std::string> stop_sequences;
    // Offline oracle backends echo this (the target's gold SQL); live
    // backends ignore it and it is not part of the fixture key.
    std::string reference_text;
};

struct CompletionResponse {
    std::string text;
    int prompt_tokens = 0;
    int completion_tokens = 0;
    std::string backend;
    std::chrono::milliseconds latency{0};
};

// Fixture key: SHA-256 over (model_id, prompt, temperature, max_tokens).
std::string fixture_key(const std::string& model_id, const std::string& prompt,
                        double temperature, int max_tokens);

struct FixtureRecord {
    std::string key;
    std::string model_id;
    double temperature = 0.0;
    int max_tokens = 0;
    std::string request_summary;  // prompt head, for human inspection
    std::string response_text;
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    CompletionResponse complete(const CompletionRequest& request);
    virtual std::string name() const = 0;

    // concurrency instrumentation
    int in_flight() const { return in_flight_.load(); }
    int max_in_flight() const { return max_in_flight_.load(); }

protected:
    virtual CompletionResponse do_complete(const CompletionRequest& request) = 0;

private:
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
};

// Echoes the request's reference text (the target's gold SQL).
class OracleBackend final : public LlmBackend {
public:
    std::string name() const override { return "oracle"; }

protected:
    CompletionResponse do_complete(const CompletionRequest& request) override;
};

// Deterministic scripted backend for tests: either a fixed response sequence
// (cycled) or a response function of the request.
class CannedBackend final : public LlmBackend {
public:
    explicit CannedBackend(std::vector<std::string> responses);
    explicit CannedBackend(std::function<std::string(const CompletionRequest&)> fn);
    std::string name() const override { return "canned"; }

protected:
    CompletionResponse do_complete(const CompletionRequest& request) override;

private:
    std::vector<std::string> responses_;
    std::size_t next_ = 0;
    std::function<std::string(const CompletionRequest&)> fn_;
    std::mutex mutex_;
};

// Replays recorded fixtures; a miss is an explicit error, never a silent
// fallback.
class ReplayBackend final : public LlmBackend {
public:
    explicit ReplayBackend(const std::filesystem::path& fixture_file_or_dir);
    std::string name() const override { return "replay"; }
    std::size_t size() const { return records_.size(); }

protected:
    CompletionResponse do_complete(const CompletionRequest& request) override;

private:
    std::unordered_map<std::string, FixtureRecord> records_;
};

// Wraps any backend and appends every completion to an append-only fixture
// log, so live runs become replayable corpora.
class RecordingBackend final : public LlmBackend {
public:
    RecordingBackend(std::shared_ptr<LlmBackend> inner, std::filesystem::path out_file);
    std::string name() const override { return inner_->name(); }

protected:
    CompletionResponse do_complete(const CompletionRequest& request) override;

private:
    std::shared_ptr<LlmBackend> inner_;
    std::filesystem::path out_file_;
    std::mutex mutex_;
};

void append_fixture(const std::filesystem::path& file, const FixtureRecord& record);
std::vector<FixtureRecord> load_fixtures(const std::filesystem::path& file_or_dir);

struct HttpBackendConfig {
    std::string endpoint;  // http(s)://host[:port]
    std::string path;      // default depends on style
    std::string model;
    std::string api_key_env;
    bool chat_style = true;  // chat/completions vs completions
    int requests_per_minute = 60;
    int concurrency = 4;
    int max_retries = 5;
    int base_backoff_ms = 1000;
};

// OpenAI-compatible HTTP backend with token-bucket rate limiting, bounded
// concurrency and exponential backoff on transient failures.
class HttpBackend final : public LlmBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    std::string name() const override { return config_.chat_style ? "http-chat" : "http-completion"; }

protected:
    CompletionResponse do_complete(const CompletionRequest& request) override;

private:
    HttpBackendConfig config_;
    std::mutex rate_mutex_;
    std::deque<std::chrono::steady_clock::time_point> recent_;
    std::unique_ptr<std::counting_semaphore<64>> slots_;

    void acquire_rate_slot();
};

struct SelfConsistencyResult {
    std::string sql;
    int chosen_index = 0;
    bool all_unexecutable = false;
    std::vector<std::string> candidates;
    // usage summed over the n calls, when the backend reports it
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

// Samples n completions at temperature 1.0, executes each candidate on the
// schema's database and returns the earliest member of the largest
// execution-result group. Unexecutable candidates are singleton groups.
SelfConsistencyResult self_consistency(const CompletionRequest& base_request, int n,
                                       LlmBackend& backend, const Schema& db,
                                       bool prompt_ended_with_select,
                                       std::chrono::milliseconds exec_timeout =
                                           std::chrono::milliseconds(30000));

} // namespace dail::llm
