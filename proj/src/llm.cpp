#include "dail/llm.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <thread>

#include "dail/error.hpp"
#include "dail/hash.hpp"
#include "dail/sqlkit.hpp"
#include "httplib.h"
#include "json.hpp"

namespace dail::llm {

using nlohmann::json;

std::string fixture_key(const std::string& model_id, const std::string& prompt,
                        double temperature, int max_tokens) {
    char temp_buf[32];
    std::snprintf(temp_buf, sizeof(temp_buf), "%.6g", temperature);
    std::string material = model_id;
    material += '\x1f';
    material += prompt;
    material += '\x1f';
    material += temp_buf;
    material += '\x1f';
    material += std::to_string(max_tokens);
    return sha256_hex(material);
}

CompletionResponse LlmBackend::complete(const CompletionRequest& request) {
    int now = ++in_flight_;
    int seen = max_in_flight_.load();
    while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
    }
    auto start = std::chrono::steady_clock::now();
    try {
        CompletionResponse response = do_complete(request);
        response.backend = name();
        response.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        --in_flight_;
        return response;
    } catch (...) {
        --in_flight_;
        throw;
    }
}

CompletionResponse OracleBackend::do_complete(const CompletionRequest& request) {
    CompletionResponse r;
    r.text = request.reference_text;
    return r;
}

CannedBackend::CannedBackend(std::vector<std::string> responses)
    : responses_(std::move(responses)) {}

CannedBackend::CannedBackend(std::function<std::string(const CompletionRequest&)> fn)
    : fn_(std::move(fn)) {}

CompletionResponse CannedBackend::do_complete(const CompletionRequest& request) {
    CompletionResponse r;
    if (fn_) {
        r.text = fn_(request);
        return r;
    }
    std::lock_guard lock(mutex_);
    if (responses_.empty()) {
        throw BackendError("canned backend has no responses");
    }
    r.text = responses_[next_ % responses_.size()];
    ++next_;
    return r;
}

void append_fixture(const std::filesystem::path& file, const FixtureRecord& record) {
    if (file.has_parent_path()) {
        std::filesystem::create_directories(file.parent_path());
    }
    std::ofstream out(file, std::ios::app);
    if (!out) {
        throw Error("cannot open fixture log " + file.string());
    }
    json j = {{"key", record.key},
              {"model", record.model_id},
              {"temperature", record.temperature},
              {"max_tokens", record.max_tokens},
              {"request_summary", record.request_summary},
              {"response_text", record.response_text},
              {"prompt_tokens", record.prompt_tokens},
              {"completion_tokens", record.completion_tokens}};
    out << j.dump() << "\n";
}

std::vector<FixtureRecord> load_fixtures(const std::filesystem::path& file_or_dir) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(file_or_dir)) {
        for (const auto& entry : std::filesystem::directory_iterator(file_or_dir)) {
            if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(file_or_dir);
    }
    std::vector<FixtureRecord> records;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) {
            throw Error("cannot open fixture file " + f.string());
        }
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, /*allow_exceptions=*/true);
            FixtureRecord r;
            r.key = j.at("key").get<std::string>();
            r.model_id = j.value("model", "");
            r.temperature = j.value("temperature", 0.0);
            r.max_tokens = j.value("max_tokens", 0);
            r.request_summary = j.value("request_summary", "");
            r.response_text = j.at("response_text").get<std::string>();
            r.prompt_tokens = j.value("prompt_tokens", 0);
            r.completion_tokens = j.value("completion_tokens", 0);
            records.push_back(std::move(r));
        }
    }
    return records;
}

ReplayBackend::ReplayBackend(const std::filesystem::path& fixture_file_or_dir) {
    for (auto& r : load_fixtures(fixture_file_or_dir)) {
        records_[r.key] = std::move(r);  // append-only logs: last write wins
    }
}

CompletionResponse ReplayBackend::do_complete(const CompletionRequest& request) {
    std::string key =
        fixture_key(request.model_id, request.prompt, request.temperature, request.max_tokens);
    auto it = records_.find(key);
    if (it == records_.end()) {
        throw FixtureMissError("fixture miss for key " + key, key);
    }
    CompletionResponse r;
    r.text = it->second.response_text;
    r.prompt_tokens = it->second.prompt_tokens;
    r.completion_tokens = it->second.completion_tokens;
    return r;
}

RecordingBackend::RecordingBackend(std::shared_ptr<LlmBackend> inner,
                                   std::filesystem::path out_file)
    : inner_(std::move(inner)), out_file_(std::move(out_file)) {}

CompletionResponse RecordingBackend::do_complete(const CompletionRequest& request) {
    CompletionResponse response = inner_->complete(request);
    FixtureRecord record;
    record.key =
        fixture_key(request.model_id, request.prompt, request.temperature, request.max_tokens);
    record.model_id = request.model_id;
    record.temperature = request.temperature;
    record.max_tokens = request.max_tokens;
    record.request_summary = request.prompt.substr(0, 80);
    record.response_text = response.text;
    record.prompt_tokens = response.prompt_tokens;
    record.completion_tokens = response.completion_tokens;
    std::lock_guard lock(mutex_);
    append_fixture(out_file_, record);
    return response;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.path.empty()) {
        config_.path = config_.chat_style ? "/v1/chat/completions" : "/v1/completions";
    }
    int slots = std::clamp(config_.concurrency, 1, 64);
    slots_ = std::make_unique<std::counting_semaphore<64>>(slots);
}

void HttpBackend::acquire_rate_slot() {
    // token bucket over a sliding one-minute window
    using namespace std::chrono;
    while (true) {
        steady_clock::time_point wake;
        {
            std::lock_guard lock(rate_mutex_);
            auto now = steady_clock::now();
            while (!recent_.empty() && now - recent_.front() > minutes(1)) {
                recent_.pop_front();
            }
            if (static_cast<int>(recent_.size()) < config_.requests_per_minute) {
                recent_.push_back(now);
                return;
            }
            wake = recent_.front() + minutes(1);
        }
        std::this_thread::sleep_until(wake);
    }
}

CompletionResponse HttpBackend::do_complete(const CompletionRequest& request) {
    slots_->acquire();
    struct Release {
        std::counting_semaphore<64>* s;
        ~Release() { s->release(); }
    } release{slots_.get()};

    json body;
    body["model"] = request.model_id.empty() ? config_.model : request.model_id;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;
    if (config_.chat_style) {
        body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});
    } else {
        body["prompt"] = request.prompt;
    }
    std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            auto delay =
                std::chrono::milliseconds(config_.base_backoff_ms) * (1LL << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        acquire_rate_slot();
        httplib::Client client(config_.endpoint);
        client.set_read_timeout(300, 0);
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
            throw BackendError("LLM endpoint returned HTTP " + std::to_string(res->status) + ": " +
                               res->body);
        }
        try {
            json parsed = json::parse(res->body);
            CompletionResponse out;
            const auto& choice = parsed.at("choices").at(0);
            if (config_.chat_style) {
                out.text = choice.at("message").at("content").get<std::string>();
            } else {
                out.text = choice.at("text").get<std::string>();
            }
            if (parsed.contains("usage")) {
                out.prompt_tokens = parsed["usage"].value("prompt_tokens", 0);
                out.completion_tokens = parsed["usage"].value("completion_tokens", 0);
            }
            return out;
        } catch (const json::exception& e) {
            throw BackendError(std::string("malformed LLM response: ") + e.what());
        }
    }
    throw BackendError("LLM request failed after retries: " + last_error);
}

SelfConsistencyResult self_consistency(const CompletionRequest& base_request, int n,
                                       LlmBackend& backend, const Schema& db,
                                       bool prompt_ended_with_select,
                                       std::chrono::milliseconds exec_timeout) {
    if (n < 1) {
        throw Error("self_consistency requires n >= 1");
    }
    SelfConsistencyResult result;
    std::vector<std::string> fingerprints(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        CompletionRequest req = base_request;
        req.temperature = 1.0;  // variety in voting
        CompletionResponse resp = backend.complete(req);
        result.prompt_tokens += resp.prompt_tokens;
        result.completion_tokens += resp.completion_tokens;
        std::string sql;
        try {
            sql = sqlkit::extract_first_sql(resp.text, prompt_ended_with_select);
        } catch (const ExtractionError&) {
            sql.clear();
        }
        result.candidates.push_back(sql);
        std::string fp;
        if (!sql.empty()) {
            try {
                sqlexec::SqliteDb conn(db.db_file_path, /*read_only=*/true);
                fp = sqlexec::result_fingerprint(conn.query(sql, exec_timeout));
            } catch (const sqlexec::ExecError&) {
                fp.clear();
            }
        }
        // unexecutable candidates form singleton groups
        fingerprints[static_cast<std::size_t>(i)] =
            fp.empty() ? ("!err:" + std::to_string(i)) : fp;
    }

    std::map<std::string, std::pair<int, int>> groups;  // fp → (count, first index)
    for (int i = 0; i < n; ++i) {
        auto [it, fresh] = groups.try_emplace(fingerprints[static_cast<std::size_t>(i)], 0, i);
        it->second.first++;
    }
    int best_count = 0;
    int best_first = n;
    for (const auto& [fp, info] : groups) {
        auto [count, first] = info;
        if (count > best_count || (count == best_count && first < best_first)) {
            best_count = count;
            best_first = first;
        }
    }
    result.chosen_index = best_first;
    result.sql = result.candidates[static_cast<std::size_t>(best_first)];

    bool any_ok = false;
    for (const auto& fp : fingerprints) {
        if (fp.rfind("!err:", 0) != 0) any_ok = true;
    }
    result.all_unexecutable = !any_ok;
    if (result.all_unexecutable) {
        result.chosen_index = 0;
        result.sql = result.candidates[0];
    }
    return result;
}

} // namespace dail::llm
