#include "dail/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>

#include "dail/error.hpp"
#include "dail/sqlkit.hpp"
#include "json.hpp"

namespace dail::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;

RunConfig RunConfig::canonical_dail() {
    RunConfig cfg;
    cfg.representation = promptgen::RepresentationConfig::canonical(promptgen::Representation::CodeRep);
    cfg.organization = {promptgen::Organization::DailPairs, 5};
    cfg.selection.strategy = selection::Strategy::Dail;
    cfg.selection.k = 5;
    cfg.selection.tau = 0.9;
    return cfg;
}

void RunConfig::validate() const {
    if (organization.k < 0) throw ConfigError("organization.k must be >= 0");
    if (selection.k < 0) throw ConfigError("selection.k must be >= 0");
    if (selection.tau < 0.0 || selection.tau > 1.0) {
        throw ConfigError("selection.tau must be in [0, 1]");
    }
    if (context_limit <= promptgen::kResponseReserve) {
        throw ConfigError("context_limit must exceed the 200-token response reserve");
    }
    if (self_consistency_n != 0 && self_consistency_n != 5) {
        throw ConfigError("self_consistency_n must be 0 (off) or 5 (paper profile)");
    }
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (token_counter != "approx" && token_counter != "bpe") {
        throw ConfigError("token_counter must be 'approx' or 'bpe'");
    }
    if (token_counter == "bpe" && bpe_merges.empty()) {
        throw ConfigError("token_counter 'bpe' requires bpe_merges");
    }
    if (backend.kind == BackendKind::Replay && backend.fixtures.empty()) {
        throw ConfigError("backend.fixtures required for replay backend");
    }
    if ((backend.kind == BackendKind::HttpChat || backend.kind == BackendKind::HttpCompletion) &&
        backend.endpoint.empty()) {
        throw ConfigError("backend.endpoint required for http backends");
    }
    if (selection.strategy == selection::Strategy::QuerySimilarity ||
        selection.strategy == selection::Strategy::Dail) {
        if (selection.preliminary_source == selection::PreliminarySource::File &&
            selection.preliminary_file.empty()) {
            throw ConfigError("selection.preliminary_file required when preliminary source is 'file'");
        }
    }
}

namespace {

BackendKind parse_backend_kind(const std::string& name) {
    if (name == "oracle") return BackendKind::Oracle;
    if (name == "replay") return BackendKind::Replay;
    if (name == "http-chat" || name == "http_chat" || name == "chat") return BackendKind::HttpChat;
    if (name == "http-completion" || name == "http_completion" || name == "completion") {
        return BackendKind::HttpCompletion;
    }
    throw ConfigError("unknown backend kind: " + name);
}

std::string backend_kind_name(BackendKind kind) {
    switch (kind) {
        case BackendKind::Oracle: return "oracle";
        case BackendKind::Replay: return "replay";
        case BackendKind::HttpChat: return "http-chat";
        case BackendKind::HttpCompletion: return "http-completion";
    }
    return "?";
}

} // namespace

RunConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config JSON: ") + e.what());
    }
    RunConfig cfg;
    try {
        if (j.contains("dataset")) {
            const auto& d = j["dataset"];
            cfg.dataset.tables = d.value("tables", "");
            cfg.dataset.db_root = d.value("db_root", "");
            cfg.dataset.instances = d.value("instances", "");
            cfg.dataset.pool = d.value("pool", "");
        }
        if (j.contains("representation")) {
            const auto& r = j["representation"];
            cfg.representation.kind =
                promptgen::parse_representation(r.value("kind", "CR_P"));
            cfg.representation.rule = r.contains("rule")
                ? promptgen::parse_rule(r["rule"].get<std::string>())
                : promptgen::RepresentationConfig::canonical(cfg.representation.kind).rule;
            cfg.representation.include_foreign_keys = r.value("foreign_keys", false);
            cfg.representation.normalize();
        }
        if (j.contains("organization")) {
            const auto& o = j["organization"];
            cfg.organization.kind = promptgen::parse_organization(o.value("kind", "DAIL_O"));
            cfg.organization.k = o.value("k", 5);
        }
        if (j.contains("selection")) {
            const auto& s = j["selection"];
            cfg.selection.strategy = selection::parse_strategy(s.value("strategy", "dail"));
            cfg.selection.k = s.value("k", cfg.organization.k);
            cfg.selection.tau = s.value("tau", 0.9);
            cfg.selection.seed = s.value("seed", 0ULL);
            std::string prelim = s.value("preliminary", "zero_shot_pass");
            if (prelim == "zero_shot_pass") {
                cfg.selection.preliminary_source = selection::PreliminarySource::ZeroShotPass;
            } else if (prelim == "file") {
                cfg.selection.preliminary_source = selection::PreliminarySource::File;
                cfg.selection.preliminary_file = s.value("preliminary_file", "");
            } else {
                throw ConfigError("selection.preliminary must be 'zero_shot_pass' or 'file'");
            }
        }
        // organization.k and selection.k describe the same budget; keep them
        // in lockstep when only one is given.
        if (j.contains("selection") && !j.contains("organization")) {
            cfg.organization.k = cfg.selection.k;
        } else if (j.contains("organization") && !j.contains("selection")) {
            cfg.selection.k = cfg.organization.k;
        }
        if (j.contains("backend")) {
            const auto& b = j["backend"];
            cfg.backend.kind = parse_backend_kind(b.value("type", "oracle"));
            cfg.backend.model = b.value("model", cfg.backend.model);
            cfg.backend.endpoint = b.value("endpoint", "");
            cfg.backend.api_key_env = b.value("api_key_env", cfg.backend.api_key_env);
            cfg.backend.fixtures = b.value("fixtures", "");
            cfg.backend.requests_per_minute = b.value("requests_per_minute", 60);
            cfg.backend.concurrency = b.value("concurrency", 4);
            cfg.backend.max_retries = b.value("max_retries", 5);
            cfg.backend.base_backoff_ms = b.value("base_backoff_ms", 1000);
        }
        if (j.contains("embedding")) {
            const auto& e = j["embedding"];
            cfg.embedding.provider = e.value("provider", "hash");
            cfg.embedding.endpoint = e.value("endpoint", "");
            cfg.embedding.model = e.value("model", cfg.embedding.model);
            cfg.embedding.api_key_env = e.value("api_key_env", "");
            if (e.contains("cache_dir") && !e["cache_dir"].get<std::string>().empty()) {
                cfg.embedding.cache_dir = e["cache_dir"].get<std::string>();
            }
        }
        cfg.context_limit = j.value("context_limit", 4096);
        cfg.self_consistency_n = j.value("self_consistency_n", 0);
        cfg.jobs = j.value("jobs", 1);
        cfg.token_counter = j.value("token_counter", "approx");
        cfg.bpe_merges = j.value("bpe_merges", "");
        cfg.prices = j.value("prices", "");
        cfg.output_dir = j.value("output_dir", "");
        if (j.contains("record_fixtures") && !j["record_fixtures"].get<std::string>().empty()) {
            cfg.record_fixtures = j["record_fixtures"].get<std::string>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig config_from_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ConfigError("cannot open config file " + file.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json_text(text);
}

std::string config_to_json_text(const RunConfig& cfg) {
    ordered_json j;
    j["dataset"] = {{"tables", cfg.dataset.tables.string()},
                    {"db_root", cfg.dataset.db_root.string()},
                    {"instances", cfg.dataset.instances.string()},
                    {"pool", cfg.dataset.pool.string()}};
    j["representation"] = {{"kind", promptgen::to_string(cfg.representation.kind)},
                           {"rule", promptgen::to_string(cfg.representation.rule)},
                           {"foreign_keys", cfg.representation.include_foreign_keys}};
    j["organization"] = {{"kind", promptgen::to_string(cfg.organization.kind)},
                         {"k", cfg.organization.k}};
    ordered_json sel = {{"strategy", selection::to_string(cfg.selection.strategy)},
                        {"k", cfg.selection.k},
                        {"tau", cfg.selection.tau},
                        {"seed", cfg.selection.seed}};
    sel["preliminary"] = cfg.selection.preliminary_source == selection::PreliminarySource::File
                             ? "file"
                             : "zero_shot_pass";
    if (!cfg.selection.preliminary_file.empty()) {
        sel["preliminary_file"] = cfg.selection.preliminary_file.string();
    }
    j["selection"] = sel;
    j["backend"] = {{"type", backend_kind_name(cfg.backend.kind)},
                    {"model", cfg.backend.model},
                    {"endpoint", cfg.backend.endpoint},
                    {"api_key_env", cfg.backend.api_key_env},
                    {"fixtures", cfg.backend.fixtures.string()},
                    {"requests_per_minute", cfg.backend.requests_per_minute},
                    {"concurrency", cfg.backend.concurrency},
                    {"max_retries", cfg.backend.max_retries},
                    {"base_backoff_ms", cfg.backend.base_backoff_ms}};
    j["embedding"] = {{"provider", cfg.embedding.provider},
                      {"endpoint", cfg.embedding.endpoint},
                      {"model", cfg.embedding.model},
                      {"api_key_env", cfg.embedding.api_key_env},
                      {"cache_dir", cfg.embedding.cache_dir ? cfg.embedding.cache_dir->string() : ""}};
    j["context_limit"] = cfg.context_limit;
    j["self_consistency_n"] = cfg.self_consistency_n;
    j["jobs"] = cfg.jobs;
    j["token_counter"] = cfg.token_counter;
    j["bpe_merges"] = cfg.bpe_merges.string();
    j["prices"] = cfg.prices.string();
    j["output_dir"] = cfg.output_dir.string();
    j["record_fixtures"] = cfg.record_fixtures ? cfg.record_fixtures->string() : "";
    return j.dump(2) + "\n";
}

Services build_services(const RunConfig& cfg) {
    Services services;
    switch (cfg.backend.kind) {
        case BackendKind::Oracle:
            services.backend = std::make_shared<llm::OracleBackend>();
            break;
        case BackendKind::Replay:
            services.backend = std::make_shared<llm::ReplayBackend>(cfg.backend.fixtures);
            break;
        case BackendKind::HttpChat:
        case BackendKind::HttpCompletion: {
            llm::HttpBackendConfig http;
            http.endpoint = cfg.backend.endpoint;
            http.model = cfg.backend.model;
            http.api_key_env = cfg.backend.api_key_env;
            http.chat_style = cfg.backend.kind == BackendKind::HttpChat;
            http.requests_per_minute = cfg.backend.requests_per_minute;
            http.concurrency = cfg.backend.concurrency;
            http.max_retries = cfg.backend.max_retries;
            http.base_backoff_ms = cfg.backend.base_backoff_ms;
            services.backend = std::make_shared<llm::HttpBackend>(http);
            break;
        }
    }
    if (cfg.record_fixtures) {
        services.backend =
            std::make_shared<llm::RecordingBackend>(services.backend, *cfg.record_fixtures);
    }

    std::shared_ptr<embedding::EmbeddingProvider> provider;
    if (cfg.embedding.provider == "hash") {
        provider = std::make_shared<embedding::HashEmbeddingProvider>();
    } else if (cfg.embedding.provider == "http") {
        embedding::HttpEmbeddingConfig ec;
        ec.endpoint = cfg.embedding.endpoint;
        ec.model = cfg.embedding.model;
        ec.api_key_env = cfg.embedding.api_key_env;
        provider = std::make_shared<embedding::HttpEmbeddingProvider>(ec);
    } else {
        throw ConfigError("unknown embedding provider: " + cfg.embedding.provider);
    }
    services.embedder =
        std::make_shared<embedding::CachingEmbedder>(provider, cfg.embedding.cache_dir);

    if (cfg.token_counter == "bpe") {
        services.counter = std::make_shared<promptgen::BpeTokenCounter>(cfg.bpe_merges);
    } else {
        services.counter = std::make_shared<promptgen::ApproxTokenCounter>();
    }

    if (!cfg.prices.empty()) {
        services.prices = eval::PriceTable::from_file(cfg.prices);
    }
    if (cfg.selection.preliminary_source == selection::PreliminarySource::File &&
        !cfg.selection.preliminary_file.empty()) {
        for (const auto& p : eval::load_predictions(cfg.selection.preliminary_file)) {
            services.preliminary[p.instance_id] = p.sql;
        }
    }
    return services;
}

namespace {

struct PreliminaryResult {
    std::string sql;
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

// Algorithm line "predict SQL query via preliminary predictor": either a
// supplied predictions file or a zero-shot CR_P pass through the same
// backend (the leaderboard profile), whose cost joins the accounting.
PreliminaryResult preliminary_sql(const Instance& target, const Schema& schema,
                                  const RunConfig& cfg, Services& services) {
    PreliminaryResult result;
    if (cfg.selection.preliminary_source == selection::PreliminarySource::File) {
        auto it = services.preliminary.find(target.id);
        if (it != services.preliminary.end()) {
            result.sql = it->second;
        }
        return result;
    }
    auto rep = promptgen::RepresentationConfig::canonical(promptgen::Representation::CodeRep);
    std::string prompt = promptgen::render_question(rep, target.question, schema);
    llm::CompletionRequest req;
    req.prompt = prompt;
    req.temperature = 0.0;
    req.max_tokens = promptgen::kResponseReserve;
    req.model_id = cfg.backend.model;
    req.reference_text = target.gold_sql;
    llm::CompletionResponse resp = services.backend->complete(req);
    result.prompt_tokens =
        resp.prompt_tokens > 0 ? resp.prompt_tokens : services.counter->count(prompt);
    result.completion_tokens =
        resp.completion_tokens > 0 ? resp.completion_tokens : services.counter->count(resp.text);
    try {
        result.sql = sqlkit::extract_first_sql(resp.text, /*prompt_ended_with_select=*/true);
    } catch (const ExtractionError&) {
        result.sql.clear();
    }
    return result;
}

} // namespace

InferenceOutcome dail_sql_infer(const Instance& target, const CandidatePool& pool,
                                const SchemaIndex& schemas, const RunConfig& cfg,
                                Services& services) {
    InferenceOutcome outcome;
    outcome.prediction.instance_id = target.id;
    try {
        const Schema& schema = schemas.at(target.db_id);
        CandidatePool candidates = cross_domain_pool(pool, target.db_id);

        int prelim_prompt_tokens = 0;
        int prelim_completion_tokens = 0;
        int k = cfg.selection.k;
        if (k > 0) {
            switch (cfg.selection.strategy) {
                case selection::Strategy::Random:
                    outcome.selection = selection::select_random(candidates, k, cfg.selection.seed);
                    outcome.selection.per_example = selection::score_examples(
                        target, outcome.selection.chosen, schemas, target.gold_sql);
                    break;
                case selection::Strategy::QuestionSimilarity:
                    outcome.selection = selection::select_by_question(
                        candidates, target, k, /*masked=*/false, *services.embedder, schemas,
                        target.gold_sql);
                    break;
                case selection::Strategy::MaskedQuestionSimilarity:
                    outcome.selection = selection::select_by_question(
                        candidates, target, k, /*masked=*/true, *services.embedder, schemas,
                        target.gold_sql);
                    break;
                case selection::Strategy::QuerySimilarity: {
                    PreliminaryResult prelim = preliminary_sql(target, schema, cfg, services);
                    prelim_prompt_tokens = prelim.prompt_tokens;
                    prelim_completion_tokens = prelim.completion_tokens;
                    outcome.selection = selection::select_qrs(candidates, prelim.sql, k);
                    break;
                }
                case selection::Strategy::Dail: {
                    PreliminaryResult prelim = preliminary_sql(target, schema, cfg, services);
                    prelim_prompt_tokens = prelim.prompt_tokens;
                    prelim_completion_tokens = prelim.completion_tokens;
                    outcome.selection =
                        selection::select_dail(candidates, target, prelim.sql, k,
                                               cfg.selection.tau, *services.embedder, schemas);
                    break;
                }
                case selection::Strategy::UpperLimit:
                    outcome.selection = selection::select_upper_limit(
                        candidates, target, target.gold_sql, k, cfg.selection.tau,
                        *services.embedder, schemas);
                    break;
            }
        }

        // cross-domain guard: no example may share the target's database
        for (const auto& ex : outcome.selection.chosen) {
            if (ex.db_id == target.db_id) {
                throw Error("cross-domain violation: example " + ex.id +
                            " shares db with target " + target.id);
            }
        }

        outcome.prompt = promptgen::assemble_prompt(
            target, schema, cfg.representation, cfg.organization, outcome.selection.chosen,
            schemas, *services.counter, cfg.context_limit);

        llm::CompletionRequest req;
        req.prompt = outcome.prompt.text;
        req.temperature = 0.0;
        req.max_tokens = promptgen::kResponseReserve;
        req.model_id = cfg.backend.model;
        req.reference_text = target.gold_sql;

        int completion_tokens = 0;
        int measured_prompt_tokens = 0;  // live backends report usage
        int prompt_calls = 1;
        if (cfg.self_consistency_n > 0) {
            llm::SelfConsistencyResult vote =
                llm::self_consistency(req, cfg.self_consistency_n, *services.backend, schema,
                                      outcome.prompt.ends_with_select, cfg.exec.timeout);
            outcome.prediction.sql = vote.sql;
            outcome.response_text = vote.sql;
            // the prompt is sent once per sampled candidate
            prompt_calls = cfg.self_consistency_n;
            measured_prompt_tokens = vote.prompt_tokens;
            if (vote.completion_tokens > 0) {
                completion_tokens = vote.completion_tokens;
            } else {
                for (const auto& cand : vote.candidates) {
                    completion_tokens += services.counter->count(cand);
                }
            }
        } else {
            llm::CompletionResponse resp = services.backend->complete(req);
            outcome.response_text = resp.text;
            measured_prompt_tokens = resp.prompt_tokens;
            completion_tokens = resp.completion_tokens > 0 ? resp.completion_tokens
                                                           : services.counter->count(resp.text);
            try {
                outcome.prediction.sql =
                    sqlkit::extract_first_sql(resp.text, outcome.prompt.ends_with_select);
            } catch (const ExtractionError& e) {
                outcome.prediction.sql.clear();
                outcome.prediction.error = e.what();
            }
        }

        outcome.prediction.prompt_tokens =
            (measured_prompt_tokens > 0 ? measured_prompt_tokens
                                        : outcome.prompt.token_count * prompt_calls) +
            prelim_prompt_tokens;
        outcome.prediction.completion_tokens = completion_tokens + prelim_completion_tokens;
        outcome.prediction.examples_included = outcome.prompt.examples_included;
        int counted = outcome.prompt.examples_included;
        if (counted > 0) {
            double qj = 0.0, sj = 0.0;
            for (int i = 0; i < counted; ++i) {
                qj += outcome.selection.per_example[static_cast<std::size_t>(i)].question_jaccard;
                sj += outcome.selection.per_example[static_cast<std::size_t>(i)].query_jaccard;
            }
            outcome.prediction.question_jaccard_avg = qj / counted;
            outcome.prediction.query_jaccard_avg = sj / counted;
        }
    } catch (const std::exception& e) {
        // errors yield an empty SQL (scored incorrect); the run continues
        outcome.prediction.sql.clear();
        outcome.prediction.error = e.what();
    }
    return outcome;
}

RunResult run_dataset(const std::vector<Instance>& instances, const CandidatePool& pool,
                      const SchemaIndex& schemas, const RunConfig& cfg, Services& services) {
    auto start = std::chrono::steady_clock::now();
    std::vector<InferenceOutcome> outcomes(instances.size());

    int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        for (std::size_t i = 0; i < instances.size(); ++i) {
            outcomes[i] = dail_sql_infer(instances[i], pool, schemas, cfg, services);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(jobs));
        for (int w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                while (true) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= instances.size()) break;
                    outcomes[i] = dail_sql_infer(instances[i], pool, schemas, cfg, services);
                }
            });
        }
        for (auto& t : workers) t.join();
    }

    RunResult result;
    result.predictions.reserve(instances.size());
    for (const auto& o : outcomes) {
        result.predictions.push_back(o.prediction);
    }
    result.report = eval::evaluate_run(result.predictions, instances, schemas, services.prices,
                                       cfg.exec, cfg.backend.model, services.counter->name());
    result.report.aggregates.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        {
            std::ofstream out(cfg.output_dir / "config_snapshot.json");
            out << config_to_json_text(cfg);
        }
        eval::save_predictions(cfg.output_dir / "predictions.json", result.predictions);
        {
            std::ofstream out(cfg.output_dir / "report.json");
            out << eval::report_to_json(result.report);
        }
        {
            std::ofstream out(cfg.output_dir / "report.txt");
            out << eval::report_to_table(result.report);
        }
        {
            ordered_json meta{{"runtime_seconds", result.report.aggregates.runtime_seconds},
                              {"backend", services.backend->name()},
                              {"max_in_flight", services.backend->max_in_flight()}};
            std::ofstream out(cfg.output_dir / "run_meta.json");
            out << meta.dump(2) << "\n";
        }
    }
    return result;
}

std::size_t export_sft_pairs(const std::vector<Instance>& instances, const SchemaIndex& schemas,
                             const promptgen::RepresentationConfig& rep,
                             const std::filesystem::path& out, std::size_t* skipped) {
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    std::ofstream file(out);
    if (!file) {
        throw Error("cannot write SFT export file " + out.string());
    }
    std::size_t written = 0;
    std::size_t skips = 0;
    for (const Instance& inst : instances) {
        try {
            const Schema& schema = schemas.at(inst.db_id);
            std::string prompt = promptgen::render_question(rep, inst.question, schema);
            ordered_json record{{"prompt", prompt}, {"response", inst.gold_sql}};
            file << record.dump() << "\n";
            ++written;
        } catch (const std::exception&) {
            ++skips;
        }
    }
    if (skipped) *skipped = skips;
    return written;
}

} // namespace dail::pipeline
