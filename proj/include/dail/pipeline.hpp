#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dail/corpus.hpp"
#include "dail/embedding.hpp"
#include "dail/eval.hpp"
#include "dail/llm.hpp"
#include "dail/promptgen.hpp"
#include "dail/selection.hpp"

namespace dail::pipeline {

enum class BackendKind { Oracle, Replay, HttpChat, HttpCompletion };

struct BackendConfig {
    BackendKind kind = BackendKind::Oracle;
    std::string model = "offline";
    std::string endpoint;
    std::string api_key_env = "DAIL_API_KEY";
    std::filesystem::path fixtures;  // replay source
    int requests_per_minute = 60;
    int concurrency = 4;
    int max_retries = 5;
    int base_backoff_ms = 1000;
};

struct EmbeddingConfig {
    std::string provider = "hash";  // "hash" or "http"
    std::string endpoint;
    std::string model = "all-mpnet-base-v2";
    std::string api_key_env;
    std::optional<std::filesystem::path> cache_dir;
};

struct DatasetConfig {
    std::filesystem::path tables;
    std::filesystem::path db_root;
    std::filesystem::path instances;  // evaluation split
    std::filesystem::path pool;       // candidate split (cross-domain source)
};

struct RunConfig {
    DatasetConfig dataset;
    promptgen::RepresentationConfig representation =
        promptgen::RepresentationConfig::canonical(promptgen::Representation::CodeRep);
    promptgen::OrganizationConfig organization{promptgen::Organization::DailPairs, 5};
    selection::SelectionConfig selection;
    BackendConfig backend;
    EmbeddingConfig embedding;
    int context_limit = 4096;
    int self_consistency_n = 0;  // 0 = off, 5 = paper profile
    int jobs = 1;
    std::string token_counter = "approx";  // or "bpe"
    std::filesystem::path bpe_merges;
    std::filesystem::path prices;
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> record_fixtures;
    eval::ExecOptions exec;

    // The canonical DAIL-SQL profile: CR_P + DAIL_S + DAIL_O.
    static RunConfig canonical_dail();
    void validate() const;  // throws ConfigError naming the offending key
};

RunConfig config_from_json_text(const std::string& text);
RunConfig config_from_file(const std::filesystem::path& file);
std::string config_to_json_text(const RunConfig& config);

// Shared services a run needs; built once from the config.
struct Services {
    std::shared_ptr<llm::LlmBackend> backend;
    std::shared_ptr<embedding::CachingEmbedder> embedder;
    std::shared_ptr<promptgen::TokenCounter> counter;
    eval::PriceTable prices;
    // preliminary predictions keyed by instance id (selection strategies
    // that need an approximated query read from here when configured)
    std::map<std::string, std::string> preliminary;
};

Services build_services(const RunConfig& config);

struct InferenceOutcome {
    eval::Prediction prediction;
    promptgen::RenderedPrompt prompt;
    selection::SelectionResult selection;
    std::string response_text;
};

// One instance end to end: mask, preliminary prediction, skeletons,
// similarity sort, two-tier reorder, top-k, render, complete, extract.
// Instance-level failures are recorded in the prediction, never thrown.
InferenceOutcome dail_sql_infer(const Instance& target, const CandidatePool& pool,
                                const SchemaIndex& schemas, const RunConfig& config,
                                Services& services);

struct RunResult {
    eval::EvalReport report;
    std::vector<eval::Prediction> predictions;
};

// Maps dail_sql_infer over the instances with bounded parallelism, scores the
// predictions and, when output_dir is set, writes the run directory
// (config snapshot, predictions, report.json, report.txt, run_meta.json).
RunResult run_dataset(const std::vector<Instance>& instances, const CandidatePool& pool,
                      const SchemaIndex& schemas, const RunConfig& config, Services& services);

// Zero-shot {prompt, response} pairs for supervised fine-tuning, one JSONL
// record per instance; returns the number written.
std::size_t export_sft_pairs(const std::vector<Instance>& instances, const SchemaIndex& schemas,
                             const promptgen::RepresentationConfig& rep,
                             const std::filesystem::path& out, std::size_t* skipped = nullptr);

} // namespace dail::pipeline
