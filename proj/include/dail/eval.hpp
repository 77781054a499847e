#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dail/corpus.hpp"
#include "dail/sqlexec.hpp"

namespace dail::eval {

struct MatchResult {
    bool match = false;
    bool dataset_error = false;  // the gold side is broken: instance excluded
    bool pred_timeout = false;
    std::string error;
};

// Clause-set equality of decomposed components, value-agnostic. Unparseable
// prediction → no match; unparseable gold → dataset error.
MatchResult exact_set_match(const std::string& pred, const std::string& gold);

struct ExecOptions {
    std::chrono::milliseconds timeout{30000};
    double float_rel_tolerance = 1e-6;
};

// Runs both queries read-only on the schema's database and compares results:
// multiset row comparison, row order significant only when the gold query
// carries a top-level ORDER BY, column order always significant, numeric
// cells compared with relative tolerance.
MatchResult execution_match(const std::string& pred, const std::string& gold,
                            const Schema& schema, const ExecOptions& options = {});

struct Prediction {
    std::string instance_id;
    std::string sql;
    int prompt_tokens = 0;
    int completion_tokens = 0;
    int examples_included = 0;
    double question_jaccard_avg = 0.0;
    double query_jaccard_avg = 0.0;
    std::string error;  // upstream pipeline failure, if any
};

struct InstanceReport {
    std::string instance_id;
    bool em = false;
    bool ex = false;
    int prompt_tokens = 0;
    int completion_tokens = 0;
    int examples_included = 0;
    double question_jaccard_avg = 0.0;
    double query_jaccard_avg = 0.0;
    std::string error;
    bool missing = false;   // no prediction supplied
    bool excluded = false;  // dataset error: not in accuracy denominators
};

struct Aggregates {
    double em_accuracy = 0.0;
    double ex_accuracy = 0.0;
    double avg_prompt_tokens = 0.0;
    long long total_prompt_tokens = 0;
    long long total_completion_tokens = 0;
    double total_cost = 0.0;
    double question_jaccard_avg = 0.0;
    double query_jaccard_avg = 0.0;
    int scored = 0;
    int excluded = 0;
    int missing = 0;
    // Wall-clock; lives in run metadata, not in the serialized report, so
    // replayed runs stay byte-identical.
    double runtime_seconds = 0.0;
};

struct EvalReport {
    std::vector<InstanceReport> per_instance;
    Aggregates aggregates;
    std::string model_id;
    std::string token_counter;
    bool cost_priced = true;  // false when the price sheet lacks the model
};

struct ModelPrice {
    double prompt_per_1k = 0.0;
    double completion_per_1k = 0.0;
};

// {"model": {"prompt_price_per_1k": x, "completion_price_per_1k": y}, ...}
class PriceTable {
public:
    PriceTable() = default;
    static PriceTable from_file(const std::filesystem::path& file);
    void set(const std::string& model, ModelPrice price) { prices_[model] = price; }
    std::optional<ModelPrice> find(const std::string& model) const;

private:
    std::map<std::string, ModelPrice> prices_;
};

EvalReport evaluate_run(const std::vector<Prediction>& predictions,
                        const std::vector<Instance>& instances, const SchemaIndex& schemas,
                        const PriceTable& prices = {}, const ExecOptions& options = {},
                        const std::string& model_id = "", const std::string& token_counter = "");

// Deterministic machine-readable form (volatile fields omitted).
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

// Human-readable summary table.
std::string report_to_table(const EvalReport& report);

std::vector<Prediction> load_predictions(const std::filesystem::path& file);
void save_predictions(const std::filesystem::path& file, const std::vector<Prediction>& preds);

} // namespace dail::eval
