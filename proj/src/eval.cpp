#include "dail/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "dail/error.hpp"
#include "dail/sqlkit.hpp"
#include "json.hpp"

namespace dail::eval {

using nlohmann::json;
using nlohmann::ordered_json;
using sqlexec::SqlValue;

MatchResult exact_set_match(const std::string& pred, const std::string& gold) {
    MatchResult result;
    sqlkit::ComponentSet gold_components;
    try {
        gold_components = sqlkit::decompose_components(gold);
    } catch (const ParseError& e) {
        result.dataset_error = true;
        result.error = std::string("gold does not parse: ") + e.what();
        return result;
    }
    try {
        result.match = sqlkit::decompose_components(pred) == gold_components;
    } catch (const ParseError&) {
        result.match = false;
    }
    return result;
}

namespace {

bool cell_equal(const SqlValue& a, const SqlValue& b, double rel_tol) {
    if (a.numeric() && b.numeric()) {
        if (a.kind == SqlValue::Kind::Int && b.kind == SqlValue::Kind::Int) {
            return a.i == b.i;
        }
        double x = a.as_double();
        double y = b.as_double();
        if (x == y) return true;
        return std::fabs(x - y) <= rel_tol * std::max({1.0, std::fabs(x), std::fabs(y)});
    }
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case SqlValue::Kind::Null: return true;
        case SqlValue::Kind::Text:
        case SqlValue::Kind::Blob: return a.s == b.s;
        default: return false;
    }
}

bool row_equal(const std::vector<SqlValue>& a, const std::vector<SqlValue>& b, double rel_tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!cell_equal(a[i], b[i], rel_tol)) return false;
    }
    return true;
}

bool row_less(const std::vector<SqlValue>& a, const std::vector<SqlValue>& b) {
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        int ka = static_cast<int>(a[i].kind), kb = static_cast<int>(b[i].kind);
        bool both_num = a[i].numeric() && b[i].numeric();
        if (!both_num && ka != kb) return ka < kb;
        if (both_num) {
            if (a[i].as_double() != b[i].as_double()) return a[i].as_double() < b[i].as_double();
        } else if (a[i].s != b[i].s) {
            return a[i].s < b[i].s;
        }
    }
    return a.size() < b.size();
}

bool results_equal(const sqlexec::QueryResult& pred, const sqlexec::QueryResult& gold,
                   bool ordered, double rel_tol) {
    if (pred.columns.size() != gold.columns.size()) return false;
    if (pred.rows.size() != gold.rows.size()) return false;
    if (ordered) {
        for (std::size_t i = 0; i < pred.rows.size(); ++i) {
            if (!row_equal(pred.rows[i], gold.rows[i], rel_tol)) return false;
        }
        return true;
    }
    auto a = pred.rows;
    auto b = gold.rows;
    std::sort(a.begin(), a.end(), row_less);
    std::sort(b.begin(), b.end(), row_less);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!row_equal(a[i], b[i], rel_tol)) return false;
    }
    return true;
}

} // namespace

MatchResult execution_match(const std::string& pred, const std::string& gold,
                            const Schema& schema, const ExecOptions& options) {
    MatchResult result;
    sqlexec::QueryResult gold_result;
    try {
        sqlexec::SqliteDb conn(schema.db_file_path, /*read_only=*/true);
        gold_result = conn.query(gold, options.timeout);
    } catch (const sqlexec::ExecError& e) {
        result.dataset_error = true;
        result.error = std::string("gold does not execute: ") + e.what();
        return result;
    }

    sqlexec::QueryResult pred_result;
    try {
        sqlexec::SqliteDb conn(schema.db_file_path, /*read_only=*/true);
        pred_result = conn.query(pred, options.timeout);
    } catch (const sqlexec::TimeoutError&) {
        result.pred_timeout = true;
        result.error = "prediction timed out";
        return result;
    } catch (const sqlexec::ExecError& e) {
        result.error = std::string("prediction does not execute: ") + e.what();
        return result;
    }

    bool ordered = sqlkit::has_top_level_order_by(gold);
    result.match = results_equal(pred_result, gold_result, ordered, options.float_rel_tolerance);
    return result;
}

PriceTable PriceTable::from_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ConfigError("cannot open price table " + file.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("malformed price table: " + std::string(e.what()));
    }
    PriceTable table;
    for (auto it = j.begin(); it != j.end(); ++it) {
        ModelPrice p;
        p.prompt_per_1k = it.value().value("prompt_price_per_1k", 0.0);
        p.completion_per_1k = it.value().value("completion_price_per_1k", 0.0);
        table.prices_[it.key()] = p;
    }
    return table;
}

std::optional<ModelPrice> PriceTable::find(const std::string& model) const {
    auto it = prices_.find(model);
    if (it == prices_.end()) return std::nullopt;
    return it->second;
}

EvalReport evaluate_run(const std::vector<Prediction>& predictions,
                        const std::vector<Instance>& instances, const SchemaIndex& schemas,
                        const PriceTable& prices, const ExecOptions& options,
                        const std::string& model_id, const std::string& token_counter) {
    EvalReport report;
    report.model_id = model_id;
    report.token_counter = token_counter;

    std::unordered_map<std::string, const Prediction*> by_id;
    for (const auto& p : predictions) {
        by_id[p.instance_id] = &p;
    }

    int em_count = 0, ex_count = 0;
    double qj_sum = 0.0, sj_sum = 0.0;
    int stat_rows = 0;

    for (const Instance& inst : instances) {
        InstanceReport row;
        row.instance_id = inst.id;
        auto it = by_id.find(inst.id);
        if (it == by_id.end()) {
            row.missing = true;
            row.error = "missing prediction";
            report.per_instance.push_back(std::move(row));
            continue;
        }
        const Prediction& pred = *it->second;
        row.prompt_tokens = pred.prompt_tokens;
        row.completion_tokens = pred.completion_tokens;
        row.examples_included = pred.examples_included;
        row.question_jaccard_avg = pred.question_jaccard_avg;
        row.query_jaccard_avg = pred.query_jaccard_avg;
        if (!pred.error.empty()) row.error = pred.error;

        MatchResult em = exact_set_match(pred.sql, inst.gold_sql);
        const Schema* schema = schemas.find(inst.db_id);
        MatchResult ex;
        if (!schema) {
            ex.dataset_error = true;
            ex.error = "unknown db_id " + inst.db_id;
        } else {
            ex = execution_match(pred.sql, inst.gold_sql, *schema, options);
        }
        if (em.dataset_error || ex.dataset_error) {
            row.excluded = true;
            row.error = !em.error.empty() ? em.error : ex.error;
            report.per_instance.push_back(std::move(row));
            continue;
        }
        row.em = em.match;
        row.ex = ex.match;
        if (ex.pred_timeout && row.error.empty()) row.error = ex.error;
        qj_sum += pred.question_jaccard_avg;
        sj_sum += pred.query_jaccard_avg;
        ++stat_rows;
        report.per_instance.push_back(std::move(row));
    }

    auto& agg = report.aggregates;
    for (const auto& row : report.per_instance) {
        if (row.excluded) {
            agg.excluded++;
            continue;
        }
        if (row.missing) agg.missing++;
        agg.scored++;
        if (row.em) em_count++;
        if (row.ex) ex_count++;
        agg.total_prompt_tokens += row.prompt_tokens;
        agg.total_completion_tokens += row.completion_tokens;
    }
    if (agg.scored > 0) {
        agg.em_accuracy = static_cast<double>(em_count) / agg.scored;
        agg.ex_accuracy = static_cast<double>(ex_count) / agg.scored;
        agg.avg_prompt_tokens = static_cast<double>(agg.total_prompt_tokens) / agg.scored;
    }
    if (stat_rows > 0) {
        agg.question_jaccard_avg = qj_sum / stat_rows;
        agg.query_jaccard_avg = sj_sum / stat_rows;
    }
    if (auto price = prices.find(model_id)) {
        agg.total_cost = agg.total_prompt_tokens / 1000.0 * price->prompt_per_1k +
                         agg.total_completion_tokens / 1000.0 * price->completion_per_1k;
    } else {
        report.cost_priced = false;
    }
    return report;
}

std::string report_to_json(const EvalReport& report) {
    ordered_json per = ordered_json::array();
    for (const auto& row : report.per_instance) {
        per.push_back(ordered_json{{"instance_id", row.instance_id},
                                   {"em", row.em},
                                   {"ex", row.ex},
                                   {"prompt_tokens", row.prompt_tokens},
                                   {"completion_tokens", row.completion_tokens},
                                   {"examples_included", row.examples_included},
                                   {"question_jaccard_avg", row.question_jaccard_avg},
                                   {"query_jaccard_avg", row.query_jaccard_avg},
                                   {"error", row.error},
                                   {"missing", row.missing},
                                   {"excluded", row.excluded}});
    }
    ordered_json agg{{"em_accuracy", report.aggregates.em_accuracy},
                     {"ex_accuracy", report.aggregates.ex_accuracy},
                     {"avg_prompt_tokens", report.aggregates.avg_prompt_tokens},
                     {"total_prompt_tokens", report.aggregates.total_prompt_tokens},
                     {"total_completion_tokens", report.aggregates.total_completion_tokens},
                     {"total_cost", report.aggregates.total_cost},
                     {"question_jaccard_avg", report.aggregates.question_jaccard_avg},
                     {"query_jaccard_avg", report.aggregates.query_jaccard_avg},
                     {"scored", report.aggregates.scored},
                     {"excluded", report.aggregates.excluded},
                     {"missing", report.aggregates.missing}};
    ordered_json j{{"model_id", report.model_id},
                   {"token_counter", report.token_counter},
                   {"cost_priced", report.cost_priced},
                   {"per_instance", per},
                   {"aggregates", agg}};
    return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
    json j = json::parse(text);
    EvalReport report;
    report.model_id = j.value("model_id", "");
    report.token_counter = j.value("token_counter", "");
    report.cost_priced = j.value("cost_priced", true);
    for (const auto& r : j.at("per_instance")) {
        InstanceReport row;
        row.instance_id = r.at("instance_id").get<std::string>();
        row.em = r.value("em", false);
        row.ex = r.value("ex", false);
        row.prompt_tokens = r.value("prompt_tokens", 0);
        row.completion_tokens = r.value("completion_tokens", 0);
        row.examples_included = r.value("examples_included", 0);
        row.question_jaccard_avg = r.value("question_jaccard_avg", 0.0);
        row.query_jaccard_avg = r.value("query_jaccard_avg", 0.0);
        row.error = r.value("error", "");
        row.missing = r.value("missing", false);
        row.excluded = r.value("excluded", false);
        report.per_instance.push_back(std::move(row));
    }
    const auto& a = j.at("aggregates");
    report.aggregates.em_accuracy = a.value("em_accuracy", 0.0);
    report.aggregates.ex_accuracy = a.value("ex_accuracy", 0.0);
    report.aggregates.avg_prompt_tokens = a.value("avg_prompt_tokens", 0.0);
    report.aggregates.total_prompt_tokens = a.value("total_prompt_tokens", 0LL);
    report.aggregates.total_completion_tokens = a.value("total_completion_tokens", 0LL);
    report.aggregates.total_cost = a.value("total_cost", 0.0);
    report.aggregates.question_jaccard_avg = a.value("question_jaccard_avg", 0.0);
    report.aggregates.query_jaccard_avg = a.value("query_jaccard_avg", 0.0);
    report.aggregates.scored = a.value("scored", 0);
    report.aggregates.excluded = a.value("excluded", 0);
    report.aggregates.missing = a.value("missing", 0);
    return report;
}

std::string report_to_table(const EvalReport& report) {
    std::ostringstream os;
    char line[160];
    const auto& a = report.aggregates;
    os << "== evaluation report ==\n";
    if (!report.model_id.empty()) os << "model:           " << report.model_id << "\n";
    if (!report.token_counter.empty()) os << "token counter:   " << report.token_counter << "\n";
    std::snprintf(line, sizeof(line), "EM accuracy:     %.4f\n", a.em_accuracy);
    os << line;
    std::snprintf(line, sizeof(line), "EX accuracy:     %.4f\n", a.ex_accuracy);
    os << line;
    std::snprintf(line, sizeof(line), "avg prompt toks: %.1f\n", a.avg_prompt_tokens);
    os << line;
    os << "total tokens:    " << a.total_prompt_tokens << " prompt / "
       << a.total_completion_tokens << " completion\n";
    if (report.cost_priced) {
        std::snprintf(line, sizeof(line), "total cost:      %.4f\n", a.total_cost);
        os << line;
    } else {
        os << "total cost:      (model not in price sheet)\n";
    }
    std::snprintf(line, sizeof(line), "question sim:    %.2f\n", a.question_jaccard_avg);
    os << line;
    std::snprintf(line, sizeof(line), "query sim:       %.2f\n", a.query_jaccard_avg);
    os << line;
    os << "instances:       " << a.scored << " scored, " << a.missing << " missing, "
       << a.excluded << " excluded\n";
    if (a.runtime_seconds > 0) {
        std::snprintf(line, sizeof(line), "runtime:         %.2fs\n", a.runtime_seconds);
        os << line;
    }
    return os.str();
}

std::vector<Prediction> load_predictions(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw LoadError("cannot open predictions file " + file.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw LoadError("malformed predictions file: " + std::string(e.what()));
    }
    std::vector<Prediction> out;
    for (const auto& r : j) {
        Prediction p;
        p.instance_id = r.at("instance_id").get<std::string>();
        p.sql = r.value("sql", "");
        p.prompt_tokens = r.value("prompt_tokens", 0);
        p.completion_tokens = r.value("completion_tokens", 0);
        p.examples_included = r.value("examples_included", 0);
        p.question_jaccard_avg = r.value("question_jaccard_avg", 0.0);
        p.query_jaccard_avg = r.value("query_jaccard_avg", 0.0);
        p.error = r.value("error", "");
        out.push_back(std::move(p));
    }
    return out;
}

void save_predictions(const std::filesystem::path& file, const std::vector<Prediction>& preds) {
    ordered_json j = ordered_json::array();
    for (const auto& p : preds) {
        j.push_back(ordered_json{{"instance_id", p.instance_id},
                                 {"sql", p.sql},
                                 {"prompt_tokens", p.prompt_tokens},
                                 {"completion_tokens", p.completion_tokens},
                                 {"examples_included", p.examples_included},
                                 {"question_jaccard_avg", p.question_jaccard_avg},
                                 {"query_jaccard_avg", p.query_jaccard_avg},
                                 {"error", p.error}});
    }
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file);
    if (!out) {
        throw Error("cannot write predictions file " + file.string());
    }
    out << j.dump(2) << "\n";
}

} // namespace dail::eval
