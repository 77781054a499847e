#include "dail/cli.hpp"

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "dail/error.hpp"
#include "dail/masking.hpp"
#include "dail/pipeline.hpp"
#include "dail/sqlkit.hpp"
#include "json.hpp"

namespace dail::cli {
namespace {

using nlohmann::json;

struct CommonArgs {
    std::string config_file;
    std::vector<std::string> overrides;  // key=value, dotted keys
    int jobs = 0;
    std::string backend;
    std::string record_dir;
    std::string replay_path;
    std::string out_dir;
};

// Applies "a.b.c=value" overrides onto the config JSON before parsing.
json apply_overrides(json base, const std::vector<std::string>& overrides) {
    for (const std::string& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        }
        std::string key = kv.substr(0, eq);
        std::string value = kv.substr(eq + 1);
        json* node = &base;
        std::size_t start = 0;
        while (true) {
            auto dot = key.find('.', start);
            std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
            if (part.empty()) throw ConfigError("bad --set key '" + key + "'");
            if (dot == std::string::npos) {
                json parsed;
                try {
                    parsed = json::parse(value);
                    if (!parsed.is_number() && !parsed.is_boolean() && !parsed.is_null()) {
                        parsed = value;
                    }
                } catch (const json::exception&) {
                    parsed = value;
                }
                (*node)[part] = parsed;
                break;
            }
            node = &(*node)[part];
            start = dot + 1;
        }
    }
    return base;
}

pipeline::RunConfig load_config(const CommonArgs& args) {
    json base = json::object();
    if (!args.config_file.empty()) {
        std::ifstream in(args.config_file);
        if (!in) throw ConfigError("cannot open config file " + args.config_file);
        try {
            in >> base;
        } catch (const json::exception& e) {
            throw ConfigError("malformed config JSON: " + std::string(e.what()));
        }
    }
    base = apply_overrides(base, args.overrides);
    if (!args.backend.empty()) base["backend"]["type"] = args.backend;
    if (args.jobs > 0) base["jobs"] = args.jobs;
    if (!args.out_dir.empty()) base["output_dir"] = args.out_dir;
    if (!args.record_dir.empty()) base["record_fixtures"] = args.record_dir;
    if (!args.replay_path.empty()) {
        base["backend"]["type"] = "replay";
        base["backend"]["fixtures"] = args.replay_path;
    }
    return pipeline::config_from_json_text(base.dump());
}

struct Dataset {
    std::vector<Schema> schemas;
    std::vector<Instance> instances;
    CandidatePool pool;
    LoadStats schema_stats, instance_stats, pool_stats;
};

Dataset load_dataset(const pipeline::RunConfig& cfg, bool need_pool) {
    if (cfg.dataset.tables.empty()) throw ConfigError("dataset.tables is required");
    Dataset ds;
    ds.schemas = load_schemas(cfg.dataset.tables, cfg.dataset.db_root, &ds.schema_stats);
    if (!cfg.dataset.instances.empty()) {
        ds.instances = load_instances(cfg.dataset.instances, ds.schemas, &ds.instance_stats);
    }
    if (need_pool && !cfg.dataset.pool.empty()) {
        ds.pool.instances = load_instances(cfg.dataset.pool, ds.schemas, &ds.pool_stats);
        ds.pool.source_split = cfg.dataset.pool.stem().string();
    }
    return ds;
}

int cmd_prepare(const CommonArgs& args) {
    pipeline::RunConfig cfg = load_config(args);
    Dataset ds = load_dataset(cfg, /*need_pool=*/true);
    std::cout << "schemas:   " << ds.schemas.size() << " loaded, " << ds.schema_stats.skipped
              << " skipped\n";
    std::cout << "instances: " << ds.instances.size() << " loaded, " << ds.instance_stats.skipped
              << " skipped\n";
    std::cout << "pool:      " << ds.pool.instances.size() << " loaded, " << ds.pool_stats.skipped
              << " skipped\n";
    for (const auto& e : ds.schema_stats.errors) std::cout << "  schema error: " << e << "\n";
    for (const auto& e : ds.instance_stats.errors) std::cout << "  instance error: " << e << "\n";
    for (const auto& e : ds.pool_stats.errors) std::cout << "  pool error: " << e << "\n";

    // warm the embedding cache with masked pool questions
    pipeline::Services services = pipeline::build_services(cfg);
    SchemaIndex index(ds.schemas);
    std::size_t warmed = 0;
    for (const auto& inst : ds.pool.instances) {
        services.embedder->embed(masking::mask_with_schema(inst.question, index.at(inst.db_id)).masked);
        ++warmed;
    }
    std::cout << "embedding cache warmed with " << warmed << " masked questions ("
              << services.embedder->model_id() << ")\n";
    return 0;
}

int cmd_run(const CommonArgs& args) {
    pipeline::RunConfig cfg = load_config(args);
    if (cfg.dataset.instances.empty()) throw ConfigError("dataset.instances is required for run");
    Dataset ds = load_dataset(cfg, /*need_pool=*/true);
    SchemaIndex index(ds.schemas);
    pipeline::Services services = pipeline::build_services(cfg);
    pipeline::RunResult result =
        pipeline::run_dataset(ds.instances, ds.pool, index, cfg, services);
    std::cout << eval::report_to_table(result.report);
    if (!cfg.output_dir.empty()) {
        std::cout << "run directory: " << cfg.output_dir.string() << "\n";
    }
    return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& predictions_file) {
    pipeline::RunConfig cfg = load_config(args);
    if (cfg.dataset.instances.empty()) {
        throw ConfigError("dataset.instances is required for evaluate");
    }
    Dataset ds = load_dataset(cfg, /*need_pool=*/false);
    SchemaIndex index(ds.schemas);
    auto predictions = eval::load_predictions(predictions_file);
    eval::PriceTable prices;
    if (!cfg.prices.empty()) prices = eval::PriceTable::from_file(cfg.prices);
    eval::EvalReport report = eval::evaluate_run(predictions, ds.instances, index, prices,
                                                 cfg.exec, cfg.backend.model, cfg.token_counter);
    std::cout << eval::report_to_table(report);
    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        std::ofstream out(cfg.output_dir / "report.json");
        out << eval::report_to_json(report);
        std::cout << "report written to " << (cfg.output_dir / "report.json").string() << "\n";
    }
    return 0;
}

int cmd_report(const std::string& report_file) {
    std::ifstream in(report_file);
    if (!in) throw ConfigError("cannot open report file " + report_file);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    eval::EvalReport report = eval::report_from_json(text);
    std::cout << eval::report_to_table(report);
    // token-efficiency view: accuracy against average prompt tokens
    std::cout << "\n== token efficiency ==\n";
    char line[128];
    std::snprintf(line, sizeof(line), "%-22s %10s %10s\n", "", "EX", "avg tokens");
    std::cout << line;
    std::snprintf(line, sizeof(line), "%-22s %10.4f %10.1f\n", report.model_id.c_str(),
                  report.aggregates.ex_accuracy, report.aggregates.avg_prompt_tokens);
    std::cout << line;
    return 0;
}

int cmd_export_sft(const CommonArgs& args, const std::string& out_file) {
    pipeline::RunConfig cfg = load_config(args);
    if (cfg.dataset.instances.empty()) {
        throw ConfigError("dataset.instances is required for export-sft");
    }
    Dataset ds = load_dataset(cfg, /*need_pool=*/false);
    SchemaIndex index(ds.schemas);
    std::size_t skipped = 0;
    std::size_t written =
        pipeline::export_sft_pairs(ds.instances, index, cfg.representation, out_file, &skipped);
    std::cout << "wrote " << written << " prompt/response pairs to " << out_file;
    if (skipped > 0) std::cout << " (" << skipped << " skipped)";
    std::cout << "\n";
    return 0;
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Text-to-SQL prompt engineering toolkit"};
    app.require_subcommand(1);

    CommonArgs common;
    app.add_option("--config", common.config_file, "run configuration file (JSON)");
    app.add_option("--set", common.overrides, "override a config key (a.b.c=value)");
    app.add_option("--jobs", common.jobs, "worker threads");
    app.add_option("--backend", common.backend, "backend type override");
    app.add_option("--record", common.record_dir, "record completions into this fixture file");
    app.add_option("--replay", common.replay_path, "replay completions from this fixture file/dir");
    app.add_option("--out", common.out_dir, "run output directory");

    auto* prepare = app.add_subcommand("prepare", "validate dataset paths and warm caches");
    auto* run_cmd = app.add_subcommand("run", "run a full benchmark pass");
    auto* record = app.add_subcommand("record", "run while recording fixtures (needs --record)");
    auto* replay = app.add_subcommand("replay", "run against recorded fixtures (needs --replay)");
    auto* evaluate = app.add_subcommand("evaluate", "score an existing predictions file");
    std::string predictions_file;
    evaluate->add_option("--predictions", predictions_file, "predictions JSON file")->required();
    auto* report = app.add_subcommand("report", "render report tables from a report.json");
    std::string report_file;
    report->add_option("--report", report_file, "report JSON file")->required();
    auto* export_sft = app.add_subcommand("export-sft", "write zero-shot prompt/response pairs");
    std::string sft_out = "sft_pairs.jsonl";
    export_sft->add_option("--sft-out", sft_out, "output JSONL path");

    // let global options (--out, --set, ...) appear after the subcommand too
    for (auto* sub : app.get_subcommands({})) {
        sub->fallthrough(true);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (prepare->parsed()) return cmd_prepare(common);
        if (run_cmd->parsed()) return cmd_run(common);
        if (record->parsed()) {
            if (common.record_dir.empty()) throw ConfigError("record requires --record <file>");
            return cmd_run(common);
        }
        if (replay->parsed()) {
            if (common.replay_path.empty()) throw ConfigError("replay requires --replay <file>");
            return cmd_run(common);
        }
        if (evaluate->parsed()) return cmd_evaluate(common, predictions_file);
        if (report->parsed()) return cmd_report(report_file);
        if (export_sft->parsed()) return cmd_export_sft(common, sft_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace dail::cli
