#include "dail/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "dail/error.hpp"
#include "dail/sqlkit.hpp"
#include "json.hpp"

namespace dail {
namespace {

using nlohmann::json;

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw LoadError("cannot open " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw LoadError("malformed JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

std::string record_error(LoadStats* stats, const std::string& message) {
    if (stats) {
        stats->skipped++;
        stats->errors.push_back(message);
        return message;
    }
    throw LoadError(message);
}

Schema schema_from_entry(const json& entry, const std::filesystem::path& db_root) {
    Schema schema;
    schema.db_id = entry.at("db_id").get<std::string>();
    const auto& table_names = entry.at("table_names_original");
    const auto& column_names = entry.at("column_names_original");
    const auto& column_types = entry.at("column_types");

    schema.tables.resize(table_names.size());
    for (std::size_t t = 0; t < table_names.size(); ++t) {
        schema.tables[t].name = table_names[t].get<std::string>();
    }

    // column_names_original is a flat list of [table_index, name]; index 0 is the
    // "*" pseudo-column with table index -1. primary_keys/foreign_keys refer to
    // positions in this flat list.
    struct FlatColumn {
        int table = -1;
        std::string name;
    };
    std::vector<FlatColumn> flat(column_names.size());
    for (std::size_t c = 0; c < column_names.size(); ++c) {
        flat[c].table = column_names[c].at(0).get<int>();
        flat[c].name = column_names[c].at(1).get<std::string>();
        if (flat[c].table < 0) {
            continue;
        }
        if (flat[c].table >= static_cast<int>(schema.tables.size())) {
            throw LoadError("db " + schema.db_id + ": column " + flat[c].name +
                            " references table index " + std::to_string(flat[c].table) +
                            " out of range");
        }
        Column col;
        col.name = flat[c].name;
        if (c < column_types.size()) {
            col.sql_type = column_types[c].get<std::string>();
        }
        schema.tables[flat[c].table].columns.push_back(std::move(col));
    }

    if (entry.contains("primary_keys")) {
        for (const auto& pk : entry.at("primary_keys")) {
            // Spider occasionally lists composite keys as nested arrays.
            std::vector<int> indices;
            if (pk.is_array()) {
                for (const auto& p : pk) indices.push_back(p.get<int>());
            } else {
                indices.push_back(pk.get<int>());
            }
            for (int idx : indices) {
                if (idx <= 0 || idx >= static_cast<int>(flat.size()) || flat[idx].table < 0) {
                    throw LoadError("db " + schema.db_id + ": primary key column index " +
                                    std::to_string(idx) + " out of range");
                }
                auto& table = schema.tables[flat[idx].table];
                for (auto& col : table.columns) {
                    if (col.name == flat[idx].name) {
                        col.is_primary_key = true;
                    }
                }
            }
        }
    }

    if (entry.contains("foreign_keys")) {
        for (const auto& fk : entry.at("foreign_keys")) {
            int from = fk.at(0).get<int>();
            int to = fk.at(1).get<int>();
            for (int idx : {from, to}) {
                if (idx <= 0 || idx >= static_cast<int>(flat.size()) || flat[idx].table < 0) {
                    throw LoadError("db " + schema.db_id + ": foreign key column index " +
                                    std::to_string(idx) + " out of range");
                }
            }
            ForeignKey resolved;
            resolved.from_table = schema.tables[flat[from].table].name;
            resolved.from_column = flat[from].name;
            resolved.to_table = schema.tables[flat[to].table].name;
            resolved.to_column = flat[to].name;
            schema.foreign_keys.push_back(std::move(resolved));
        }
    }

    std::set<std::string> seen_tables;
    for (const auto& table : schema.tables) {
        if (!seen_tables.insert(table.name).second) {
            throw LoadError("db " + schema.db_id + ": duplicate table name " + table.name);
        }
        std::set<std::string> seen_columns;
        for (const auto& col : table.columns) {
            if (!seen_columns.insert(col.name).second) {
                throw LoadError("db " + schema.db_id + ": duplicate column " + table.name + "." +
                                col.name);
            }
        }
    }

    schema.db_file_path = db_root / schema.db_id / (schema.db_id + ".sqlite");
    return schema;
}

} // namespace

const Table* Schema::find_table(std::string_view name) const {
    for (const auto& t : tables) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

const Column* Schema::find_column(std::string_view table, std::string_view column) const {
    const Table* t = find_table(table);
    if (!t) return nullptr;
    for (const auto& c : t->columns) {
        if (c.name == column) return &c;
    }
    return nullptr;
}

SchemaIndex::SchemaIndex(const std::vector<Schema>& schemas) {
    for (const auto& s : schemas) {
        by_id_.emplace(s.db_id, &s);
    }
}

const Schema* SchemaIndex::find(const std::string& db_id) const {
    auto it = by_id_.find(db_id);
    return it == by_id_.end() ? nullptr : it->second;
}

const Schema& SchemaIndex::at(const std::string& db_id) const {
    const Schema* s = find(db_id);
    if (!s) {
        throw LoadError("unknown db_id: " + db_id);
    }
    return *s;
}

std::vector<Schema> load_schemas(const std::filesystem::path& catalog_path,
                                 const std::filesystem::path& db_root,
                                 LoadStats* stats) {
    json catalog = read_json_file(catalog_path);
    if (!catalog.is_array()) {
        throw LoadError("schema catalog " + catalog_path.string() + " is not an array");
    }
    std::vector<Schema> schemas;
    schemas.reserve(catalog.size());
    for (const auto& entry : catalog) {
        try {
            schemas.push_back(schema_from_entry(entry, db_root));
            if (stats) stats->loaded++;
        } catch (const LoadError& e) {
            record_error(stats, e.what());
        } catch (const json::exception& e) {
            std::string db = entry.contains("db_id") && entry["db_id"].is_string()
                                 ? entry["db_id"].get<std::string>()
                                 : "<unknown>";
            record_error(stats, "db " + db + ": malformed catalog entry: " + e.what());
        }
    }
    return schemas;
}

std::vector<Instance> load_instances(const std::filesystem::path& file,
                                     const std::vector<Schema>& schemas,
                                     LoadStats* stats) {
    json records = read_json_file(file);
    if (!records.is_array()) {
        throw LoadError("instance file " + file.string() + " is not an array");
    }
    SchemaIndex index(schemas);
    std::string source = file.stem().string();

    std::vector<Instance> instances;
    instances.reserve(records.size());
    std::size_t record_index = 0;
    for (const auto& rec : records) {
        std::string id = source + ":" + std::to_string(record_index);
        record_index++;
        std::string problem;
        try {
            Instance inst;
            inst.id = id;
            inst.question = rec.at("question").get<std::string>();
            inst.gold_sql = rec.at("query").get<std::string>();
            inst.db_id = rec.at("db_id").get<std::string>();
            if (inst.question.empty()) {
                problem = "empty question";
            } else if (!index.find(inst.db_id)) {
                problem = "unknown db_id " + inst.db_id;
            } else if (!sqlkit::lexes(inst.gold_sql)) {
                problem = "gold SQL does not tokenize";
            }
            if (problem.empty()) {
                instances.push_back(std::move(inst));
                if (stats) stats->loaded++;
                continue;
            }
        } catch (const json::exception& e) {
            problem = std::string("malformed record: ") + e.what();
        }
        if (stats) {
            stats->skipped++;
            stats->errors.push_back(id + ": " + problem);
        }
        // Per-record failures never abort a load; they are skipped and counted.
    }
    return instances;
}

CandidatePool cross_domain_pool(const CandidatePool& pool, const std::string& target_db) {
    CandidatePool out;
    out.source_split = pool.source_split;
    out.instances.reserve(pool.instances.size());
    for (const auto& inst : pool.instances) {
        if (inst.db_id != target_db) {
            out.instances.push_back(inst);
        }
    }
    return out;
}

} // namespace dail
