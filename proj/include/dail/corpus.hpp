#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dail {

struct Column {
    std::string name;
    std::string sql_type;
    bool is_primary_key = false;
};

struct Table {
    std::string name;
    std::vector<Column> columns;
};

// Resolved to qualified names at load time; downstream code never sees
// Spider's column-index pairs.
struct ForeignKey {
    std::string from_table;
    std::string from_column;
    std::string to_table;
    std::string to_column;
};

struct Schema {
    std::string db_id;
    std::vector<Table> tables;
    std::vector<ForeignKey> foreign_keys;
    std::filesystem::path db_file_path;

    const Table* find_table(std::string_view name) const;
    const Column* find_column(std::string_view table, std::string_view column) const;
};

// One (question, gold SQL, db_id) triple. `id` is "<file-stem>:<record-index>",
// the deterministic tie-break key used everywhere downstream.
struct Instance {
    std::string id;
    std::string question;
    std::string gold_sql;
    std::string db_id;
};

struct CandidatePool {
    std::vector<Instance> instances;
    std::string source_split;
};

struct LoadStats {
    std::size_t loaded = 0;
    std::size_t skipped = 0;
    std::vector<std::string> errors;
};

// Lookup table over loaded schemas; values are owned elsewhere and immutable.
class SchemaIndex {
public:
    SchemaIndex() = default;
    explicit SchemaIndex(const std::vector<Schema>& schemas);

    const Schema* find(const std::string& db_id) const;
    // Throws LoadError when db_id is unknown.
    const Schema& at(const std::string& db_id) const;

private:
    std::unordered_map<std::string, const Schema*> by_id_;
};

// Reads a Spider-format table catalog. Foreign keys arrive as flat column-index
// pairs and are resolved to table.column names here. A malformed entry is
// skipped and counted when `stats` is given, otherwise it raises LoadError
// naming the db_id.
std::vector<Schema> load_schemas(const std::filesystem::path& catalog_path,
                                 const std::filesystem::path& db_root,
                                 LoadStats* stats = nullptr);

// Reads a Spider-format instance file in file order. Records with an unknown
// db_id, an empty question, or SQL the lexer rejects are skipped and counted.
std::vector<Instance> load_instances(const std::filesystem::path& file,
                                     const std::vector<Schema>& schemas,
                                     LoadStats* stats = nullptr);

// Keeps exactly the instances whose db_id differs from target_db, order preserved.
CandidatePool cross_domain_pool(const CandidatePool& pool, const std::string& target_db);

} // namespace dail
