#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dail/error.hpp"

namespace dail::sqlexec {

class ExecError : public Error {
public:
    using Error::Error;
};

class TimeoutError : public ExecError {
public:
    using ExecError::ExecError;
};

struct SqlValue {
    enum class Kind { Null, Int, Real, Text, Blob };
    Kind kind = Kind::Null;
    std::int64_t i = 0;
    double r = 0.0;
    std::string s;

    bool numeric() const { return kind == Kind::Int || kind == Kind::Real; }
    double as_double() const { return kind == Kind::Int ? static_cast<double>(i) : r; }
    std::string repr() const;  // canonical text form, used for grouping/sorting
};

struct QueryResult {
    std::vector<std::string> columns;
    std::vector<std::vector<SqlValue>> rows;
};

// One read-only connection per comparison; predicted SQL is untrusted text.
class SqliteDb {
public:
    explicit SqliteDb(const std::filesystem::path& file, bool read_only = true);
    ~SqliteDb();
    SqliteDb(const SqliteDb&) = delete;
    SqliteDb& operator=(const SqliteDb&) = delete;

    QueryResult query(const std::string& sql,
                      std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));

    void execute_script(const std::string& sql_script);  // DDL/DML, read-write handles only

private:
    void* db_ = nullptr;  // sqlite3*
};

// Builds a database file from a SQL script (used by the mkdb tool and tests).
void create_database_from_sql(const std::filesystem::path& db_path, const std::string& sql_script);

// Canonical one-line fingerprint of a result (column count + row reprs);
// identical fingerprints mean identical execution output.
std::string result_fingerprint(const QueryResult& result);

} // namespace dail::sqlexec
