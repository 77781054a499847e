#include "dail/sqlexec.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace dail::sqlexec {
namespace {

sqlite3* handle(void* p) { return static_cast<sqlite3*>(p); }

struct Deadline {
    std::chrono::steady_clock::time_point at;
};

int progress_callback(void* ctx) {
    auto* deadline = static_cast<Deadline*>(ctx);
    return std::chrono::steady_clock::now() > deadline->at ? 1 : 0;
}

} // namespace

std::string SqlValue::repr() const {
    switch (kind) {
        case Kind::Null: return "NULL";
        case Kind::Int: return std::to_string(i);
        case Kind::Real: {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", r);
            return buf;
        }
        case Kind::Text: return "t:" + s;
        case Kind::Blob: return "b:" + s;
    }
    return "";
}

SqliteDb::SqliteDb(const std::filesystem::path& file, bool read_only) {
    sqlite3* db = nullptr;
    int flags = read_only ? SQLITE_OPEN_READONLY : (SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE);
    int rc = sqlite3_open_v2(file.string().c_str(), &db, flags, nullptr);
    if (rc != SQLITE_OK) {
        std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
        if (db) sqlite3_close(db);
        throw ExecError("cannot open database " + file.string() + ": " + msg);
    }
    db_ = db;
}

SqliteDb::~SqliteDb() {
    if (db_) sqlite3_close(handle(db_));
}

QueryResult SqliteDb::query(const std::string& sql, std::chrono::milliseconds timeout) {
    Deadline deadline{std::chrono::steady_clock::now() + timeout};
    sqlite3_progress_handler(handle(db_), 1000, progress_callback, &deadline);

    sqlite3_stmt* stmt = nullptr;
    int rc = sqlite3_prepare_v2(handle(db_), sql.c_str(), -1, &stmt, nullptr);
    if (rc != SQLITE_OK) {
        std::string msg = sqlite3_errmsg(handle(db_));
        sqlite3_progress_handler(handle(db_), 0, nullptr, nullptr);
        throw ExecError("prepare failed: " + msg);
    }

    QueryResult result;
    int ncol = sqlite3_column_count(stmt);
    for (int c = 0; c < ncol; ++c) {
        const char* name = sqlite3_column_name(stmt, c);
        result.columns.push_back(name ? name : "");
    }

    while (true) {
        rc = sqlite3_step(stmt);
        if (rc == SQLITE_ROW) {
            std::vector<SqlValue> row(ncol);
            for (int c = 0; c < ncol; ++c) {
                SqlValue& v = row[c];
                switch (sqlite3_column_type(stmt, c)) {
                    case SQLITE_INTEGER:
                        v.kind = SqlValue::Kind::Int;
                        v.i = sqlite3_column_int64(stmt, c);
                        break;
                    case SQLITE_FLOAT:
                        v.kind = SqlValue::Kind::Real;
                        v.r = sqlite3_column_double(stmt, c);
                        break;
                    case SQLITE_TEXT:
                        v.kind = SqlValue::Kind::Text;
                        v.s = reinterpret_cast<const char*>(sqlite3_column_text(stmt, c));
                        break;
                    case SQLITE_BLOB: {
                        v.kind = SqlValue::Kind::Blob;
                        const void* data = sqlite3_column_blob(stmt, c);
                        int len = sqlite3_column_bytes(stmt, c);
                        v.s.assign(static_cast<const char*>(data), static_cast<std::size_t>(len));
                        break;
                    }
                    default:
                        v.kind = SqlValue::Kind::Null;
                        break;
                }
            }
            result.rows.push_back(std::move(row));
            continue;
        }
        break;
    }
    bool interrupted = (rc == SQLITE_INTERRUPT);
    bool done = (rc == SQLITE_DONE);
    std::string msg = done ? "" : sqlite3_errmsg(handle(db_));
    sqlite3_finalize(stmt);
    sqlite3_progress_handler(handle(db_), 0, nullptr, nullptr);
    if (interrupted) {
        throw TimeoutError("query exceeded timeout");
    }
    if (!done) {
        throw ExecError("step failed: " + msg);
    }
    return result;
}

void SqliteDb::execute_script(const std::string& sql_script) {
    char* err = nullptr;
    int rc = sqlite3_exec(handle(db_), sql_script.c_str(), nullptr, nullptr, &err);
    if (rc != SQLITE_OK) {
        std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        throw ExecError("script failed: " + msg);
    }
}

void create_database_from_sql(const std::filesystem::path& db_path,
                              const std::string& sql_script) {
    std::filesystem::create_directories(db_path.parent_path());
    std::filesystem::remove(db_path);
    SqliteDb db(db_path, /*read_only=*/false);
    db.execute_script(sql_script);
}

std::string result_fingerprint(const QueryResult& result) {
    std::ostringstream os;
    os << result.columns.size() << "#";
    std::vector<std::string> rows;
    rows.reserve(result.rows.size());
    for (const auto& row : result.rows) {
        std::string r;
        for (const auto& v : row) {
            r += v.repr();
            r += '\x1f';
        }
        rows.push_back(std::move(r));
    }
    // order-insensitive: voting compares whole result sets
    std::sort(rows.begin(), rows.end());
    for (const auto& r : rows) os << r << '\x1e';
    return os.str();
}

} // namespace dail::sqlexec
