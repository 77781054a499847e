// Builds sqlite database files for a Spider-layout dataset directory:
// every <dir>/sql/<db_id>.sql script becomes <dir>/database/<db_id>/<db_id>.sqlite.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dail/sqlexec.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: mkdb <dataset-dir>\n";
        return 2;
    }
    fs::path root = argv[1];
    fs::path sql_dir = root / "sql";
    if (!fs::is_directory(sql_dir)) {
        std::cerr << "no sql/ directory under " << root << "\n";
        return 2;
    }
    int built = 0;
    for (const auto& entry : fs::directory_iterator(sql_dir)) {
        if (entry.path().extension() != ".sql") continue;
        std::string db_id = entry.path().stem().string();
        std::ifstream in(entry.path());
        std::string script((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        fs::path out = root / "database" / db_id / (db_id + ".sqlite");
        try {
            dail::sqlexec::create_database_from_sql(out, script);
        } catch (const std::exception& e) {
            std::cerr << db_id << ": " << e.what() << "\n";
            return 1;
        }
        std::cout << "built " << out.string() << "\n";
        ++built;
    }
    std::cout << built << " database(s) built\n";
    return built > 0 ? 0 : 1;
}
