#include <cstdlib>
#include <fstream>

#include "dail/corpus.hpp"
#include "dail/error.hpp"
#include "doctest.h"
#include "support/minidev.hpp"

using namespace dail;
namespace ts = dail::testsupport;

namespace {

void write(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

} // namespace

TEST_SUITE("corpus.load_schemas") {
    TEST_CASE("resolves a catalog entry field by field") {
        // hand-checked against the concert_singer entry of the mini catalog
        auto schemas = load_schemas(ts::source_dir() / "data/minidev/tables.json", "/tmp/dbs");
        const Schema* cs = nullptr;
        for (const auto& s : schemas) {
            if (s.db_id == "concert_singer") cs = &s;
        }
        REQUIRE(cs != nullptr);
        REQUIRE(cs->tables.size() == 4);
        CHECK(cs->tables[0].name == "stadium");
        CHECK(cs->tables[1].name == "singer");
        CHECK(cs->tables[2].name == "concert");
        CHECK(cs->tables[3].name == "singer_in_concert");
        REQUIRE(cs->tables[1].columns.size() == 4);
        CHECK(cs->tables[1].columns[0].name == "Singer_ID");
        CHECK(cs->tables[1].columns[0].is_primary_key);
        CHECK(cs->tables[1].columns[0].sql_type == "int");
        CHECK(cs->tables[1].columns[2].name == "Country");
        CHECK_FALSE(cs->tables[1].columns[2].is_primary_key);
        REQUIRE(cs->foreign_keys.size() == 3);
        CHECK(cs->foreign_keys[0].from_table == "concert");
        CHECK(cs->foreign_keys[0].from_column == "Stadium_ID");
        CHECK(cs->foreign_keys[0].to_table == "stadium");
        CHECK(cs->foreign_keys[0].to_column == "Stadium_ID");
        CHECK(cs->db_file_path ==
              std::filesystem::path("/tmp/dbs/concert_singer/concert_singer.sqlite"));
    }

    TEST_CASE("empty catalog gives empty list") {
        ts::TempDir tmp("catalog");
        write(tmp.path() / "tables.json", "[]");
        CHECK(load_schemas(tmp.path() / "tables.json", tmp.path()).empty());
    }

    TEST_CASE("missing catalog is fatal") {
        CHECK_THROWS_AS(load_schemas("/nonexistent/tables.json", "/tmp"), LoadError);
    }

    TEST_CASE("duplicate table or column names are rejected") {
        ts::TempDir tmp("catalog");
        write(tmp.path() / "dup_table.json", R"([{
            "db_id": "dupdb",
            "table_names_original": ["t", "t"],
            "column_names_original": [[-1, "*"], [0, "a"], [1, "b"]],
            "column_types": ["text", "int", "int"],
            "primary_keys": [],
            "foreign_keys": []
        }])");
        CHECK_THROWS_AS(load_schemas(tmp.path() / "dup_table.json", tmp.path()), LoadError);
        write(tmp.path() / "dup_col.json", R"([{
            "db_id": "dupdb",
            "table_names_original": ["t"],
            "column_names_original": [[-1, "*"], [0, "a"], [0, "a"]],
            "column_types": ["text", "int", "int"],
            "primary_keys": [],
            "foreign_keys": []
        }])");
        LoadStats stats;
        CHECK(load_schemas(tmp.path() / "dup_col.json", tmp.path(), &stats).empty());
        CHECK(stats.skipped == 1);
    }

    TEST_CASE("dangling foreign-key index names the db_id") {
        ts::TempDir tmp("catalog");
        write(tmp.path() / "tables.json", R"([{
            "db_id": "broken_db",
            "table_names_original": ["t"],
            "column_names_original": [[-1, "*"], [0, "a"]],
            "column_types": ["text", "int"],
            "primary_keys": [],
            "foreign_keys": [[1, 99]]
        }])");
        try {
            load_schemas(tmp.path() / "tables.json", tmp.path());
            FAIL("expected LoadError");
        } catch (const LoadError& e) {
            CHECK(std::string(e.what()).find("broken_db") != std::string::npos);
        }
        // with stats: skipped and counted instead of thrown
        LoadStats stats;
        auto schemas = load_schemas(tmp.path() / "tables.json", tmp.path(), &stats);
        CHECK(schemas.empty());
        CHECK(stats.skipped == 1);
        REQUIRE(stats.errors.size() == 1);
        CHECK(stats.errors[0].find("broken_db") != std::string::npos);
    }
}

TEST_SUITE("corpus.load_instances") {
    TEST_CASE("loads records in file order with stable ids") {
        ts::TempDir tmp("minidev");
        auto mini = ts::build_minidev(tmp.path());
        REQUIRE(mini.dev.size() == 20);
        CHECK(mini.dev[0].id == "dev:0");
        CHECK(mini.dev[19].id == "dev:19");
        CHECK(mini.dev[0].db_id == "concert_singer");
        CHECK(mini.dev[0].question == "How many singers do we have?");
        CHECK(mini.pool.instances.size() == 32);

        // deterministic and order-preserving: loading twice yields identical lists
        auto again = load_instances(tmp.path() / "dev.json", mini.schemas);
        REQUIRE(again.size() == mini.dev.size());
        for (std::size_t i = 0; i < again.size(); ++i) {
            CHECK(again[i].id == mini.dev[i].id);
            CHECK(again[i].question == mini.dev[i].question);
            CHECK(again[i].gold_sql == mini.dev[i].gold_sql);
        }
    }

    TEST_CASE("unknown db_id is skipped and counted") {
        ts::TempDir tmp("instances");
        write(tmp.path() / "tables.json", "[]");
        write(tmp.path() / "bad.json",
              R"([{"db_id": "ghost", "question": "How many?", "query": "SELECT 1"}])");
        LoadStats stats;
        auto instances =
            load_instances(tmp.path() / "bad.json", {}, &stats);
        CHECK(instances.empty());
        CHECK(stats.skipped == 1);
        REQUIRE(stats.errors.size() == 1);
        CHECK(stats.errors[0].find("ghost") != std::string::npos);
    }

    TEST_CASE("malformed records are skipped without aborting") {
        ts::TempDir tmp("minidev");
        auto mini = ts::build_minidev(tmp.path());
        write(tmp.path() / "mixed.json", R"([
            {"db_id": "farm", "question": "How many farms are there?", "query": "SELECT count(*) FROM farm"},
            {"db_id": "farm", "question": 42, "query": "SELECT 1"},
            {"db_id": "farm", "question": "", "query": "SELECT 1"},
            {"db_id": "farm", "question": "Bad gold", "query": "SELECT 'unterminated"}
        ])");
        LoadStats stats;
        auto instances = load_instances(tmp.path() / "mixed.json", mini.schemas, &stats);
        REQUIRE(instances.size() == 1);
        CHECK(instances[0].id == "mixed:0");
        CHECK(stats.loaded == 1);
        CHECK(stats.skipped == 3);
    }

    TEST_CASE("every loaded db_id resolves to exactly one schema") {
        ts::TempDir tmp("minidev");
        auto mini = ts::build_minidev(tmp.path());
        SchemaIndex index(mini.schemas);
        for (const auto& inst : mini.dev) {
            CHECK(index.find(inst.db_id) != nullptr);
        }
        for (const auto& inst : mini.pool.instances) {
            CHECK(index.find(inst.db_id) != nullptr);
        }
    }
}

TEST_SUITE("corpus.spider_full") {
    // Runs only when DAIL_SPIDER_DIR points at a real Spider distribution;
    // checks the published split sizes.
    TEST_CASE("published split sizes" * doctest::skip(std::getenv("DAIL_SPIDER_DIR") == nullptr)) {
        const char* dir = std::getenv("DAIL_SPIDER_DIR");
        REQUIRE(dir != nullptr);
        std::filesystem::path root(dir);
        auto schemas = load_schemas(root / "tables.json", root / "database");
        LoadStats dev_stats, train_stats;
        auto dev = load_instances(root / "dev.json", schemas, &dev_stats);
        // the training split ships as two files: 7000 + 1659 = 8659
        auto train = load_instances(root / "train_spider.json", schemas, &train_stats);
        auto others = load_instances(root / "train_others.json", schemas, &train_stats);
        CHECK(dev.size() == 1034);
        CHECK(train.size() + others.size() == 8659);
        CHECK(dev_stats.skipped == 0);
        CHECK(train_stats.skipped == 0);
    }
}

TEST_SUITE("corpus.cross_domain_pool") {
    TEST_CASE("filters the target database, preserving order") {
        CandidatePool pool;
        for (int i = 0; i < 10; ++i) {
            Instance inst;
            inst.id = "p:" + std::to_string(i);
            inst.question = "q";
            inst.gold_sql = "SELECT 1";
            inst.db_id = (i % 3 == 0) ? "target" : "other";
            pool.instances.push_back(inst);
        }
        CandidatePool filtered = cross_domain_pool(pool, "target");
        CHECK(filtered.instances.size() == 6);  // indices 0,3,6,9 removed
        for (const auto& inst : filtered.instances) {
            CHECK(inst.db_id != "target");
        }
        // order preserved
        CHECK(filtered.instances[0].id == "p:1");
        CHECK(filtered.instances[1].id == "p:2");
        CHECK(filtered.instances[2].id == "p:4");
    }

    TEST_CASE("identity when no instance matches, empty stays empty") {
        CandidatePool pool;
        Instance inst;
        inst.id = "p:0";
        inst.db_id = "a";
        pool.instances.push_back(inst);
        CHECK(cross_domain_pool(pool, "b").instances.size() == 1);
        CandidatePool empty;
        CHECK(cross_domain_pool(empty, "a").instances.empty());
    }

    TEST_CASE("property: result never contains the target db") {
        std::vector<std::string> dbs = {"a", "b", "c", "d"};
        for (int trial = 0; trial < 50; ++trial) {
            CandidatePool pool;
            for (int i = 0; i < 20; ++i) {
                Instance inst;
                inst.id = "x:" + std::to_string(i);
                inst.db_id = dbs[static_cast<std::size_t>((trial * 7 + i * 13) % 4)];
                pool.instances.push_back(inst);
            }
            for (const auto& target : dbs) {
                for (const auto& inst : cross_domain_pool(pool, target).instances) {
                    CHECK(inst.db_id != target);
                }
            }
        }
    }
}
