// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// required criterion fails. Each criterion re-derives its expectations
// independently of the library path it checks.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include <sqlite3.h>

#include "dail/cli.hpp"
#include "dail/embedding.hpp"
#include "dail/error.hpp"
#include "dail/eval.hpp"
#include "dail/llm.hpp"
#include "dail/masking.hpp"
#include "dail/pipeline.hpp"
#include "dail/promptgen.hpp"
#include "dail/selection.hpp"
#include "dail/sqlkit.hpp"
#include "../support/minidev.hpp"

using namespace dail;
namespace ts = dail::testsupport;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message) {
    if (!condition) throw CheckFailure(message);
}

std::string golden(const std::string& name) {
    std::string text = ts::read_file(ts::source_dir() / "fixtures" / "golden" / name);
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
}

// ---------------------------------------------------------------------------
// criterion 1: golden prompt fidelity
// ---------------------------------------------------------------------------
void criterion_golden_prompts() {
    auto schemas = load_schemas(ts::source_dir() / "data/minidev/tables.json", "/tmp/db");
    SchemaIndex index(schemas);
    const Schema& continents = index.at("continents_countries");
    std::string question = "How many continents are there?";

    using promptgen::Representation;
    auto rep_of = [](Representation r) { return promptgen::RepresentationConfig::canonical(r); };
    require(promptgen::render_question(rep_of(Representation::Basic), question, continents) ==
                golden("listing1.txt"),
            "listing 1 (BS_P) mismatch");
    require(promptgen::render_question(rep_of(Representation::TextRep), question, continents) ==
                golden("listing2.txt"),
            "listing 2 (TR_P) mismatch");
    require(promptgen::render_question(rep_of(Representation::OpenAIDemo), question, continents) ==
                golden("listing3.txt"),
            "listing 3 (OD_P) mismatch");
    require(promptgen::render_question(rep_of(Representation::CodeRep), question, continents) ==
                golden("listing4.txt"),
            "listing 4 (CR_P) mismatch");
    require(promptgen::render_question(rep_of(Representation::AlpacaSFT), question, continents) ==
                golden("listing5.txt"),
            "listing 5 (AS_P) mismatch");

    Instance authors;
    authors.id = "p:0";
    authors.db_id = "authors";
    authors.question = "How many authors are there?";
    authors.gold_sql = "SELECT count(*) FROM authors";
    Instance farm;
    farm.id = "p:1";
    farm.db_id = "farm";
    farm.question = "How many farms are there?";
    farm.gold_sql = "SELECT count(*) FROM farm";
    std::vector<Instance> examples = {authors, farm};
    auto cr = rep_of(Representation::CodeRep);
    std::string target = promptgen::render_question(cr, question, continents);

    auto organized = [&](promptgen::Organization kind) {
        promptgen::OrganizationConfig org{kind, 2};
        return promptgen::render_examples(org, cr, examples, index) + "\n\n" + target;
    };
    require(organized(promptgen::Organization::FullInformation) == golden("listing6.txt"),
            "listing 6 (FI_O) mismatch");
    require(organized(promptgen::Organization::SqlOnly) == golden("listing7.txt"),
            "listing 7 (SO_O) mismatch");
    require(organized(promptgen::Organization::DailPairs) == golden("listing8.txt"),
            "listing 8 (DAIL_O) mismatch");
}

// ---------------------------------------------------------------------------
// criterion 2: oracle end-to-end, every representation × organization
// ---------------------------------------------------------------------------
void criterion_oracle_end_to_end() {
    ts::TempDir tmp("acc_oracle");
    auto mini = ts::build_minidev(tmp.path());
    SchemaIndex index(mini.schemas);
    require(mini.dev.size() == 20, "mini-dev must hold exactly 20 instances");

    using promptgen::Organization;
    using promptgen::Representation;
    for (Representation rep : {Representation::Basic, Representation::TextRep,
                               Representation::OpenAIDemo, Representation::CodeRep,
                               Representation::AlpacaSFT}) {
        for (Organization org : {Organization::FullInformation, Organization::SqlOnly,
                                 Organization::DailPairs}) {
            pipeline::RunConfig cfg = pipeline::RunConfig::canonical_dail();
            cfg.dataset.tables = tmp.path() / "tables.json";
            cfg.dataset.db_root = tmp.path() / "database";
            cfg.representation = promptgen::RepresentationConfig::canonical(rep);
            cfg.organization = {org, 3};
            cfg.selection.k = 3;
            cfg.backend.kind = pipeline::BackendKind::Oracle;
            cfg.backend.model = "offline-oracle";
            pipeline::Services services = pipeline::build_services(cfg);
            auto result = pipeline::run_dataset(mini.dev, mini.pool, index, cfg, services);
            std::string combo = promptgen::to_string(rep) + " x " + promptgen::to_string(org);
            require(result.report.aggregates.em_accuracy == 1.0, combo + ": EM != 1.0");
            require(result.report.aggregates.ex_accuracy == 1.0, combo + ": EX != 1.0");
        }
    }
}

// ---------------------------------------------------------------------------
// criterion 3: EM/EX differential oracle on the 50-pair corpus
// ---------------------------------------------------------------------------
struct DiffPair {
    const char* db;
    const char* gold;
    const char* pred;
    bool em_expected;  // clause-set comparison done by hand
};

// Independent execution oracle: raw sqlite3 text rows, compared as sorted
// multisets unless the gold query carries a top-level ORDER BY (detected by
// a paren-depth scan over the lowercased text).
namespace exec_oracle {

bool text_has_top_level_order_by(const std::string& sql) {
    std::string lower;
    for (char c : sql) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    int depth = 0;
    for (std::size_t i = 0; i + 7 < lower.size(); ++i) {
        if (lower[i] == '(') ++depth;
        if (lower[i] == ')') --depth;
        if (depth == 0 && lower.compare(i, 8, "order by") == 0) return true;
    }
    return false;
}

struct Rows {
    bool ok = false;
    std::vector<std::vector<std::string>> rows;
};

Rows run(const std::filesystem::path& db_file, const std::string& sql) {
    Rows out;
    sqlite3* db = nullptr;
    if (sqlite3_open_v2(db_file.string().c_str(), &db, SQLITE_OPEN_READONLY, nullptr) !=
        SQLITE_OK) {
        if (db) sqlite3_close(db);
        return out;
    }
    sqlite3_stmt* stmt = nullptr;
    if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
        sqlite3_close(db);
        return out;
    }
    int ncol = sqlite3_column_count(stmt);
    int rc;
    while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
        std::vector<std::string> row;
        for (int c = 0; c < ncol; ++c) {
            switch (sqlite3_column_type(stmt, c)) {
                case SQLITE_NULL:
                    row.push_back("<null>");
                    break;
                case SQLITE_FLOAT: {
                    char buf[64];
                    // quantize so tiny fp noise cannot split equal values
                    std::snprintf(buf, sizeof(buf), "%.9g", sqlite3_column_double(stmt, c));
                    row.push_back(buf);
                    break;
                }
                default:
                    row.push_back(
                        reinterpret_cast<const char*>(sqlite3_column_text(stmt, c)));
                    break;
            }
        }
        out.rows.push_back(std::move(row));
    }
    bool done = (rc == SQLITE_DONE);
    sqlite3_finalize(stmt);
    sqlite3_close(db);
    out.ok = done;
    return out;
}

bool match(const std::filesystem::path& db_file, const std::string& pred,
           const std::string& gold) {
    Rows g = run(db_file, gold);
    Rows p = run(db_file, pred);
    if (!g.ok) throw CheckFailure("oracle: gold failed to execute: " + gold);
    if (!p.ok) return false;
    if (g.rows.size() != p.rows.size()) return false;
    if (!g.rows.empty() && g.rows[0].size() != p.rows[0].size()) return false;
    auto a = p.rows;
    auto b = g.rows;
    if (!text_has_top_level_order_by(gold)) {
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
    }
    return a == b;
}

} // namespace exec_oracle

void criterion_differential() {
    ts::TempDir tmp("acc_diff");
    auto mini = ts::build_minidev(tmp.path());
    SchemaIndex index(mini.schemas);

    const DiffPair corpus[] = {
        // verbatim, value changes, reorders  (concert_singer)
        {"concert_singer", "SELECT name FROM singer", "SELECT name FROM singer", true},
        {"concert_singer", "SELECT name FROM singer WHERE age > 30",
         "SELECT name FROM singer WHERE age > 99", true},
        {"concert_singer", "SELECT name, age FROM singer", "SELECT age, name FROM singer", true},
        {"concert_singer", "SELECT name FROM singer ORDER BY age ASC",
         "SELECT name FROM singer ORDER BY age DESC", false},
        {"concert_singer", "SELECT name FROM singer ORDER BY age",
         "SELECT name FROM singer ORDER BY age ASC", true},
        {"concert_singer", "SELECT count(*) FROM singer WHERE country = 'France'",
         "SELECT count(*) FROM singer WHERE country = 'Netherlands'", true},
        {"concert_singer", "SELECT name FROM singer WHERE age > 30 AND country = 'France'",
         "SELECT name FROM singer WHERE country = 'France' AND age > 30", true},
        {"concert_singer", "SELECT name FROM singer WHERE age > 30",
         "SELECT name FROM singer WHERE age >= 31", false},
        {"concert_singer", "SELECT avg(age) FROM singer", "SELECT sum(age) FROM singer", false},
        {"concert_singer", "SELECT count(*) FROM singer", "SELECT count(name) FROM singer", false},
        {"concert_singer", "SELECT DISTINCT country FROM singer", "SELECT country FROM singer",
         false},
        {"concert_singer", "SELECT name FROM singer LIMIT 2", "SELECT name FROM singer LIMIT 3",
         true},
        {"concert_singer", "SELECT name FROM singer LIMIT 2", "SELECT name FROM singer", false},
        {"concert_singer", "SELECT T1.name FROM singer AS T1", "SELECT singer.name FROM singer",
         true},
        {"concert_singer",
         "SELECT name FROM singer WHERE country = 'France' OR country = 'Netherlands'",
         "SELECT name FROM singer WHERE country = 'Netherlands' OR country = 'France'", true},
        {"concert_singer",
         "SELECT name FROM singer WHERE country = 'France' OR country = 'Netherlands'",
         "SELECT name FROM singer WHERE country = 'France' AND country = 'Netherlands'", false},
        {"concert_singer",
         "SELECT T2.name, count(*) FROM concert AS T1 JOIN stadium AS T2 ON T1.stadium_id = "
         "T2.stadium_id GROUP BY T1.stadium_id",
         "SELECT T2.name, count(*) FROM stadium AS T2 JOIN concert AS T1 ON T2.stadium_id = "
         "T1.stadium_id GROUP BY T1.stadium_id",
         true},
        {"concert_singer",
         "SELECT T2.name, count(*) FROM concert AS T1 JOIN stadium AS T2 ON T1.stadium_id = "
         "T2.stadium_id GROUP BY T1.stadium_id",
         "SELECT T2.name, count(*) FROM concert AS T1 JOIN stadium AS T2 ON T1.stadium_id = "
         "T2.stadium_id GROUP BY T2.stadium_id",
         false},
        {"concert_singer", "SELECT year FROM concert GROUP BY year HAVING count(*) > 1",
         "SELECT year FROM concert GROUP BY year HAVING count(*) > 5", true},
        {"concert_singer", "SELECT year FROM concert GROUP BY year HAVING count(*) >= 2",
         "SELECT year FROM concert GROUP BY year HAVING count(*) > 1", false},
        {"concert_singer", "SELECT name FROM stadium WHERE capacity BETWEEN 9000 AND 12000",
         "SELECT name FROM stadium WHERE capacity BETWEEN 8000 AND 12000", true},
        {"concert_singer", "SELECT name FROM stadium WHERE location LIKE 'A%'",
         "SELECT name FROM stadium WHERE location LIKE 'F%'", true},
        {"concert_singer", "SELECT name FROM stadium WHERE location LIKE 'A%'",
         "SELECT name FROM stadium WHERE location NOT LIKE 'A%'", false},
        {"concert_singer", "SELECT max(capacity) FROM stadium",
         "SELECT capacity FROM stadium ORDER BY capacity DESC LIMIT 1", false},
        {"concert_singer", "SELECT count(*) FROM concert WHERE year = 2014 OR year = 2015",
         "SELECT count(*) FROM concert WHERE year IN (2014, 2015)", false},
        // pets
        {"pets", "SELECT count(*) FROM student", "SELECT count(*) FROM pets", false},
        {"pets", "SELECT avg(weight) FROM pets", "SELECT avg(weight) FROM pets", true},
        {"pets", "SELECT fname FROM student WHERE age = 18 OR age = 19",
         "SELECT fname FROM student WHERE age = 19 OR age = 18", true},
        {"pets", "SELECT pettype, weight FROM pets ORDER BY pet_age LIMIT 1",
         "SELECT pettype, weight FROM pets ORDER BY pet_age ASC LIMIT 1", true},
        {"pets", "SELECT stuid FROM has_pet GROUP BY stuid HAVING count(*) > 1",
         "SELECT stuid FROM has_pet GROUP BY stuid", false},
        {"pets", "SELECT max(pet_age) FROM pets", "SELECT min(pet_age) FROM pets", false},
        {"pets", "SELECT stuid FROM student WHERE stuid NOT IN (SELECT stuid FROM has_pet)",
         "SELECT stuid FROM student WHERE stuid NOT IN (SELECT stuid FROM has_pet)", true},
        {"pets", "SELECT stuid FROM student WHERE stuid NOT IN (SELECT stuid FROM has_pet)",
         "SELECT stuid FROM student WHERE stuid IN (SELECT stuid FROM has_pet)", false},
        {"pets", "SELECT weight FROM pets WHERE pettype = 'dog'",
         "SELECT weight FROM pets WHERE pettype = 'cat'", true},
        {"pets", "SELECT count(*), max(weight) FROM pets",
         "SELECT max(weight), count(*) FROM pets", true},
        // farm
        {"farm", "SELECT count(*) FROM farm", "SELECT count(*) FROM farm WHERE year > 0", false},
        {"farm", "SELECT total_horses FROM farm WHERE year = 2010",
         "SELECT total_horses FROM farm WHERE year = 2012", true},
        {"farm", "SELECT year FROM farm ORDER BY total_horses DESC LIMIT 1",
         "SELECT year FROM farm ORDER BY total_horses ASC LIMIT 1", false},
        {"farm", "SELECT sum(total_horses) FROM farm WHERE year < 2010",
         "SELECT sum(total_horses) FROM farm WHERE year <= 2009", false},
        {"farm", "SELECT avg(total_horses) FROM farm",
         "SELECT sum(total_horses) / count(*) FROM farm", false},
        // orchestra
        {"orchestra", "SELECT name FROM conductor ORDER BY age",
         "SELECT name FROM conductor ORDER BY age, name", false},
        {"orchestra", "SELECT orchestra FROM orchestra WHERE record_company = 'Decca'",
         "SELECT orchestra FROM orchestra WHERE record_company = 'Decca'", true},
        {"orchestra", "SELECT orchestra FROM orchestra WHERE record_company = 'Decca'",
         "SELECT orchestra.orchestra FROM orchestra WHERE orchestra.record_company = 'Decca'",
         true},
        {"orchestra", "SELECT record_company, count(*) FROM orchestra GROUP BY record_company",
         "SELECT count(*), record_company FROM orchestra GROUP BY record_company", true},
        {"orchestra",
         "SELECT name FROM conductor WHERE age < 50 UNION SELECT name FROM conductor WHERE "
         "nationality = 'British'",
         "SELECT name FROM conductor WHERE age < 50 UNION SELECT name FROM conductor WHERE "
         "nationality = 'British'",
         true},
        {"orchestra",
         "SELECT name FROM conductor WHERE age < 50 UNION SELECT name FROM conductor WHERE "
         "nationality = 'British'",
         "SELECT name FROM conductor WHERE age < 50 INTERSECT SELECT name FROM conductor WHERE "
         "nationality = 'British'",
         false},
        // museum_visit
        {"museum_visit",
         "SELECT sum(T1.num_of_ticket) FROM visit AS T1 JOIN visitor AS T2 ON T1.visitor_id = "
         "T2.id WHERE T2.age < 30",
         "SELECT sum(a.num_of_ticket) FROM visit AS a JOIN visitor AS b ON a.visitor_id = b.id "
         "WHERE b.age < 30",
         true},
        {"museum_visit", "SELECT name FROM museum WHERE open_year > 2010",
         "SELECT name FROM museum WHERE open_year >= 2010", false},
        // employee_hire
        {"employee_hire", "SELECT name FROM shop WHERE shop_id NOT IN (SELECT shop_id FROM hiring)",
         "SELECT name FROM shop WHERE shop_id NOT IN (SELECT employee_id FROM hiring)", false},
        {"employee_hire",
         "SELECT city, count(*) FROM employee GROUP BY city ORDER BY count(*) DESC LIMIT 1",
         "SELECT city, count(*) FROM employee GROUP BY city ORDER BY count(*) DESC LIMIT 1",
         true},
    };
    static_assert(sizeof(corpus) / sizeof(corpus[0]) == 50, "differential corpus must hold 50 pairs");

    int index_in_corpus = 0;
    for (const DiffPair& pair : corpus) {
        ++index_in_corpus;
        const Schema& schema = index.at(pair.db);
        auto em = eval::exact_set_match(pair.pred, pair.gold);
        require(!em.dataset_error, "pair " + std::to_string(index_in_corpus) + ": gold unparseable");
        require(em.match == pair.em_expected,
                "pair " + std::to_string(index_in_corpus) + ": EM=" +
                    (em.match ? "true" : "false") + " but hand label says " +
                    (pair.em_expected ? "true" : "false") + " [" + pair.pred + "]");
        bool oracle_ex = exec_oracle::match(schema.db_file_path, pair.pred, pair.gold);
        auto ex = eval::execution_match(pair.pred, pair.gold, schema);
        require(!ex.dataset_error, "pair " + std::to_string(index_in_corpus) + ": gold failed");
        require(ex.match == oracle_ex,
                "pair " + std::to_string(index_in_corpus) + ": EX=" +
                    (ex.match ? "true" : "false") + " but oracle says " +
                    (oracle_ex ? "true" : "false") + " [" + pair.pred + "]");
    }
}

// ---------------------------------------------------------------------------
// criterion 4: Algorithm-1 trace equivalence + metamorphic identities
// ---------------------------------------------------------------------------
Instance quick_instance(std::string id, std::string db, std::string q, std::string sql) {
    Instance inst;
    inst.id = std::move(id);
    inst.db_id = std::move(db);
    inst.question = std::move(q);
    inst.gold_sql = std::move(sql);
    return inst;
}

void criterion_trace_equivalence() {
    auto schemas = load_schemas(ts::source_dir() / "data/minidev/tables.json", "/tmp/db");
    SchemaIndex index(schemas);

    // the hand-traced six-candidate pool
    CandidatePool pool;
    pool.instances = {
        quick_instance("c:0", "authors", "How many authors do we have?",
                       "SELECT name FROM authors"),
        quick_instance("c:1", "farm", "How many farms are there?", "SELECT count(*) FROM farm"),
        quick_instance("c:2", "museum_visit", "How many museums do we have?",
                       "SELECT count(*) FROM museum"),
        quick_instance("c:3", "orchestra", "Show every single thing.",
                       "SELECT count(*) FROM orchestra"),
        quick_instance("c:4", "orchestra", "How many conductors do we have?",
                       "SELECT avg(age) FROM conductor"),
        quick_instance("c:5", "employee_hire", "Show all years.",
                       "SELECT count(*) FROM employee WHERE city = 'Madrid'"),
    };
    Instance target = quick_instance("t:0", "concert_singer", "How many singers do we have?",
                                     "SELECT count(*) FROM singer");
    embedding::CachingEmbedder embedder(std::make_shared<embedding::HashEmbeddingProvider>());
    auto result =
        selection::select_dail(pool, target, "SELECT count(*) FROM farm", 6, 0.9, embedder, index);
    const char* expected[] = {"c:2", "c:1", "c:3", "c:0", "c:4", "c:5"};
    require(result.chosen.size() == 6, "trace: wrong number of candidates");
    for (std::size_t i = 0; i < 6; ++i) {
        require(result.chosen[i].id == expected[i],
                "trace: position " + std::to_string(i) + " is " + result.chosen[i].id +
                    ", expected " + expected[i]);
    }

    // metamorphic identities over 200 randomized pools
    std::vector<std::string> dbs = {"authors", "farm", "museum_visit", "orchestra"};
    std::vector<std::string> nouns = {"authors", "farms", "museums", "conductors", "rows"};
    std::vector<std::string> patterns = {"How many %s are there?", "List every %s.",
                                         "Show all %s ordered by age.", "Count the %s per year."};
    std::vector<std::string> sqls = {
        "SELECT count(*) FROM authors",
        "SELECT name FROM museum",
        "SELECT avg(age) FROM conductor",
        "SELECT year FROM farm ORDER BY year DESC LIMIT 1",
        "SELECT record_company, count(*) FROM orchestra GROUP BY record_company",
    };
    std::mt19937 rng(1234);
    for (int trial = 0; trial < 200; ++trial) {
        CandidatePool random_pool;
        std::size_t n = 4 + rng() % 8;
        for (std::size_t i = 0; i < n; ++i) {
            std::string q = patterns[rng() % patterns.size()];
            q.replace(q.find("%s"), 2, nouns[rng() % nouns.size()]);
            random_pool.instances.push_back(quick_instance("r:" + std::to_string(i),
                                                           dbs[rng() % dbs.size()], q,
                                                           sqls[rng() % sqls.size()]));
        }
        Instance t = quick_instance("t:r", "concert_singer", "How many singers are there?",
                                    "SELECT count(*) FROM singer");
        int k = 1 + static_cast<int>(rng() % 5);
        embedding::CachingEmbedder fresh(std::make_shared<embedding::HashEmbeddingProvider>());

        auto dail0 = selection::select_dail(random_pool, t, sqls[rng() % sqls.size()], k, 0.0,
                                            fresh, index);
        auto mqs = selection::select_by_question(random_pool, t, k, true, fresh, index);
        require(dail0.chosen.size() == mqs.chosen.size(), "metamorphic: size mismatch");
        for (std::size_t i = 0; i < dail0.chosen.size(); ++i) {
            require(dail0.chosen[i].id == mqs.chosen[i].id,
                    "metamorphic: select_dail(tau=0) != MQS top-k");
        }
        double tau = (rng() % 100) / 100.0;
        auto gold_dail = selection::select_dail(random_pool, t, t.gold_sql, k, tau, fresh, index);
        auto upper = selection::select_upper_limit(random_pool, t, t.gold_sql, k, tau, fresh, index);
        for (std::size_t i = 0; i < gold_dail.chosen.size(); ++i) {
            require(gold_dail.chosen[i].id == upper.chosen[i].id,
                    "metamorphic: select_dail(gold) != select_upper_limit");
        }
    }
}

// ---------------------------------------------------------------------------
// criterion 5: DAIL threshold guarantee over 500 randomized pools
// ---------------------------------------------------------------------------
void criterion_threshold_guarantee() {
    auto schemas = load_schemas(ts::source_dir() / "data/minidev/tables.json", "/tmp/db");
    SchemaIndex index(schemas);
    std::string preliminary = "SELECT count(*) FROM singer";
    std::vector<std::string> clearing = {
        "SELECT count(*) FROM farm", "SELECT count(*) FROM museum",
        "SELECT count(*) FROM authors", "SELECT count(*) FROM conductor"};
    std::vector<std::string> rest = {
        "SELECT name FROM museum WHERE num_of_staff > 20",
        "SELECT year FROM farm ORDER BY year DESC LIMIT 1",
        "SELECT name, age FROM conductor",
        "SELECT record_company, count(*) FROM orchestra GROUP BY record_company",
    };
    std::vector<std::string> dbs = {"authors", "farm", "museum_visit", "orchestra"};
    std::mt19937 rng(99);
    for (int trial = 0; trial < 500; ++trial) {
        CandidatePool pool;
        int k = 1 + static_cast<int>(rng() % 4);
        int n_clear = k + static_cast<int>(rng() % 3);
        int n_rest = static_cast<int>(rng() % 6);
        for (int i = 0; i < n_clear; ++i) {
            pool.instances.push_back(
                quick_instance("g:" + std::to_string(i), dbs[rng() % dbs.size()],
                               "Question " + std::to_string(rng() % 997) + "?",
                               clearing[rng() % clearing.size()]));
        }
        for (int i = 0; i < n_rest; ++i) {
            pool.instances.push_back(
                quick_instance("b:" + std::to_string(i), dbs[rng() % dbs.size()],
                               "Other " + std::to_string(rng() % 997) + "?",
                               rest[rng() % rest.size()]));
        }
        std::shuffle(pool.instances.begin(), pool.instances.end(), rng);
        Instance target = quick_instance("t:g", "concert_singer", "How many singers?",
                                         "SELECT count(*) FROM singer");
        embedding::CachingEmbedder embedder(std::make_shared<embedding::HashEmbeddingProvider>());
        auto result = selection::select_dail(pool, target, preliminary, k, 0.9, embedder, index);
        require(static_cast<int>(result.chosen.size()) == k, "guarantee: wrong k");
        for (const auto& score : result.per_example) {
            require(score.query_jaccard >= 0.9,
                    "guarantee: selected example below tau on trial " + std::to_string(trial));
        }
    }
}

// ---------------------------------------------------------------------------
// criterion 6: budget enforcement fuzz
// ---------------------------------------------------------------------------
void criterion_budget() {
    auto schemas = load_schemas(ts::source_dir() / "data/minidev/tables.json", "/tmp/db");
    SchemaIndex index(schemas);
    const Schema& continents = index.at("continents_countries");
    Instance target = quick_instance("t:0", "continents_countries",
                                     "How many continents are there?",
                                     "SELECT count(*) FROM continents");
    auto rep = promptgen::RepresentationConfig::canonical(promptgen::Representation::CodeRep);
    promptgen::ApproxTokenCounter counter;
    std::mt19937 rng(2718);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Instance> ranked;
        std::size_t n = rng() % 6;
        for (std::size_t i = 0; i < n; ++i) {
            Instance ex;
            ex.id = "f:" + std::to_string(i);
            ex.db_id = (rng() % 2) ? "authors" : "farm";
            ex.question = "q";
            std::size_t words = rng() % 500;
            for (std::size_t w = 0; w < words; ++w) ex.question += " filler" + std::to_string(w % 40);
            ex.gold_sql = "SELECT count(*) FROM " + ex.db_id;
            ranked.push_back(ex);
        }
        promptgen::OrganizationConfig org{promptgen::Organization::DailPairs,
                                          static_cast<int>(n)};
        int included_small = 0, included_large = 0;
        for (int limit : {2048, 4096}) {
            auto prompt =
                promptgen::assemble_prompt(target, continents, rep, org, ranked, index, counter, limit);
            require(prompt.token_count <= limit - 200,
                    "budget: token_count exceeds limit - 200 on trial " + std::to_string(trial));
            (limit == 2048 ? included_small : included_large) = prompt.examples_included;
        }
        require(included_large >= included_small, "budget: examples_included not monotone");
    }
}

// ---------------------------------------------------------------------------
// criterion 7: masking properties
// ---------------------------------------------------------------------------
void criterion_masking() {
    auto schemas = load_schemas(ts::source_dir() / "data/minidev/tables.json", "/tmp/db");
    SchemaIndex index(schemas);
    const Schema& continents = index.at("continents_countries");

    auto masked = masking::mask_with_schema("How many continents are there?", continents);
    require(masked.masked == "How many <mask> are there?", "listing-schema table mask mismatch");
    require(masked.links.size() == 1 &&
                masked.links[0].target == masking::LinkTarget::TableName,
            "listing-schema link target mismatch");
    auto none = masking::mask_with_schema("What is the weather?", continents);
    require(none.masked == "What is the weather?", "no-link question must be unchanged");
    require(none.links.empty(), "no-link question must carry no links");

    std::mt19937 rng(4242);
    std::vector<std::string> names = {"singer",   "stadium", "concert",  "farm",
                                      "museum",   "visitor", "orchestra", "author",
                                      "capacity", "age",     "weight",    "record_company"};
    std::vector<std::string> fillers = {"how", "many", "show", "all", "with", "largest", "than"};
    for (int trial = 0; trial < 1000; ++trial) {
        Schema s;
        s.db_id = "fuzz";
        std::size_t ntables = 1 + rng() % 3;
        for (std::size_t t = 0; t < ntables; ++t) {
            Table table;
            table.name = names[rng() % names.size()];
            for (std::size_t c = 0, nc = 1 + rng() % 4; c < nc; ++c) {
                table.columns.push_back({names[rng() % names.size()], "int", false});
            }
            s.tables.push_back(table);
        }
        std::string q;
        for (std::size_t w = 0, nw = 3 + rng() % 8; w < nw; ++w) {
            if (!q.empty()) q += " ";
            switch (rng() % 3) {
                case 0: q += fillers[rng() % fillers.size()]; break;
                case 1: q += names[rng() % names.size()]; break;
                default: q += std::to_string(rng() % 5000); break;
            }
        }
        q += "?";
        auto once = masking::mask_with_schema(q, s);
        auto twice = masking::mask_with_schema(once.masked, s);
        require(twice.masked == once.masked, "masking not idempotent on: " + q);
        require(masking::schema_link(once.masked, s).empty(),
                "schema name survives masking on: " + q);
    }
}

// ---------------------------------------------------------------------------
// criterion 8: self-consistency vote vs brute force, all 243 patterns
// ---------------------------------------------------------------------------
void criterion_vote() {
    ts::TempDir tmp("acc_vote");
    sqlexec::create_database_from_sql(tmp.path() / "database" / "v" / "v.sqlite",
                                      "CREATE TABLE t(x int); INSERT INTO t VALUES (1);");
    Schema db;
    db.db_id = "v";
    db.db_file_path = tmp.path() / "database" / "v" / "v.sqlite";

    const char* sql_of[3] = {"SELECT 1", "SELECT 2", "SELECT 3"};
    for (int pattern = 0; pattern < 243; ++pattern) {
        int digits[5];
        int p = pattern;
        std::vector<std::string> responses;
        for (int i = 0; i < 5; ++i) {
            digits[i] = p % 3;
            p /= 3;
            responses.push_back(sql_of[digits[i]]);
        }
        // brute-force expectation: largest group, earliest first occurrence
        int counts[3] = {0, 0, 0};
        int first[3] = {5, 5, 5};
        for (int i = 0; i < 5; ++i) {
            counts[digits[i]]++;
            if (first[digits[i]] == 5) first[digits[i]] = i;
        }
        int best = 0;
        for (int d = 1; d < 3; ++d) {
            if (counts[d] > counts[best] ||
                (counts[d] == counts[best] && first[d] < first[best])) {
                best = d;
            }
        }
        int expected_index = first[best];

        llm::CannedBackend backend(responses);
        llm::CompletionRequest base;
        base.prompt = "p";
        base.model_id = "m";
        auto result = llm::self_consistency(base, 5, backend, db, true);
        require(result.chosen_index == expected_index,
                "vote: pattern " + std::to_string(pattern) + " chose index " +
                    std::to_string(result.chosen_index) + ", expected " +
                    std::to_string(expected_index));
        require(result.sql == sql_of[best], "vote: wrong SQL on pattern " + std::to_string(pattern));
    }
}

// ---------------------------------------------------------------------------
// criterion 9: replay determinism
// ---------------------------------------------------------------------------
void criterion_replay() {
    ts::TempDir tmp("acc_replay");
    auto mini = ts::build_minidev(tmp.path());
    SchemaIndex index(mini.schemas);

    pipeline::RunConfig cfg = pipeline::RunConfig::canonical_dail();
    cfg.dataset.tables = tmp.path() / "tables.json";
    cfg.dataset.db_root = tmp.path() / "database";
    cfg.selection.k = 2;
    cfg.organization.k = 2;
    cfg.backend.kind = pipeline::BackendKind::Oracle;
    cfg.backend.model = "offline-oracle";
    cfg.record_fixtures = tmp.path() / "fixtures.jsonl";
    cfg.output_dir = tmp.path() / "run0";
    pipeline::Services record_services = pipeline::build_services(cfg);
    pipeline::run_dataset(mini.dev, mini.pool, index, cfg, record_services);

    for (int i = 1; i <= 2; ++i) {
        pipeline::RunConfig replay_cfg = cfg;
        replay_cfg.record_fixtures.reset();
        replay_cfg.backend.kind = pipeline::BackendKind::Replay;
        replay_cfg.backend.fixtures = tmp.path() / "fixtures.jsonl";
        replay_cfg.output_dir = tmp.path() / ("run" + std::to_string(i));
        pipeline::Services services = pipeline::build_services(replay_cfg);
        pipeline::run_dataset(mini.dev, mini.pool, index, replay_cfg, services);
    }
    std::string r0 = ts::read_file(tmp.path() / "run0" / "report.json");
    std::string r1 = ts::read_file(tmp.path() / "run1" / "report.json");
    std::string r2 = ts::read_file(tmp.path() / "run2" / "report.json");
    require(!r0.empty(), "replay: empty report");
    require(r0 == r1 && r1 == r2, "replay: the three EvalReports differ");
}

// ---------------------------------------------------------------------------
// criterion 10 (optional, off-CI): live smoke against a real endpoint
// ---------------------------------------------------------------------------
// Needs DAIL_LIVE_SMOKE=1, DAIL_SPIDER_DIR pointing at a Spider layout
// (tables.json, dev.json, database/) and the backend env vars. EX within
// ±10 points of the 78.4 reference warns rather than fails.
bool criterion_live_smoke(std::string& note) {
    if (!std::getenv("DAIL_LIVE_SMOKE")) {
        note = "set DAIL_LIVE_SMOKE=1 plus DAIL_SPIDER_DIR / DAIL_API_ENDPOINT / DAIL_API_KEY";
        return false;
    }
    const char* spider_dir = std::getenv("DAIL_SPIDER_DIR");
    const char* endpoint = std::getenv("DAIL_API_ENDPOINT");
    const char* model = std::getenv("DAIL_API_MODEL");
    if (!spider_dir || !endpoint || !model) {
        note = "missing DAIL_SPIDER_DIR / DAIL_API_ENDPOINT / DAIL_API_MODEL";
        return false;
    }
    std::filesystem::path root(spider_dir);
    auto schemas = load_schemas(root / "tables.json", root / "database");
    auto dev = load_instances(root / "dev.json", schemas);
    SchemaIndex index(schemas);
    std::mt19937 rng(20240601);
    std::shuffle(dev.begin(), dev.end(), rng);
    if (dev.size() > 50) dev.resize(50);

    pipeline::RunConfig cfg;
    cfg.dataset.tables = root / "tables.json";
    cfg.dataset.db_root = root / "database";
    cfg.representation =
        promptgen::RepresentationConfig::canonical(promptgen::Representation::OpenAIDemo);
    cfg.representation.include_foreign_keys = true;  // zero-shot OD_P + FK
    cfg.organization.k = 0;
    cfg.selection.k = 0;
    cfg.backend.kind = pipeline::BackendKind::HttpChat;
    cfg.backend.endpoint = endpoint;
    cfg.backend.model = model;
    pipeline::Services services = pipeline::build_services(cfg);
    CandidatePool empty_pool;
    auto result = pipeline::run_dataset(dev, empty_pool, index, cfg, services);
    double ex = result.report.aggregates.ex_accuracy * 100.0;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "EX %.1f%% on %zu sampled instances (reference band 68.4-88.4)",
                  ex, dev.size());
    note = buf;
    if (ex < 68.4 || ex > 88.4) {
        std::cout << "  [warn] live EX outside the reference band (model drift acknowledged)\n";
    }
    return true;
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<void()> fn;
    };
    const Criterion criteria[] = {
        {"1 golden prompt fidelity (listings 1-8 byte-identical)", criterion_golden_prompts},
        {"2 oracle end-to-end (20-instance mini-dev, every rep x org, EM=EX=1.0)",
         criterion_oracle_end_to_end},
        {"3 EM/EX differential oracle (50-pair corpus, 100% agreement)", criterion_differential},
        {"4 Algorithm-1 trace equivalence + metamorphic identities (200 pools)",
         criterion_trace_equivalence},
        {"5 DAIL threshold guarantee (500 pools, tau=0.9)", criterion_threshold_guarantee},
        {"6 budget enforcement (1000 fuzz cases, limits 2048/4096)", criterion_budget},
        {"7 masking idempotence + schema-name absence (1000 fuzz cases)", criterion_masking},
        {"8 self-consistency vote vs brute force (243 patterns)", criterion_vote},
        {"9 replay determinism (record + 2 replays byte-identical)", criterion_replay},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        auto start = std::chrono::steady_clock::now();
        std::string error;
        try {
            criterion.fn();
        } catch (const std::exception& e) {
            error = e.what();
        }
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        char line[512];
        if (error.empty()) {
            std::snprintf(line, sizeof(line), "[PASS] criterion %s (%.2fs)", criterion.name,
                          seconds);
        } else {
            std::snprintf(line, sizeof(line), "[FAIL] criterion %s (%.2fs): %s", criterion.name,
                          seconds, error.c_str());
            ++failures;
        }
        std::cout << line << "\n";
    }

    std::string note;
    if (criterion_live_smoke(note)) {
        std::cout << "[PASS] criterion 10 live smoke: " << note << "\n";
    } else {
        std::cout << "[SKIP] criterion 10 live smoke (off-CI): " << note << "\n";
    }

    if (failures > 0) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all required criteria passed\n";
    return 0;
}
