#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dail::sqlkit {

enum class TokenKind { Word, Number, String, Operator, Punct };

struct Token {
    TokenKind kind = TokenKind::Word;
    std::string text;   // unquoted content for quoted identifiers/strings
    std::string lower;  // lowercase of text for Word/Operator tokens
    bool quoted = false;
};

// SQLite-flavored tokenizer. Skips comments, handles '' escapes, "ident",
// `ident` and [ident] quoting. Throws ParseError on unterminated quotes.
std::vector<Token> lex(std::string_view sql);
bool lexes(std::string_view sql);

bool is_sql_keyword(std::string_view lower);
bool is_aggregate(std::string_view lower);

// Fixed, ordered keyword list (clause keywords + aggregates) used for the
// binary syntax vectors of query-similarity selection.
const std::vector<std::string>& syntax_keywords();

// A query with its database-specific tokens replaced by "_": SQL keywords,
// aggregate names, operators, parentheses, commas and "*" survive, everything
// else collapses to the placeholder. Lowercase, single-spaced.
struct Skeleton {
    std::string text;
    std::vector<std::string> tokens;
    std::set<std::string> token_set;  // includes the "_" placeholder
    bool degraded = false;            // input did not fully parse
};

Skeleton extract_skeleton(std::string_view sql);

// Pulls the first SQL statement out of an LLM response: starts at the first
// SELECT/WITH token (or the response head when the prompt ended with the
// bare token "SELECT"), stops at a statement terminator, a blank line
// followed by prose, or a closing markdown fence. Throws ExtractionError
// when nothing SQL-like is present.
std::string extract_first_sql(const std::string& response_text, bool prompt_ended_with_select);

// Clause-level decomposition for exact-set-match. Sets are insensitive to
// item order and identifier case; literal values are stripped to "_".
struct ComponentSet {
    std::set<std::string> select_items;
    bool select_distinct = false;
    std::set<std::string> from_tables;
    std::set<std::string> join_conditions;
    std::set<std::string> where_conditions;
    std::set<std::string> group_by_items;
    std::set<std::string> having_conditions;
    std::set<std::string> order_by_items;  // with asc/desc direction
    std::set<std::string> aggregates;
    std::set<std::string> keywords;  // distinct, limit, or, nested, set ops, ...
    std::string compound_op;         // "", "union", "union all", "intersect", "except"
    std::string compound_right;      // fingerprint of the right-hand side

    bool operator==(const ComponentSet&) const = default;
    std::string fingerprint() const;
};

// Throws ParseError when the statement does not parse.
ComponentSet decompose_components(std::string_view sql);

// True when the outermost select carries an ORDER BY (drives row-order
// sensitivity of execution comparison). Falls back to a lexical scan when
// the statement does not parse.
bool has_top_level_order_by(std::string_view sql);

} // namespace dail::sqlkit
