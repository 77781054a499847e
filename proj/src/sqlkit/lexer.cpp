#include <array>
#include <cctype>
#include <unordered_set>

#include "dail/error.hpp"
#include "dail/sqlkit.hpp"

namespace dail::sqlkit {
namespace {

bool is_word_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

const std::unordered_set<std::string>& keyword_set() {
    static const std::unordered_set<std::string> kw = {
        "select", "from",  "where",   "group", "by",        "having", "order",
        "limit",  "distinct", "and",  "or",    "not",       "in",     "exists",
        "like",   "between", "is",    "null",  "union",     "intersect",
        "except", "join",  "on",      "as",    "asc",       "desc",   "case",
        "when",   "then",  "else",    "end"};
    return kw;
}

const std::unordered_set<std::string>& aggregate_set() {
    static const std::unordered_set<std::string> agg = {"count", "sum", "avg", "min", "max"};
    return agg;
}

} // namespace

bool is_sql_keyword(std::string_view lower) {
    return keyword_set().count(std::string(lower)) > 0;
}

bool is_aggregate(std::string_view lower) {
    return aggregate_set().count(std::string(lower)) > 0;
}

const std::vector<std::string>& syntax_keywords() {
    static const std::vector<std::string> order = {
        "select", "from",   "where",  "group",  "by",      "having",    "order",
        "limit",  "distinct", "and",  "or",     "not",     "in",        "exists",
        "like",   "between", "is",    "null",   "union",   "intersect", "except",
        "join",   "on",     "asc",    "desc",   "count",   "sum",       "avg",
        "min",    "max"};
    return order;
}

std::vector<Token> lex(std::string_view sql) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    const std::size_t n = sql.size();
    while (i < n) {
        char c = sql[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        // -- line comment
        if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
            while (i < n && sql[i] != '\n') ++i;
            continue;
        }
        // /* block comment */
        if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
            i += 2;
            while (i + 1 < n && !(sql[i] == '*' && sql[i + 1] == '/')) ++i;
            i = (i + 1 < n) ? i + 2 : n;
            continue;
        }
        // Both quote styles are string literals: the Spider datasets write
        // values with double quotes as often as single ones, and the official
        // evaluation treats them identically.
        if (c == '\'' || c == '"') {
            char quote = c;
            std::string value;
            ++i;
            bool closed = false;
            while (i < n) {
                if (sql[i] == quote) {
                    if (i + 1 < n && sql[i + 1] == quote) {  // escaped quote
                        value += quote;
                        i += 2;
                        continue;
                    }
                    closed = true;
                    ++i;
                    break;
                }
                value += sql[i++];
            }
            if (!closed) throw ParseError("unterminated string literal");
            tokens.push_back({TokenKind::String, value, "", false});
            continue;
        }
        if (c == '`' || c == '[') {
            char close = c == '[' ? ']' : c;
            std::string value;
            ++i;
            bool closed = false;
            while (i < n) {
                if (sql[i] == close) {
                    closed = true;
                    ++i;
                    break;
                }
                value += sql[i++];
            }
            if (!closed) throw ParseError("unterminated quoted identifier");
            tokens.push_back({TokenKind::Word, value, to_lower(value), true});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
            std::size_t start = i;
            while (i < n && (std::isdigit(static_cast<unsigned char>(sql[i])) || sql[i] == '.')) ++i;
            if (i < n && (sql[i] == 'e' || sql[i] == 'E')) {
                std::size_t save = i;
                ++i;
                if (i < n && (sql[i] == '+' || sql[i] == '-')) ++i;
                if (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) {
                    while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
                } else {
                    i = save;
                }
            }
            tokens.push_back({TokenKind::Number, std::string(sql.substr(start, i - start)), "", false});
            continue;
        }
        if (is_word_start(c)) {
            std::size_t start = i;
            while (i < n && is_word_char(sql[i])) ++i;
            std::string text(sql.substr(start, i - start));
            tokens.push_back({TokenKind::Word, text, to_lower(text), false});
            continue;
        }
        // multi-char operators first
        static constexpr std::array<std::string_view, 6> two_char = {"<=", ">=", "<>", "!=", "==", "||"};
        bool matched = false;
        if (i + 1 < n) {
            std::string_view pair = sql.substr(i, 2);
            for (auto op : two_char) {
                if (pair == op) {
                    tokens.push_back({TokenKind::Operator, std::string(op), std::string(op), false});
                    i += 2;
                    matched = true;
                    break;
                }
            }
        }
        if (matched) continue;
        switch (c) {
            case '=': case '<': case '>': case '+': case '-': case '*': case '/': case '%':
                tokens.push_back({TokenKind::Operator, std::string(1, c), std::string(1, c), false});
                break;
            case '(': case ')': case ',': case '.': case ';':
                tokens.push_back({TokenKind::Punct, std::string(1, c), std::string(1, c), false});
                break;
            default:
                // Unknown byte (e.g. stray unicode): treat as punctuation noise.
                tokens.push_back({TokenKind::Punct, std::string(1, c), std::string(1, c), false});
                break;
        }
        ++i;
    }
    return tokens;
}

bool lexes(std::string_view sql) {
    try {
        lex(sql);
        return true;
    } catch (const ParseError&) {
        return false;
    }
}

} // namespace dail::sqlkit
