#include <cctype>
#include <sstream>

#include "ast.hpp"
#include "dail/error.hpp"
#include "dail/sqlkit.hpp"

namespace dail::sqlkit {
namespace {

constexpr const char* kPlaceholder = "_";

bool keep_operator(const std::string& op) {
    // All lexer operators are structural; keep them verbatim.
    return !op.empty();
}

std::string classify(const Token& t) {
    switch (t.kind) {
        case TokenKind::Word:
            if (!t.quoted && (is_sql_keyword(t.lower) || is_aggregate(t.lower))) {
                return t.lower;
            }
            return kPlaceholder;
        case TokenKind::Number:
        case TokenKind::String:
            return kPlaceholder;
        case TokenKind::Operator:
            return keep_operator(t.text) ? t.text : kPlaceholder;
        case TokenKind::Punct:
            if (t.text == "(" || t.text == ")" || t.text == ",") return t.text;
            if (t.text == ";") return "";
            // "." glues qualified names; fold it into the placeholder so
            // t.col collapses to a single "_".
            if (t.text == ".") return kPlaceholder;
            return "";
    }
    return kPlaceholder;
}

std::vector<std::string> collapse(std::vector<std::string> raw) {
    std::vector<std::string> out;
    for (auto& tok : raw) {
        if (tok.empty()) continue;
        if (tok == kPlaceholder && !out.empty() && out.back() == kPlaceholder) continue;
        out.push_back(std::move(tok));
    }
    return out;
}

// Last-resort path for text the lexer rejects (e.g. an unterminated quote):
// whitespace tokens, keyword-or-placeholder classification.
std::vector<std::string> whitespace_fallback(std::string_view sql) {
    std::vector<std::string> raw;
    std::string word;
    auto flush = [&] {
        if (word.empty()) return;
        std::string lower = word;
        for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (is_sql_keyword(lower) || is_aggregate(lower)) {
            raw.push_back(lower);
        } else {
            raw.push_back(kPlaceholder);
        }
        word.clear();
    };
    for (char c : sql) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            word += c;
        }
    }
    flush();
    return collapse(std::move(raw));
}

Skeleton build(std::vector<std::string> tokens, bool degraded) {
    Skeleton sk;
    sk.tokens = std::move(tokens);
    sk.degraded = degraded;
    std::ostringstream text;
    for (std::size_t i = 0; i < sk.tokens.size(); ++i) {
        if (i) text << ' ';
        text << sk.tokens[i];
        sk.token_set.insert(sk.tokens[i]);
    }
    sk.text = text.str();
    return sk;
}

} // namespace

Skeleton extract_skeleton(std::string_view sql) {
    std::vector<Token> tokens;
    try {
        tokens = lex(sql);
    } catch (const ParseError&) {
        return build(whitespace_fallback(sql), true);
    }

    std::vector<std::string> raw;
    raw.reserve(tokens.size());
    for (const Token& t : tokens) {
        raw.push_back(classify(t));
    }

    bool degraded = false;
    try {
        parse_select(sql);
    } catch (const ParseError&) {
        degraded = true;
    }
    return build(collapse(std::move(raw)), degraded);
}

} // namespace dail::sqlkit
