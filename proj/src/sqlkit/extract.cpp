#include <algorithm>
#include <cctype>

#include "dail/error.hpp"
#include "dail/sqlkit.hpp"

namespace dail::sqlkit {
namespace {

bool word_boundary(const std::string& text, std::size_t pos, std::size_t len) {
    auto is_word = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    };
    if (pos > 0 && is_word(text[pos - 1])) return false;
    std::size_t end = pos + len;
    if (end < text.size() && is_word(text[end])) return false;
    return true;
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
    if (text.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i]))) {
            return false;
        }
    }
    return true;
}

std::string lower_copy(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Case-insensitive search for a word-boundary occurrence of `word`.
std::size_t find_word(const std::string& text, const std::string& word) {
    std::string lower = lower_copy(text);
    std::size_t pos = 0;
    while ((pos = lower.find(word, pos)) != std::string::npos) {
        if (word_boundary(text, pos, word.size())) return pos;
        ++pos;
    }
    return std::string::npos;
}

// First word of a line, lowercased. Empty when the line has no word.
std::string first_word(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() &&
           (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_')) {
        ++i;
    }
    if (i == start) {
        return start < line.size() ? std::string(1, line[start]) : std::string();
    }
    return lower_copy(line.substr(start, i - start));
}

// Does the line after a blank gap look like the query is still going?
// A fresh SELECT/WITH after a blank line starts a new statement instead.
bool continues_sql(std::string_view line) {
    std::string head = first_word(line);
    if (head.empty()) return false;
    if (head == "(" || head == "," || head == ")") return true;
    if (head == "select" || head == "with") return false;
    return is_sql_keyword(head) || is_aggregate(head);
}

// Token presence check used to reject prose when the prompt-suffix rule
// would otherwise accept arbitrary text.
bool has_sql_keyword(const std::string& text) {
    std::string word;
    std::string lower = lower_copy(text);
    for (std::size_t i = 0; i <= lower.size(); ++i) {
        char c = i < lower.size() ? lower[i] : ' ';
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            word += c;
        } else {
            if (!word.empty() && (is_sql_keyword(word) || is_aggregate(word))) return true;
            word.clear();
        }
    }
    return false;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

} // namespace

std::string extract_first_sql(const std::string& response_text, bool prompt_ended_with_select) {
    std::size_t start = std::string::npos;
    std::size_t sel = find_word(response_text, "select");
    std::size_t with = find_word(response_text, "with");
    start = std::min(sel, with);

    bool from_head = false;
    if (start == std::string::npos) {
        if (!prompt_ended_with_select) {
            throw ExtractionError("no SQL statement found in response", response_text);
        }
        // Completion-style prompt ended with the token "SELECT": the response
        // begins mid-query. Skip a leading code fence line if present.
        std::size_t i = 0;
        while (i < response_text.size() &&
               std::isspace(static_cast<unsigned char>(response_text[i]))) {
            ++i;
        }
        if (response_text.compare(i, 3, "```") == 0) {
            std::size_t nl = response_text.find('\n', i);
            i = nl == std::string::npos ? response_text.size() : nl + 1;
        }
        start = i;
        from_head = true;
    }

    // Consume until a terminator, a closing fence, or a blank line followed
    // by non-SQL prose. Single-quoted strings are opaque.
    std::size_t i = start;
    std::size_t end = response_text.size();
    bool in_string = false;
    while (i < response_text.size()) {
        char c = response_text[i];
        if (in_string) {
            if (c == '\'') in_string = false;
            ++i;
            continue;
        }
        if (c == '\'') {
            in_string = true;
            ++i;
            continue;
        }
        if (c == ';') {
            end = i;
            break;
        }
        if (c == '\n') {
            // scan the blank gap
            std::size_t j = i + 1;
            bool saw_blank = false;
            while (j < response_text.size()) {
                std::size_t line_end = response_text.find('\n', j);
                if (line_end == std::string::npos) line_end = response_text.size();
                std::string_view line(response_text.data() + j, line_end - j);
                if (trim(line).empty()) {
                    saw_blank = true;
                    j = line_end + 1;
                    continue;
                }
                break;
            }
            if (saw_blank) {
                if (j >= response_text.size()) {
                    end = i;
                    break;
                }
                std::size_t line_end = response_text.find('\n', j);
                if (line_end == std::string::npos) line_end = response_text.size();
                std::string_view next(response_text.data() + j, line_end - j);
                if (starts_with_ci(trim(next), "```") || !continues_sql(next)) {
                    end = i;
                    break;
                }
                i = j;
                continue;
            }
            // single newline: check for fence on the next line
            std::size_t line_end = response_text.find('\n', i + 1);
            if (line_end == std::string::npos) line_end = response_text.size();
            std::string next_line = trim(
                std::string_view(response_text.data() + i + 1, line_end - i - 1));
            if (starts_with_ci(next_line, "```")) {
                end = i;
                break;
            }
            ++i;
            continue;
        }
        ++i;
    }
    if (i >= response_text.size()) end = response_text.size();

    std::string sql = trim(std::string_view(response_text).substr(start, end - start));
    if (sql.empty()) {
        throw ExtractionError("no SQL statement found in response", response_text);
    }
    if (from_head && !has_sql_keyword(sql)) {
        throw ExtractionError("no SQL statement found in response", response_text);
    }
    if (prompt_ended_with_select && !starts_with_ci(sql, "select") && !starts_with_ci(sql, "with")) {
        sql = "SELECT " + sql;
    }
    return sql;
}

} // namespace dail::sqlkit
