#include "dail/masking.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "dail/error.hpp"

namespace dail::masking {
namespace {

constexpr std::string_view kMaskToken = "<mask>";
constexpr std::string_view kUnkToken = "<unk>";

struct QToken {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string text;
    bool numeral = false;
    bool mask_token = false;  // literal <mask>/<unk>; never linkable
    bool quoted = false;      // a whole quoted span
};

bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::vector<QToken> tokenize(const std::string& q) {
    std::vector<QToken> tokens;
    std::size_t i = 0;
    while (i < q.size()) {
        char c = q[i];
        if (c == '<') {
            for (std::string_view special : {kMaskToken, kUnkToken}) {
                if (q.compare(i, special.size(), special) == 0) {
                    tokens.push_back({i, i + special.size(), std::string(special), false, true, false});
                    i += special.size();
                    goto next;
                }
            }
            ++i;
            continue;
        }
        if (c == '\'' || c == '"') {
            // quoted span → value candidate; unterminated quote is a plain char
            {
                std::size_t close = q.find(c, i + 1);
                if (close != std::string::npos) {
                    tokens.push_back({i, close + 1, q.substr(i, close + 1 - i), false, false, true});
                    i = close + 1;
                    continue;
                }
            }
            ++i;
            continue;
        }
        if (word_char(c)) {
            std::size_t start = i;
            bool all_digit = true;
            while (i < q.size() &&
                   (word_char(q[i]) || (q[i] == '.' && i + 1 < q.size() &&
                                        std::isdigit(static_cast<unsigned char>(q[i + 1])) &&
                                        i > start &&
                                        std::isdigit(static_cast<unsigned char>(q[i - 1]))))) {
                if (!std::isdigit(static_cast<unsigned char>(q[i])) && q[i] != '.') all_digit = false;
                ++i;
            }
            tokens.push_back({start, i, q.substr(start, i - start), all_digit, false, false});
            continue;
        }
        ++i;
    next:;
    }
    return tokens;
}

// A name matches an n-gram if their normalized forms agree, optionally after
// folding one trailing plural 's' on either side.
bool names_match(const std::string& gram_norm, const std::string& name_norm) {
    if (gram_norm == name_norm) return true;
    auto fold = [](const std::string& s) {
        return (s.size() > 1 && s.back() == 's') ? s.substr(0, s.size() - 1) : s;
    };
    return fold(gram_norm) == name_norm || gram_norm == fold(name_norm);
}

} // namespace

std::string normalize_name(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    for (char c : name) {
        if (c == '_' || c == ' ') continue;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::vector<Link> schema_link(const std::string& question, const Schema& schema) {
    std::vector<QToken> tokens = tokenize(question);

    std::vector<std::pair<std::string, std::string>> table_names;   // normalized → original
    std::vector<std::pair<std::string, std::string>> column_names;
    for (const Table& t : schema.tables) {
        table_names.emplace_back(normalize_name(t.name), t.name);
        for (const Column& c : t.columns) {
            column_names.emplace_back(normalize_name(c.name), c.name);
        }
    }

    std::vector<bool> linked(tokens.size(), false);
    std::vector<Link> links;

    for (std::size_t n = 5; n >= 1; --n) {
        if (n > tokens.size()) continue;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            bool usable = true;
            for (std::size_t j = i; j < i + n; ++j) {
                if (linked[j] || tokens[j].mask_token || tokens[j].quoted || tokens[j].numeral) {
                    usable = false;
                    break;
                }
            }
            if (!usable) continue;
            std::string gram;
            for (std::size_t j = i; j < i + n; ++j) gram += tokens[j].text;
            std::string gram_norm = normalize_name(gram);
            if (gram_norm.empty()) continue;

            const std::string* matched = nullptr;
            LinkTarget target = LinkTarget::TableName;
            for (const auto& [norm, orig] : table_names) {
                if (names_match(gram_norm, norm)) {
                    matched = &orig;
                    break;
                }
            }
            if (!matched) {
                for (const auto& [norm, orig] : column_names) {
                    if (names_match(gram_norm, norm)) {
                        matched = &orig;
                        target = LinkTarget::ColumnName;
                        break;
                    }
                }
            }
            if (!matched) continue;
            links.push_back({tokens[i].begin, tokens[i + n - 1].end, target, *matched});
            for (std::size_t j = i; j < i + n; ++j) linked[j] = true;
        }
        if (n == 1) break;
    }

    // Quoted spans and numerals are always value links; domain independence
    // matters more than whether a column happens to match.
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (linked[i] || tokens[i].mask_token) continue;
        if (tokens[i].quoted || tokens[i].numeral) {
            links.push_back({tokens[i].begin, tokens[i].end, LinkTarget::Value, tokens[i].text});
            linked[i] = true;
        }
    }

    std::sort(links.begin(), links.end(),
              [](const Link& a, const Link& b) { return a.begin < b.begin; });
    return links;
}

MaskedQuestion mask_question(const std::string& question, const std::vector<Link>& links) {
    std::vector<Link> sorted = links;
    std::sort(sorted.begin(), sorted.end(),
              [](const Link& a, const Link& b) { return a.begin < b.begin; });
    std::size_t prev_end = 0;
    for (const Link& link : sorted) {
        if (link.begin < prev_end || link.end > question.size() || link.begin > link.end) {
            throw Error("mask_question: overlapping or out-of-bounds link");
        }
        prev_end = link.end;
    }

    MaskedQuestion out;
    out.original = question;
    out.links = sorted;
    std::string masked;
    std::size_t cursor = 0;
    for (const Link& link : sorted) {
        masked.append(question, cursor, link.begin - cursor);
        masked += (link.target == LinkTarget::Value) ? kUnkToken : kMaskToken;
        cursor = link.end;
    }
    masked.append(question, cursor, question.size() - cursor);
    out.masked = std::move(masked);
    return out;
}

MaskedQuestion mask_with_schema(const std::string& question, const Schema& schema) {
    return mask_question(question, schema_link(question, schema));
}

} // namespace dail::masking
