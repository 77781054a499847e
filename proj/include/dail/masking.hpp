#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dail/corpus.hpp"

namespace dail::masking {

enum class LinkTarget { TableName, ColumnName, Value };

struct Link {
    std::size_t begin = 0;  // byte offsets into the question
    std::size_t end = 0;
    LinkTarget target = LinkTarget::Value;
    std::string matched_name;
};

struct MaskedQuestion {
    std::string original;
    std::string masked;
    std::vector<Link> links;
};

// lowercase, underscores and spaces removed; the shared form for comparing
// question n-grams against schema names
std::string normalize_name(std::string_view name);

// n-gram matching, longest first (n = 5..1), tables before columns on ties.
// Quoted spans and numerals become value links. Links never overlap.
std::vector<Link> schema_link(const std::string& question, const Schema& schema);

// Replaces table/column spans with "<mask>" and value spans with "<unk>".
// Throws Error on overlapping or out-of-bounds links.
MaskedQuestion mask_question(const std::string& question, const std::vector<Link>& links);

MaskedQuestion mask_with_schema(const std::string& question, const Schema& schema);

} // namespace dail::masking
