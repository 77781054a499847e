#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dail/sqlkit.hpp"

namespace dail::sqlkit {

struct Expr;
struct SelectStmt;
using ExprPtr = std::unique_ptr<Expr>;
using SelectPtr = std::unique_ptr<SelectStmt>;

struct Expr {
    enum class Kind {
        Column,    // table(optional alias) . column
        Literal,   // number or string
        Star,      // * or table.*
        Call,      // func(args) / func(*) / func(distinct x)
        Unary,     // -x, +x, not x
        Binary,    // arithmetic / comparison / concat
        Between,   // lhs between rhs and third
        InList,    // lhs [not] in (e1, e2, ...)
        InSelect,  // lhs [not] in (select ...)
        Like,      // lhs [not] like rhs
        IsNull,    // lhs is [not] null
        Exists,    // exists (select ...)
        Subquery,  // (select ...) as a scalar operand
    };

    Kind kind = Kind::Literal;
    std::string table;    // Column / Star qualifier (may be an alias)
    std::string column;   // Column name
    std::string literal;  // Literal text
    bool is_string = false;
    std::string func;     // Call name (lowercase)
    bool distinct_arg = false;
    bool star_arg = false;
    std::vector<ExprPtr> args;
    std::string op;       // Unary/Binary operator (normalized lowercase)
    ExprPtr lhs, rhs, third;
    bool negated = false; // NOT IN / NOT LIKE / IS NOT
    std::vector<ExprPtr> list;
    SelectPtr select;
};

struct OrderingTerm {
    ExprPtr expr;
    bool desc = false;
};

struct TableRef {
    std::string name;   // empty for subquery sources
    std::string alias;  // empty when none
    SelectPtr subquery;
};

struct SelectCore {
    bool distinct = false;
    struct Item {
        ExprPtr expr;
        std::string alias;
    };
    std::vector<Item> items;
    std::vector<TableRef> from;
    std::vector<ExprPtr> join_ons;
    ExprPtr where;
    std::vector<ExprPtr> group_by;
    ExprPtr having;
    std::vector<OrderingTerm> order_by;
    ExprPtr limit;
    ExprPtr offset;
};

struct SelectStmt {
    SelectCore core;
    std::string compound_op;  // "", "union", "union all", "intersect", "except"
    SelectPtr rhs;
};

// Throws ParseError on any syntax it does not understand.
SelectPtr parse_select(std::string_view sql);

} // namespace dail::sqlkit
