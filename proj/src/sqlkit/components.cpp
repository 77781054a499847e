#include <map>
#include <sstream>

#include "ast.hpp"
#include "dail/error.hpp"
#include "dail/sqlkit.hpp"

namespace dail::sqlkit {
namespace {

ComponentSet decompose(const SelectStmt& stmt);

// Canonicalizes one select core. Aliases are resolved to their table names;
// when FROM names exactly one table, bare columns are qualified with it so
// "name" and "singer.name" compare equal. Literal values become "_".
class Normalizer {
public:
    Normalizer(const SelectCore& core, ComponentSet& out) : core_(core), out_(out) {
        for (const TableRef& ref : core.from) {
            if (ref.subquery) continue;
            alias_[ref.name] = ref.name;
            if (!ref.alias.empty()) alias_[ref.alias] = ref.name;
        }
        if (core.from.size() == 1 && !core.from[0].subquery) {
            single_table_ = core.from[0].name;
        }
    }

    void run() {
        if (core_.distinct) {
            out_.select_distinct = true;
            out_.keywords.insert("distinct");
        }
        for (const auto& item : core_.items) {
            out_.select_items.insert(expr(*item.expr));
        }
        for (const TableRef& ref : core_.from) {
            if (ref.subquery) {
                out_.from_tables.insert("( " + decompose(*ref.subquery).fingerprint() + " )");
                out_.keywords.insert("nested");
            } else {
                out_.from_tables.insert(ref.name);
            }
        }
        if (core_.from.size() > 1) out_.keywords.insert("join");
        for (const ExprPtr& on : core_.join_ons) {
            flatten_bool(*on, /*join_cond=*/true);
        }
        if (core_.where) {
            out_.keywords.insert("where");
            flatten_bool(*core_.where, false, &out_.where_conditions);
        }
        for (const ExprPtr& g : core_.group_by) {
            out_.group_by_items.insert(expr(*g));
        }
        if (!core_.group_by.empty()) out_.keywords.insert("group_by");
        if (core_.having) {
            out_.keywords.insert("having");
            flatten_bool(*core_.having, false, &out_.having_conditions);
        }
        for (const OrderingTerm& term : core_.order_by) {
            out_.order_by_items.insert(expr(*term.expr) + (term.desc ? " desc" : " asc"));
        }
        if (!core_.order_by.empty()) out_.keywords.insert("order_by");
        if (core_.limit) out_.keywords.insert("limit");
        if (core_.offset) out_.keywords.insert("offset");
    }

private:
    const SelectCore& core_;
    ComponentSet& out_;
    std::map<std::string, std::string> alias_;
    std::string single_table_;

    std::string column_ref(const Expr& e) const {
        std::string table = e.table;
        auto it = alias_.find(table);
        if (it != alias_.end()) table = it->second;
        if (table.empty()) table = single_table_;
        return table.empty() ? e.column : table + "." + e.column;
    }

    std::string sub_fingerprint(const SelectStmt& s) {
        out_.keywords.insert("nested");
        return decompose(s).fingerprint();
    }

    std::string expr(const Expr& e) {
        switch (e.kind) {
            case Expr::Kind::Column:
                return column_ref(e);
            case Expr::Kind::Literal:
                return "_";
            case Expr::Kind::Star:
                return "*";
            case Expr::Kind::Call: {
                if (is_aggregate(e.func)) out_.aggregates.insert(e.func);
                std::string inner;
                if (e.star_arg) {
                    inner = "*";
                } else {
                    for (std::size_t i = 0; i < e.args.size(); ++i) {
                        if (i) inner += " , ";
                        inner += expr(*e.args[i]);
                    }
                }
                return e.func + " ( " + (e.distinct_arg ? "distinct " : "") + inner + " )";
            }
            case Expr::Kind::Unary:
                if (e.op == "not") {
                    out_.keywords.insert("not");
                    return "not " + expr(*e.lhs);
                }
                // signed literal is still just a value
                if (e.lhs->kind == Expr::Kind::Literal) return "_";
                return e.op + " " + expr(*e.lhs);
            case Expr::Kind::Binary:
                return expr(*e.lhs) + " " + e.op + " " + expr(*e.rhs);
            case Expr::Kind::Between:
                out_.keywords.insert("between");
                if (e.negated) out_.keywords.insert("not");
                return expr(*e.lhs) + (e.negated ? " not" : "") + " between " + expr(*e.rhs) +
                       " and " + expr(*e.third);
            case Expr::Kind::InList:
                out_.keywords.insert("in");
                if (e.negated) out_.keywords.insert("not");
                return expr(*e.lhs) + (e.negated ? " not" : "") + " in ( _ )";
            case Expr::Kind::InSelect:
                out_.keywords.insert("in");
                if (e.negated) out_.keywords.insert("not");
                return expr(*e.lhs) + (e.negated ? " not" : "") + " in ( " +
                       sub_fingerprint(*e.select) + " )";
            case Expr::Kind::Like:
                out_.keywords.insert("like");
                if (e.negated) out_.keywords.insert("not");
                return expr(*e.lhs) + (e.negated ? " not" : "") + " like " + expr(*e.rhs);
            case Expr::Kind::IsNull:
                return expr(*e.lhs) + " is " + (e.negated ? "not null" : "null");
            case Expr::Kind::Exists:
                out_.keywords.insert("exists");
                return "exists ( " + sub_fingerprint(*e.select) + " )";
            case Expr::Kind::Subquery:
                return "( " + sub_fingerprint(*e.select) + " )";
        }
        return "_";
    }

    // Splits a boolean tree on and/or into atomic condition strings; the
    // connective structure is reduced to an "or" keyword marker, mirroring
    // clause-set comparison semantics.
    void flatten_bool(const Expr& e, bool join_cond, std::set<std::string>* into = nullptr) {
        if (e.kind == Expr::Kind::Binary && (e.op == "and" || e.op == "or")) {
            if (e.op == "or") out_.keywords.insert("or");
            flatten_bool(*e.lhs, join_cond, into);
            flatten_bool(*e.rhs, join_cond, into);
            return;
        }
        std::string cond;
        // Column-to-column equality commutes; store it sorted.
        if (e.kind == Expr::Kind::Binary && e.op == "=" &&
            e.lhs->kind == Expr::Kind::Column && e.rhs->kind == Expr::Kind::Column) {
            std::string a = column_ref(*e.lhs);
            std::string b = column_ref(*e.rhs);
            if (b < a) std::swap(a, b);
            cond = a + " = " + b;
        } else {
            cond = expr(e);
        }
        if (join_cond) {
            out_.join_conditions.insert(cond);
        } else if (into) {
            into->insert(cond);
        }
    }
};

ComponentSet decompose(const SelectStmt& stmt) {
    ComponentSet out;
    Normalizer(stmt.core, out).run();
    if (stmt.rhs) {
        out.compound_op = stmt.compound_op;
        out.keywords.insert(stmt.compound_op == "union all" ? "union" : stmt.compound_op);
        out.compound_right = decompose(*stmt.rhs).fingerprint();
    }
    return out;
}

std::string join_set(const std::set<std::string>& s) {
    std::string out;
    for (const auto& item : s) {
        if (!out.empty()) out += ";";
        out += item;
    }
    return out;
}

} // namespace

std::string ComponentSet::fingerprint() const {
    std::ostringstream os;
    os << "sel{" << join_set(select_items) << "}d" << (select_distinct ? 1 : 0) << "|from{"
       << join_set(from_tables) << "}|jc{" << join_set(join_conditions) << "}|w{"
       << join_set(where_conditions) << "}|g{" << join_set(group_by_items) << "}|h{"
       << join_set(having_conditions) << "}|o{" << join_set(order_by_items) << "}|a{"
       << join_set(aggregates) << "}|k{" << join_set(keywords) << "}";
    if (!compound_op.empty()) {
        os << "|" << compound_op << "(" << compound_right << ")";
    }
    return os.str();
}

ComponentSet decompose_components(std::string_view sql) {
    SelectPtr stmt = parse_select(sql);
    return decompose(*stmt);
}

bool has_top_level_order_by(std::string_view sql) {
    try {
        const SelectStmt* s = nullptr;
        SelectPtr stmt = parse_select(sql);
        for (s = stmt.get(); s != nullptr; s = s->rhs.get()) {
            if (!s->core.order_by.empty()) return true;
        }
        return false;
    } catch (const ParseError&) {
        // Lexical fallback: ORDER BY outside parentheses.
        std::vector<Token> tokens;
        try {
            tokens = lex(sql);
        } catch (const ParseError&) {
            return false;
        }
        int depth = 0;
        for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
            if (tokens[i].kind == TokenKind::Punct) {
                if (tokens[i].text == "(") ++depth;
                if (tokens[i].text == ")") --depth;
            }
            if (depth == 0 && tokens[i].kind == TokenKind::Word && tokens[i].lower == "order" &&
                tokens[i + 1].kind == TokenKind::Word && tokens[i + 1].lower == "by") {
                return true;
            }
        }
        return false;
    }
}

} // namespace dail::sqlkit
