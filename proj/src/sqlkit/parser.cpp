#include <optional>

#include "ast.hpp"
#include "dail/error.hpp"

namespace dail::sqlkit {
namespace {

// Recursive-descent parser for the SQLite subset the Spider datasets use:
// select cores with joins, nested selects in FROM/WHERE/HAVING, set
// operations, ORDER BY / LIMIT. No CTEs, CASE, window functions or DML.
class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    SelectPtr parse() {
        SelectPtr stmt = select_stmt();
        if (check_punct(";")) advance();
        if (!at_end()) {
            throw ParseError("trailing tokens after statement: '" + peek().text + "'");
        }
        return stmt;
    }

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;

    bool at_end() const { return pos_ >= tokens_.size(); }
    const Token& peek(std::size_t ahead = 0) const {
        static const Token eof{TokenKind::Punct, "", "", false};
        return pos_ + ahead < tokens_.size() ? tokens_[pos_ + ahead] : eof;
    }
    const Token& advance() {
        if (at_end()) throw ParseError("unexpected end of input");
        return tokens_[pos_++];
    }
    bool check_kw(std::string_view kw) const {
        const Token& t = peek();
        return t.kind == TokenKind::Word && !t.quoted && t.lower == kw;
    }
    bool check_punct(std::string_view p) const {
        const Token& t = peek();
        return t.kind == TokenKind::Punct && t.text == p;
    }
    bool check_op(std::string_view op) const {
        const Token& t = peek();
        return t.kind == TokenKind::Operator && t.text == op;
    }
    bool accept_kw(std::string_view kw) {
        if (check_kw(kw)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect_kw(std::string_view kw) {
        if (!accept_kw(kw)) {
            throw ParseError("expected '" + std::string(kw) + "', got '" + peek().text + "'");
        }
    }
    bool accept_punct(std::string_view p) {
        if (check_punct(p)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect_punct(std::string_view p) {
        if (!accept_punct(p)) {
            throw ParseError("expected '" + std::string(p) + "', got '" + peek().text + "'");
        }
    }

    static bool reserved_after_table(const std::string& lower) {
        // Words that terminate a table reference instead of acting as an alias.
        return is_sql_keyword(lower) || lower == "inner" || lower == "left" || lower == "right" ||
               lower == "full" || lower == "outer" || lower == "cross" || lower == "all";
    }

    SelectPtr select_stmt() {
        auto stmt = std::make_unique<SelectStmt>();
        stmt->core = select_core();
        if (check_kw("order")) {
            advance();
            expect_kw("by");
            do {
                OrderingTerm term;
                term.expr = expression();
                if (accept_kw("asc")) {
                    term.desc = false;
                } else if (accept_kw("desc")) {
                    term.desc = true;
                }
                stmt->core.order_by.push_back(std::move(term));
            } while (accept_punct(","));
        }
        if (accept_kw("limit")) {
            stmt->core.limit = expression();
            if (accept_kw("offset")) {
                stmt->core.offset = expression();
            } else if (accept_punct(",")) {  // LIMIT m, n form
                stmt->core.offset = std::move(stmt->core.limit);
                stmt->core.limit = expression();
            }
        }
        for (const char* op : {"union", "intersect", "except"}) {
            if (check_kw(op)) {
                advance();
                stmt->compound_op = op;
                if (stmt->compound_op == "union" && accept_kw("all")) {
                    stmt->compound_op = "union all";
                }
                stmt->rhs = select_stmt();
                break;
            }
        }
        return stmt;
    }

    SelectCore select_core() {
        SelectCore core;
        expect_kw("select");
        if (accept_kw("distinct")) {
            core.distinct = true;
        } else {
            accept_kw("all");
        }
        do {
            SelectCore::Item item;
            item.expr = expression();
            if (accept_kw("as")) {
                item.alias = identifier_text();
            } else if (peek().kind == TokenKind::Word && !peek().quoted &&
                       !is_sql_keyword(peek().lower) && !is_aggregate(peek().lower)) {
                item.alias = advance().lower;
            }
            core.items.push_back(std::move(item));
        } while (accept_punct(","));

        if (accept_kw("from")) {
            from_clause(core);
        }
        if (accept_kw("where")) {
            core.where = expression();
        }
        if (check_kw("group")) {
            advance();
            expect_kw("by");
            do {
                core.group_by.push_back(expression());
            } while (accept_punct(","));
        }
        if (accept_kw("having")) {
            core.having = expression();
        }
        return core;
    }

    void from_clause(SelectCore& core) {
        core.from.push_back(table_ref());
        while (true) {
            if (accept_punct(",")) {
                core.from.push_back(table_ref());
                continue;
            }
            bool is_join = false;
            if (check_kw("join")) {
                advance();
                is_join = true;
            } else if (check_kw("inner") || check_kw("cross")) {
                advance();
                expect_kw("join");
                is_join = true;
            } else if (check_kw("left") || check_kw("right") || check_kw("full")) {
                advance();
                accept_kw("outer");
                expect_kw("join");
                is_join = true;
            }
            if (!is_join) break;
            core.from.push_back(table_ref());
            if (accept_kw("on")) {
                core.join_ons.push_back(expression());
            }
        }
    }

    TableRef table_ref() {
        TableRef ref;
        if (accept_punct("(")) {
            ref.subquery = select_stmt();
            expect_punct(")");
        } else {
            ref.name = identifier_text();
        }
        if (accept_kw("as")) {
            ref.alias = identifier_text();
        } else if (peek().kind == TokenKind::Word &&
                   (peek().quoted || !reserved_after_table(peek().lower))) {
            ref.alias = advance().lower;
        }
        return ref;
    }

    std::string identifier_text() {
        const Token& t = peek();
        if (t.kind != TokenKind::Word) {
            throw ParseError("expected identifier, got '" + t.text + "'");
        }
        if (!t.quoted && is_sql_keyword(t.lower)) {
            throw ParseError("expected identifier, got keyword '" + t.text + "'");
        }
        advance();
        return t.lower;
    }

    ExprPtr expression() { return or_expr(); }

    ExprPtr or_expr() {
        ExprPtr lhs = and_expr();
        while (accept_kw("or")) {
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Binary;
            e->op = "or";
            e->lhs = std::move(lhs);
            e->rhs = and_expr();
            lhs = std::move(e);
        }
        return lhs;
    }

    ExprPtr and_expr() {
        ExprPtr lhs = not_expr();
        while (accept_kw("and")) {
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Binary;
            e->op = "and";
            e->lhs = std::move(lhs);
            e->rhs = not_expr();
            lhs = std::move(e);
        }
        return lhs;
    }

    ExprPtr not_expr() {
        if (accept_kw("not")) {
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Unary;
            e->op = "not";
            e->lhs = not_expr();
            return e;
        }
        return comparison();
    }

    ExprPtr comparison() {
        ExprPtr lhs = additive();
        bool negated = false;
        if (check_kw("not") &&
            (peek(1).lower == "in" || peek(1).lower == "like" || peek(1).lower == "between")) {
            advance();
            negated = true;
        }
        if (accept_kw("between")) {
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Between;
            e->negated = negated;
            e->lhs = std::move(lhs);
            e->rhs = additive();
            expect_kw("and");
            e->third = additive();
            return e;
        }
        if (accept_kw("in")) {
            auto e = std::make_unique<Expr>();
            e->negated = negated;
            e->lhs = std::move(lhs);
            expect_punct("(");
            if (check_kw("select")) {
                e->kind = Expr::Kind::InSelect;
                e->select = select_stmt();
            } else {
                e->kind = Expr::Kind::InList;
                do {
                    e->list.push_back(expression());
                } while (accept_punct(","));
            }
            expect_punct(")");
            return e;
        }
        if (accept_kw("like")) {
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Like;
            e->negated = negated;
            e->lhs = std::move(lhs);
            e->rhs = additive();
            return e;
        }
        if (negated) throw ParseError("dangling NOT before comparison");
        if (accept_kw("is")) {
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::IsNull;
            e->negated = accept_kw("not");
            e->lhs = std::move(lhs);
            expect_kw("null");
            return e;
        }
        static constexpr const char* cmp_ops[] = {"=", "==", "!=", "<>", "<", ">", "<=", ">="};
        for (const char* op : cmp_ops) {
            if (check_op(op)) {
                advance();
                auto e = std::make_unique<Expr>();
                e->kind = Expr::Kind::Binary;
                e->op = op;
                if (e->op == "==") e->op = "=";
                if (e->op == "<>") e->op = "!=";
                e->lhs = std::move(lhs);
                e->rhs = additive();
                return e;
            }
        }
        return lhs;
    }

    ExprPtr additive() {
        ExprPtr lhs = multiplicative();
        while (check_op("+") || check_op("-") || check_op("||")) {
            std::string op = advance().text;
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Binary;
            e->op = op;
            e->lhs = std::move(lhs);
            e->rhs = multiplicative();
            lhs = std::move(e);
        }
        return lhs;
    }

    ExprPtr multiplicative() {
        ExprPtr lhs = unary();
        while (check_op("*") || check_op("/") || check_op("%")) {
            std::string op = advance().text;
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Binary;
            e->op = op;
            e->lhs = std::move(lhs);
            e->rhs = unary();
            lhs = std::move(e);
        }
        return lhs;
    }

    ExprPtr unary() {
        if (check_op("-") || check_op("+")) {
            std::string op = advance().text;
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Unary;
            e->op = op;
            e->lhs = unary();
            return e;
        }
        return primary();
    }

    ExprPtr primary() {
        const Token& t = peek();
        if (t.kind == TokenKind::Number) {
            advance();
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Literal;
            e->literal = t.text;
            return e;
        }
        if (t.kind == TokenKind::String) {
            advance();
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Literal;
            e->literal = t.text;
            e->is_string = true;
            return e;
        }
        if (check_op("*")) {
            advance();
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Star;
            return e;
        }
        if (check_punct("(")) {
            advance();
            if (check_kw("select")) {
                auto e = std::make_unique<Expr>();
                e->kind = Expr::Kind::Subquery;
                e->select = select_stmt();
                expect_punct(")");
                return e;
            }
            ExprPtr inner = expression();
            expect_punct(")");
            return inner;
        }
        if (check_kw("exists")) {
            advance();
            expect_punct("(");
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Exists;
            e->select = select_stmt();
            expect_punct(")");
            return e;
        }
        if (check_kw("null")) {
            advance();
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Literal;
            e->literal = "null";
            return e;
        }
        if (t.kind == TokenKind::Word) {
            // function call?
            if (peek(1).kind == TokenKind::Punct && peek(1).text == "(" &&
                (!is_sql_keyword(t.lower) || t.quoted)) {
                auto e = std::make_unique<Expr>();
                e->kind = Expr::Kind::Call;
                e->func = t.lower;
                advance();  // name
                advance();  // (
                if (accept_kw("distinct")) e->distinct_arg = true;
                if (check_op("*")) {
                    advance();
                    e->star_arg = true;
                } else if (!check_punct(")")) {
                    do {
                        e->args.push_back(expression());
                    } while (accept_punct(","));
                }
                expect_punct(")");
                return e;
            }
            if (!t.quoted && is_sql_keyword(t.lower)) {
                throw ParseError("unexpected keyword '" + t.text + "'");
            }
            advance();
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Column;
            e->column = t.lower;
            // qualified name: table.column or table.*
            while (check_punct(".")) {
                advance();
                if (check_op("*")) {
                    advance();
                    e->kind = Expr::Kind::Star;
                    e->table = e->column;
                    e->column.clear();
                    return e;
                }
                const Token& part = peek();
                if (part.kind != TokenKind::Word) {
                    throw ParseError("expected name after '.'");
                }
                advance();
                if (e->table.empty()) {
                    e->table = e->column;
                } else {
                    e->table += "." + e->column;  // db.table.column: fold db into qualifier
                }
                e->column = part.lower;
            }
            return e;
        }
        throw ParseError("unexpected token '" + t.text + "'");
    }
};

} // namespace

SelectPtr parse_select(std::string_view sql) {
    std::vector<Token> tokens = lex(sql);
    if (tokens.empty()) {
        throw ParseError("empty statement");
    }
    Parser parser(std::move(tokens));
    return parser.parse();
}

} // namespace dail::sqlkit
