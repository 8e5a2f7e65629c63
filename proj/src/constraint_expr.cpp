#include "ubitriage/constraint_expr.hpp"

#include "ubitriage/error.hpp"

#include <cctype>
#include <charconv>
#include <stdexcept>

namespace ubitriage::constraint {

struct Expr::Node {
    Kind kind = Kind::Top;
    Term lhs;
    CmpOp op = CmpOp::Eq;
    Term rhs;
    bool bare = false;
    std::vector<Expr> children;
};

namespace {

const std::vector<Expr>& no_children() {
    static const std::vector<Expr> empty;
    return empty;
}

std::int64_t term_value(const Term& t, const Environment& env) {
    if (const auto* v = std::get_if<std::int64_t>(&t)) {
        return *v;
    }
    const auto& name = std::get<std::string>(t);
    auto it = env.find(name);
    if (it == env.end()) {
        throw std::out_of_range("unbound variable '" + name + "'");
    }
    return it->second;
}

std::string term_string(const Term& t) {
    if (const auto* v = std::get_if<std::int64_t>(&t)) {
        return std::to_string(*v);
    }
    return std::get<std::string>(t);
}

// Binding strength used to decide where parentheses are needed.
int precedence(Expr::Kind k) {
    switch (k) {
        case Expr::Kind::Or:
            return 1;
        case Expr::Kind::And:
            return 2;
        case Expr::Kind::Not:
            return 3;
        default:
            return 4;
    }
}

}  // namespace

std::string to_string(CmpOp op) {
    switch (op) {
        case CmpOp::Eq:
            return "==";
        case CmpOp::Ne:
            return "!=";
        case CmpOp::Lt:
            return "<";
        case CmpOp::Le:
            return "<=";
        case CmpOp::Gt:
            return ">";
        case CmpOp::Ge:
            return ">=";
    }
    return "?";
}

Expr::Expr() : Expr(top()) {}

Expr::Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expr Expr::top() {
    static const auto shared = std::make_shared<const Node>();
    return Expr(shared);
}

Expr Expr::compare(Term lhs, CmpOp op, Term rhs) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Compare;
    n->lhs = std::move(lhs);
    n->op = op;
    n->rhs = std::move(rhs);
    return Expr(std::move(n));
}

Expr Expr::truthy(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Compare;
    n->lhs = std::move(name);
    n->op = CmpOp::Ne;
    n->rhs = std::int64_t{0};
    n->bare = true;
    return Expr(std::move(n));
}

Expr Expr::negate(Expr operand) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Not;
    n->children.push_back(std::move(operand));
    return Expr(std::move(n));
}

Expr Expr::all_of(std::vector<Expr> operands) {
    std::vector<Expr> kept;
    for (auto& e : operands) {
        if (!e.is_top()) {
            kept.push_back(std::move(e));
        }
    }
    if (kept.empty()) {
        return top();
    }
    if (kept.size() == 1) {
        return kept.front();
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::And;
    n->children = std::move(kept);
    return Expr(std::move(n));
}

Expr Expr::any_of(std::vector<Expr> operands) {
    if (operands.empty()) {
        throw std::invalid_argument("empty disjunction");
    }
    if (operands.size() == 1) {
        return operands.front();
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::Or;
    n->children = std::move(operands);
    return Expr(std::move(n));
}

Expr::Kind Expr::kind() const {
    return node_->kind;
}

const std::vector<Expr>& Expr::operands() const {
    return node_->children.empty() ? no_children() : node_->children;
}

bool Expr::evaluate(const Environment& env) const {
    const Node& n = *node_;
    switch (n.kind) {
        case Kind::Top:
            return true;
        case Kind::Compare: {
            const auto a = term_value(n.lhs, env);
            const auto b = term_value(n.rhs, env);
            switch (n.op) {
                case CmpOp::Eq:
                    return a == b;
                case CmpOp::Ne:
                    return a != b;
                case CmpOp::Lt:
                    return a < b;
                case CmpOp::Le:
                    return a <= b;
                case CmpOp::Gt:
                    return a > b;
                case CmpOp::Ge:
                    return a >= b;
            }
            return false;
        }
        case Kind::Not:
            return !n.children.front().evaluate(env);
        case Kind::And:
            for (const auto& c : n.children) {
                if (!c.evaluate(env)) {
                    return false;
                }
            }
            return true;
        case Kind::Or:
            for (const auto& c : n.children) {
                if (c.evaluate(env)) {
                    return true;
                }
            }
            return false;
    }
    return false;
}

std::set<std::string> Expr::free_variables() const {
    std::set<std::string> out;
    const Node& n = *node_;
    if (n.kind == Kind::Compare) {
        for (const auto* t : {&n.lhs, &n.rhs}) {
            if (const auto* s = std::get_if<std::string>(t)) {
                out.insert(*s);
            }
        }
    }
    for (const auto& c : n.children) {
        auto sub = c.free_variables();
        out.insert(sub.begin(), sub.end());
    }
    return out;
}

std::string Expr::to_string() const {
    const Node& n = *node_;
    auto wrap = [&](const Expr& child) {
        auto s = child.to_string();
        if (precedence(child.kind()) <= precedence(n.kind)) {
            return "(" + s + ")";
        }
        return s;
    };
    switch (n.kind) {
        case Kind::Top:
            return "TOP";
        case Kind::Compare:
            if (n.bare) {
                return term_string(n.lhs);
            }
            return term_string(n.lhs) + " " + constraint::to_string(n.op) + " " + term_string(n.rhs);
        case Kind::Not: {
            const auto& child = n.children.front();
            auto s = child.to_string();
            const bool comparison = child.kind() == Kind::Compare && !child.node_->bare;
            return comparison || precedence(child.kind()) < precedence(Kind::Not) ? "!(" + s + ")" : "!" + s;
        }
        case Kind::And:
        case Kind::Or: {
            std::string out;
            const char* sep = n.kind == Kind::And ? " && " : " || ";
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                if (i > 0) {
                    out += sep;
                }
                out += wrap(n.children[i]);
            }
            return out;
        }
    }
    return "?";
}

bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) {
        return true;
    }
    const auto& x = *a.node_;
    const auto& y = *b.node_;
    if (x.kind != y.kind) {
        return false;
    }
    if (x.kind == Expr::Kind::Compare) {
        return x.lhs == y.lhs && x.op == y.op && x.rhs == y.rhs && x.bare == y.bare;
    }
    return x.children == y.children;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Expr parse() {
        skip_ws();
        auto e = parse_or();
        skip_ws();
        if (pos_ != text_.size()) {
            fail("unexpected input");
        }
        return e;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("constraint: " + what + " in '" + std::string(text_) + "'", pos_);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])) != 0) {
            ++pos_;
        }
    }

    bool accept(std::string_view tok) {
        skip_ws();
        if (text_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_'; }
    static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

    Expr parse_or() {
        std::vector<Expr> parts{parse_and()};
        while (accept("||")) {
            parts.push_back(parse_and());
        }
        return parts.size() == 1 ? parts.front() : Expr::any_of(std::move(parts));
    }

    Expr parse_and() {
        std::vector<Expr> parts{parse_not()};
        while (accept("&&")) {
            parts.push_back(parse_not());
        }
        return parts.size() == 1 ? parts.front() : Expr::all_of(std::move(parts));
    }

    Expr parse_not() {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '!' && text_.substr(pos_, 2) != "!=") {
            ++pos_;
            return Expr::negate(parse_not());
        }
        return parse_atom();
    }

    std::optional<CmpOp> parse_cmp() {
        skip_ws();
        static constexpr std::pair<std::string_view, CmpOp> ops[] = {
            {"==", CmpOp::Eq}, {"!=", CmpOp::Ne}, {"<=", CmpOp::Le},
            {">=", CmpOp::Ge}, {"<", CmpOp::Lt},  {">", CmpOp::Gt}};
        for (const auto& [spelling, op] : ops) {
            if (text_.substr(pos_, spelling.size()) == spelling) {
                pos_ += spelling.size();
                return op;
            }
        }
        return std::nullopt;
    }

    std::optional<std::string> parse_ident() {
        skip_ws();
        if (pos_ >= text_.size() || !ident_start(text_[pos_])) {
            return std::nullopt;
        }
        const std::size_t start = pos_;
        while (pos_ < text_.size()) {
            if (ident_char(text_[pos_])) {
                ++pos_;
            } else if (text_[pos_] == '.' && pos_ + 1 < text_.size() && ident_start(text_[pos_ + 1])) {
                ++pos_;
            } else if (text_.substr(pos_, 2) == "->" && pos_ + 2 < text_.size() && ident_start(text_[pos_ + 2])) {
                pos_ += 2;
            } else {
                break;
            }
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    std::optional<std::int64_t> parse_int() {
        skip_ws();
        const std::size_t start = pos_;
        std::size_t p = pos_;
        bool neg = false;
        if (p < text_.size() && text_[p] == '-') {
            neg = true;
            ++p;
        }
        if (p >= text_.size() || std::isdigit(static_cast<unsigned char>(text_[p])) == 0) {
            return std::nullopt;
        }
        int base = 10;
        if (text_.substr(p, 2) == "0x" || text_.substr(p, 2) == "0X") {
            base = 16;
            p += 2;
        }
        std::uint64_t mag = 0;
        const char* first = text_.data() + p;
        const char* last = text_.data() + text_.size();
        auto [ptr, ec] = std::from_chars(first, last, mag, base);
        if (ec != std::errc() || ptr == first) {
            pos_ = start;
            fail("bad integer literal");
        }
        pos_ = static_cast<std::size_t>(ptr - text_.data());
        if (pos_ < text_.size() && ident_char(text_[pos_])) {
            fail("bad integer literal");
        }
        return neg ? -static_cast<std::int64_t>(mag) : static_cast<std::int64_t>(mag);
    }

    std::optional<Term> parse_term() {
        if (auto i = parse_int()) {
            return Term{*i};
        }
        if (auto id = parse_ident()) {
            return Term{*id};
        }
        return std::nullopt;
    }

    Expr parse_atom() {
        skip_ws();
        if (accept("(")) {
            auto e = parse_or();
            if (!accept(")")) {
                fail("expected ')'");
            }
            return e;
        }
        const std::size_t start = pos_;
        auto lhs = parse_term();
        if (!lhs) {
            fail("expected a comparison, identifier or '('");
        }
        const std::size_t after_term = pos_;
        if (auto op = parse_cmp()) {
            auto rhs = parse_term();
            if (!rhs) {
                fail("expected identifier or integer after comparison");
            }
            return Expr::compare(std::move(*lhs), *op, std::move(*rhs));
        }
        pos_ = after_term;
        if (const auto* name = std::get_if<std::string>(&*lhs)) {
            if (*name == "TOP") {
                return Expr::top();
            }
            return Expr::truthy(*name);
        }
        pos_ = start;
        fail("a bare integer is not a condition");
    }
};

}  // namespace

Expr parse_constraint(std::optional<std::string_view> text) {
    if (!text) {
        return Expr::top();
    }
    std::string_view t = *text;
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front())) != 0) {
        t.remove_prefix(1);
    }
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back())) != 0) {
        t.remove_suffix(1);
    }
    if (t.empty() || t == "null") {
        return Expr::top();
    }
    return Parser(*text).parse();
}

// ---------------------------------------------------------------------------
// Feasibility

Domain parse_domain(std::string_view text) {
    const auto sep = text.find("..");
    auto parse = [&](std::string_view s) {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
            throw ParseError("domain must look like LO..HI, got '" + std::string(text) + "'",
                             static_cast<std::size_t>(ptr - text.data()));
        }
        return v;
    };
    if (sep == std::string_view::npos) {
        throw ParseError("domain must look like LO..HI, got '" + std::string(text) + "'", 0);
    }
    Domain d{parse(text.substr(0, sep)), parse(text.substr(sep + 2))};
    if (d.lo > d.hi) {
        throw ParseError("empty domain '" + std::string(text) + "'", sep);
    }
    return d;
}

bool satisfiable_under(const Expr& e, const Environment& fixed, const Domain& domain) {
    if (domain.lo > domain.hi) {
        throw std::invalid_argument("empty domain");
    }
    std::vector<std::string> vars;
    for (const auto& v : e.free_variables()) {
        if (!fixed.contains(v)) {
            vars.push_back(v);
        }
    }
    if (vars.size() > kMaxFreeVariables) {
        throw CapacityError("constraint '" + e.to_string() + "' has " + std::to_string(vars.size()) +
                            " free variables; at most " + std::to_string(kMaxFreeVariables) + " are enumerated");
    }

    Environment env = fixed;
    for (const auto& v : vars) {
        env[v] = domain.lo;
    }
    // Odometer over the free variables.
    while (true) {
        if (e.evaluate(env)) {
            return true;
        }
        std::size_t k = 0;
        for (; k < vars.size(); ++k) {
            auto& slot = env[vars[k]];
            if (slot < domain.hi) {
                ++slot;
                break;
            }
            slot = domain.lo;
        }
        if (k == vars.size()) {
            return false;
        }
    }
}

bool satisfiable(const Expr& e, const Domain& domain) {
    return satisfiable_under(e, {}, domain);
}

}  // namespace ubitriage::constraint
