#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ubitriage::constraint {

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

/// A variable name or an integer literal.
using Term = std::variant<std::string, std::int64_t>;

using Environment = std::map<std::string, std::int64_t, std::less<>>;

/// Inclusive integer interval every free variable ranges over during
/// feasibility checks.
struct Domain {
    std::int64_t lo = -4;
    std::int64_t hi = 7;

    [[nodiscard]] std::int64_t size() const noexcept { return hi - lo + 1; }
    friend bool operator==(const Domain&, const Domain&) = default;
};

/// Parses `LO..HI`.
Domain parse_domain(std::string_view text);

/// Largest number of free variables `satisfiable` will enumerate.
inline constexpr std::size_t kMaxFreeVariables = 6;

/// Immutable boolean constraint over integer-valued variables. Copies share
/// structure.
///
/// TOP is the unconstrained formula; it prints as `TOP` and the parser reads
/// that spelling back.
class Expr {
public:
    enum class Kind { Top, Compare, Not, And, Or };

    /// Defaults to TOP.
    Expr();

    static Expr top();
    static Expr compare(Term lhs, CmpOp op, Term rhs);
    /// `name`, meaning `name != 0`. Kept distinct from an explicit comparison
    /// only for printing.
    static Expr truthy(std::string name);
    static Expr negate(Expr operand);
    /// Conjunction; TOP operands are dropped, a single operand is returned as is.
    static Expr all_of(std::vector<Expr> operands);
    /// Disjunction; a single operand is returned as is.
    static Expr any_of(std::vector<Expr> operands);

    [[nodiscard]] Kind kind() const;
    [[nodiscard]] bool is_top() const { return kind() == Kind::Top; }

    /// Throws std::out_of_range when a free variable is unbound.
    [[nodiscard]] bool evaluate(const Environment& env) const;

    [[nodiscard]] std::set<std::string> free_variables() const;

    [[nodiscard]] std::string to_string() const;

    /// Children of Not/And/Or; empty otherwise.
    [[nodiscard]] const std::vector<Expr>& operands() const;

    friend bool operator==(const Expr& a, const Expr& b);

    struct Node;

private:
    explicit Expr(std::shared_ptr<const Node> node);
    std::shared_ptr<const Node> node_;
};

/// Parses a post-constraint or path condition.
///
///     expr := or
///     or   := and ('||' and)*
///     and  := not ('&&' not)*
///     not  := '!' not | atom
///     atom := term cmp term | ident | '(' expr ')' | 'TOP'
///     term := ident | int
///
/// A bare ident means `ident != 0`. Identifiers may carry `.`/`->` member
/// paths. An absent, empty or `null` input is TOP. Throws ParseError with the
/// byte position of the first token outside the grammar.
Expr parse_constraint(std::optional<std::string_view> text);

/// True iff some assignment of the free variables to values in `domain`
/// satisfies `e`. Enumerates exhaustively; throws CapacityError above
/// kMaxFreeVariables free variables.
bool satisfiable(const Expr& e, const Domain& domain);

/// Like `satisfiable`, with some variables held at fixed values rather than
/// enumerated.
bool satisfiable_under(const Expr& e, const Environment& fixed, const Domain& domain);

std::string to_string(CmpOp op);

}  // namespace ubitriage::constraint
