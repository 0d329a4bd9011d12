// Immutable symbolic expressions over coordinates, parameters and
// partial-derivative atoms of unknown fields.
#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace overdet {

using Rational = mpq_class;

/// Orders of differentiation per coordinate. Entries are kept sorted by
/// coordinate name with zero orders dropped, so {t:1,x:1} built in any
/// order compares equal (mixed partials commute).
class MultiIndex {
public:
    using Entry = std::pair<std::string, int>;

    MultiIndex() = default;
    explicit MultiIndex(std::vector<Entry> orders);

    [[nodiscard]] int order(std::string_view coord) const;
    [[nodiscard]] int total() const;
    [[nodiscard]] bool empty() const { return entries_.empty(); }
    [[nodiscard]] const std::vector<Entry>& entries() const { return entries_; }

    [[nodiscard]] MultiIndex raised(std::string_view coord, int by = 1) const;
    [[nodiscard]] MultiIndex with_order(std::string_view coord, int order) const;
    [[nodiscard]] MultiIndex without(std::string_view coord) const;

    auto operator<=>(const MultiIndex&) const = default;
    bool operator==(const MultiIndex&) const = default;

private:
    std::vector<Entry> entries_;
};

/// ∂^index field. A zero index denotes the field value itself.
struct DerivativeAtom {
    std::string field;
    MultiIndex index;

    auto operator<=>(const DerivativeAtom&) const = default;
    bool operator==(const DerivativeAtom&) const = default;

    /// DSL spelling, e.g. `dt(dx(H))`.
    [[nodiscard]] std::string to_string() const;
};

enum class ExprKind : std::uint8_t {
    Constant,
    Coordinate,
    Parameter,
    Derivative,
    Function,
    Power,
    Product,
    Quotient,
    Sum,
};

enum class Func : std::uint8_t { Sin, Cos, Exp, Ln };

[[nodiscard]] std::string_view func_name(Func f);

struct Node;

/// Shared immutable expression tree. Copies are cheap and thread-safe.
///
/// The factory functions apply light canonicalization (flattening, constant
/// folding, collection of identical terms and factors); full rational
/// canonical form is `normalize()` in normalize.hpp.
class Expression {
public:
    Expression();  // the constant 0

    static Expression constant(const Rational& value);
    static Expression integer(long value);
    static Expression coordinate(std::string name);
    static Expression parameter(std::string name);
    static Expression atom(DerivativeAtom atom);
    static Expression field(std::string name);
    static Expression sum(std::vector<Expression> terms);
    static Expression product(std::vector<Expression> factors);
    /// Throws SymbolicError when `den` is syntactically zero.
    static Expression quotient(Expression num, Expression den);
    static Expression power(Expression base, int exponent);
    static Expression apply(Func f, Expression arg);

    [[nodiscard]] ExprKind kind() const;
    [[nodiscard]] const Rational& value() const;
    [[nodiscard]] const std::string& name() const;
    [[nodiscard]] const DerivativeAtom& derivative() const;
    [[nodiscard]] int exponent() const;
    [[nodiscard]] Func func() const;
    [[nodiscard]] std::span<const Expression> children() const;
    [[nodiscard]] std::size_t hash() const;
    [[nodiscard]] const Node* node() const { return node_.get(); }

    [[nodiscard]] bool is_constant() const { return kind() == ExprKind::Constant; }
    [[nodiscard]] bool is_zero() const;
    [[nodiscard]] bool is_one() const;
    [[nodiscard]] bool is_atom() const;  // coordinate, parameter or derivative

    [[nodiscard]] std::string to_string() const;
    [[nodiscard]] std::string to_latex() const;

    friend bool operator==(const Expression& a, const Expression& b);

    friend Expression operator+(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a, const Expression& b);
    friend Expression operator*(const Expression& a, const Expression& b);
    friend Expression operator/(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a);

private:
    explicit Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    friend struct RawBuilder;

    std::shared_ptr<const Node> node_;
};

/// Structural total order: leaves by payload, composites by hash then
/// recursively. Deterministic across runs and platforms.
[[nodiscard]] int compare(const Expression& a, const Expression& b);

struct ExpressionLess {
    bool operator()(const Expression& a, const Expression& b) const { return compare(a, b) < 0; }
};

struct ExpressionHash {
    std::size_t operator()(const Expression& e) const { return e.hash(); }
};

struct Node {
    ExprKind kind = ExprKind::Constant;
    Func func = Func::Sin;
    int exponent = 0;
    Rational value;
    std::string name;
    DerivativeAtom atom;
    std::vector<Expression> children;
    std::size_t hash = 0;
};

/// Builds nodes verbatim, bypassing canonicalization. Used by the rational
/// normalizer to emit terms in monomial order.
struct RawBuilder {
    /// Finalizes `n` (computes its hash) and wraps it.
    static Expression make(Node n);
    static Expression sum(std::vector<Expression> terms);
    static Expression product(std::vector<Expression> factors);
    static Expression quotient(Expression num, Expression den);
    static Expression power(Expression base, int exponent);
};

/// Every derivative atom occurring in `e`, sorted and unique.
[[nodiscard]] std::vector<DerivativeAtom> collect_atoms(const Expression& e);
/// Names of coordinate and parameter symbols occurring in `e`.
[[nodiscard]] std::vector<std::string> collect_symbols(const Expression& e);
[[nodiscard]] bool contains_atom(const Expression& e, const DerivativeAtom& atom);
[[nodiscard]] bool contains_field(const Expression& e, std::string_view field);
/// Number of distinct nodes in the expression DAG.
[[nodiscard]] std::size_t node_count(const Expression& e);

}  // namespace overdet
