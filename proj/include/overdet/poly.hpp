// Sparse multivariate polynomials and rational functions over Q.
//
// Variables are small integers issued by a VarTable; the table keeps them in
// the global symbol order so that graded-lex comparisons on ids agree with
// the canonical output order.
#pragma once

#include "overdet/expr.hpp"

#include <map>
#include <optional>
#include <vector>

namespace overdet {

/// Sparse exponent vector, sorted by variable id, no zero exponents.
using Monomial = std::vector<std::pair<int, int>>;

int monomial_degree(const Monomial& m);

/// Graded lexicographic order; smaller variable ids are more significant.
struct GrlexLess {
    bool operator()(const Monomial& a, const Monomial& b) const;
};

class Poly {
public:
    using Terms = std::map<Monomial, Rational, GrlexLess>;

    Poly() = default;
    explicit Poly(const Rational& c);
    static Poly variable(int id, int exp = 1);

    [[nodiscard]] bool is_zero() const { return terms_.empty(); }
    [[nodiscard]] bool is_constant() const;
    [[nodiscard]] Rational constant_value() const;  // 0 if not constant
    [[nodiscard]] const Terms& terms() const { return terms_; }
    [[nodiscard]] const Monomial& leading_monomial() const;
    [[nodiscard]] const Rational& leading_coefficient() const;
    [[nodiscard]] int degree_in(int var) const;
    [[nodiscard]] int total_degree() const;
    [[nodiscard]] std::vector<int> variables() const;

    /// Coefficients in `var` indexed by degree.
    [[nodiscard]] std::vector<Poly> coefficients_in(int var) const;
    static Poly from_coefficients(const std::vector<Poly>& coeffs, int var);

    [[nodiscard]] Poly derivative(int var) const;
    [[nodiscard]] Poly scaled(const Rational& c) const;
    [[nodiscard]] Poly monic() const;

    Poly& operator+=(const Poly& o);
    Poly& operator-=(const Poly& o);
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend Poly operator-(const Poly& a) { return a.scaled(Rational(-1)); }
    friend Poly operator*(const Poly& a, const Poly& b);
    friend bool operator==(const Poly& a, const Poly& b) { return a.terms_ == b.terms_; }

    [[nodiscard]] Poly pow(unsigned k) const;

    void add_term(const Monomial& m, const Rational& c);

private:
    Terms terms_;
};

/// Exact quotient a/b, or nullopt when b does not divide a.
std::optional<Poly> divide_exact(const Poly& a, const Poly& b);
/// Monic greatest common divisor (1 for coprime inputs, 0 only for 0,0).
Poly gcd(const Poly& a, const Poly& b);
/// Square-free factorization: monic factors with multiplicities, and the
/// leading constant.
struct SquareFree {
    Rational unit;
    std::vector<std::pair<Poly, int>> factors;
};
SquareFree square_free(const Poly& p);

/// num/den with den monic and gcd(num, den) = 1.
class RationalFunction {
public:
    RationalFunction() : den_(Rational(1)) {}
    RationalFunction(Poly num);  // NOLINT: implicit promotion is convenient
    RationalFunction(Poly num, Poly den);

    [[nodiscard]] const Poly& num() const { return num_; }
    [[nodiscard]] const Poly& den() const { return den_; }
    [[nodiscard]] bool is_zero() const { return num_.is_zero(); }
    [[nodiscard]] bool is_polynomial() const { return den_.is_constant(); }

    friend RationalFunction operator+(const RationalFunction& a, const RationalFunction& b);
    friend RationalFunction operator-(const RationalFunction& a, const RationalFunction& b);
    friend RationalFunction operator-(const RationalFunction& a);
    friend RationalFunction operator*(const RationalFunction& a, const RationalFunction& b);
    /// Throws SymbolicError when b is zero.
    friend RationalFunction operator/(const RationalFunction& a, const RationalFunction& b);
    [[nodiscard]] RationalFunction pow(int k) const;
    friend bool operator==(const RationalFunction& a, const RationalFunction& b)
    {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }

private:
    void reduce();
    Poly num_;
    Poly den_;
};

/// Strict order on variable expressions: derivative atoms (by field, higher
/// order first), then elementary-function applications, then parameters,
/// then coordinates.
bool variable_less(const Expression& a, const Expression& b);

/// Maps Expressions to rational functions over a shared variable table.
/// Function applications become opaque variables after their arguments are
/// normalized.
class VarTable {
public:
    /// Registers every variable of `roots` up front so that ids follow the
    /// global order.
    explicit VarTable(const std::vector<Expression>& roots);

    [[nodiscard]] RationalFunction convert(const Expression& e);
    [[nodiscard]] Expression to_expression(const Poly& p) const;
    [[nodiscard]] Expression to_expression(const RationalFunction& f) const;
    [[nodiscard]] std::optional<int> id_of(const Expression& var) const;
    [[nodiscard]] const Expression& variable(int id) const { return vars_[static_cast<std::size_t>(id)]; }
    [[nodiscard]] int size() const { return static_cast<int>(vars_.size()); }

private:
    Expression canonical_leaf(const Expression& e);
    void gather(const Expression& e, std::vector<Expression>& out);
    int intern(const Expression& var);

    std::vector<Expression> vars_;
    std::map<Expression, int, ExpressionLess> ids_;
    std::map<const Node*, Expression> functions_;
    std::map<const Node*, RationalFunction> memo_;
    std::vector<Expression> keep_alive_;
};

}  // namespace overdet
