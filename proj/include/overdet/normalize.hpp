// Rational canonical form and exact linear algebra over rational functions.
#pragma once

#include "overdet/expr.hpp"

#include <map>
#include <string>
#include <vector>

namespace overdet {

/// Canonical rational form N/D: expanded, like terms collected, common
/// factors cancelled, graded-lex monomial order over the global symbol
/// order. When D is constant the result is the polynomial N/D; otherwise N
/// and D carry integer coefficients with coprime contents and D has a
/// positive leading coefficient. Idempotent.
[[nodiscard]] Expression normalize(const Expression& e);

/// normalize(a - b) is zero.
[[nodiscard]] bool equivalent(const Expression& a, const Expression& b);

struct NumDen {
    Expression numerator;
    Expression denominator;  // 1 for polynomials
};
[[nodiscard]] NumDen numerator_denominator(const Expression& e);

/// e = sum_i coefficients[i] * unknowns[i] + rest, with coefficients and rest
/// free of the unknowns. Throws NonAffineError otherwise.
struct AffineForm {
    std::vector<Expression> coefficients;
    Expression rest;
};
[[nodiscard]] AffineForm affine_decompose(const Expression& e, const std::vector<DerivativeAtom>& unknowns);

/// Square-free factored rendering of a normalized expression, e.g.
/// "(x-1)^2" or "2*x*(x+1)^3". Denominators are rendered the same way.
[[nodiscard]] std::string factored_string(const Expression& e);

using Matrix = std::vector<std::vector<Expression>>;

[[nodiscard]] Expression determinant(const Matrix& m);

struct LinearSolution {
    std::map<DerivativeAtom, Expression> values;
    Expression determinant;
};

/// Solves the square affine system eqs[i] == 0 for `unknowns`. Throws
/// NonAffineError, or SingularSystemError when the coefficient determinant
/// normalizes to zero.
[[nodiscard]] LinearSolution solve_linear_symbolic(const std::vector<Expression>& eqs,
                                                   const std::vector<DerivativeAtom>& unknowns);

/// Rank over the rational numbers of a constant matrix (entries must
/// normalize to constants).
[[nodiscard]] int rational_rank(const Matrix& m);

}  // namespace overdet
