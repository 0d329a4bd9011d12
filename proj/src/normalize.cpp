#include "overdet/normalize.hpp"

#include "overdet/errors.hpp"
#include "overdet/poly.hpp"

#include <algorithm>

namespace overdet {

Expression normalize(const Expression& e)
{
    if (e.is_constant() || e.is_atom()) return e;
    VarTable table({e});
    return table.to_expression(table.convert(e));
}

bool equivalent(const Expression& a, const Expression& b) { return normalize(a - b).is_zero(); }

NumDen numerator_denominator(const Expression& e)
{
    VarTable table({e});
    const auto f = table.convert(e);
    const Expression n = table.to_expression(f);
    if (n.kind() == ExprKind::Quotient) return {n.children()[0], n.children()[1]};
    return {n, Expression::integer(1)};
}

AffineForm affine_decompose(const Expression& e, const std::vector<DerivativeAtom>& unknowns)
{
    std::vector<Expression> roots{e};
    for (const auto& u : unknowns) roots.push_back(Expression::atom(u));
    VarTable table(roots);
    const auto f = table.convert(e);

    std::vector<int> ids;
    for (const auto& u : unknowns) ids.push_back(*table.id_of(Expression::atom(u)));
    const auto is_unknown = [&](int v) { return std::find(ids.begin(), ids.end(), v) != ids.end(); };

    for (int v = 0; v < table.size(); ++v) {
        const Expression& var = table.variable(v);
        if (var.kind() != ExprKind::Function) continue;
        for (const auto& u : unknowns) {
            if (contains_atom(var, u)) {
                throw NonAffineError(u.to_string() + " occurs inside " + var.to_string());
            }
        }
    }
    for (const auto& [m, c] : f.den().terms()) {
        for (const auto& [v, k] : m) {
            if (is_unknown(v)) {
                throw NonAffineError(table.variable(v).to_string() + " occurs in a denominator of " + e.to_string());
            }
        }
    }

    std::vector<Poly> coeffs(unknowns.size());
    Poly rest;
    for (const auto& [m, c] : f.num().terms()) {
        int hit = -1;
        Monomial remaining;
        for (const auto& [v, k] : m) {
            if (is_unknown(v)) {
                if (hit >= 0 || k > 1) {
                    throw NonAffineError("nonlinear in " + table.variable(v).to_string() + ": " + e.to_string());
                }
                hit = v;
            } else {
                remaining.emplace_back(v, k);
            }
        }
        if (hit < 0) {
            rest.add_term(m, c);
        } else {
            const auto pos = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), hit) - ids.begin());
            coeffs[pos].add_term(remaining, c);
        }
    }

    AffineForm out;
    for (const auto& p : coeffs) out.coefficients.push_back(table.to_expression(RationalFunction(p, f.den())));
    out.rest = table.to_expression(RationalFunction(rest, f.den()));
    return out;
}

namespace {

std::string factored_poly(const VarTable& table, const Poly& p)
{
    const auto sf = square_free(p);
    if (sf.factors.empty()) return table.to_expression(Poly(sf.unit)).to_string();
    // Present each factor with integer coefficients and a positive leading
    // coefficient, moving the scale into the unit.
    Rational unit = sf.unit;
    std::vector<std::pair<Expression, int>> parts;
    for (const auto& [f, k] : sf.factors) {
        mpz_class l = 1;
        for (const auto& [m, c] : f.terms()) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), c.get_den_mpz_t());
        mpz_class g = 0;
        for (const auto& [m, c] : f.terms()) {
            mpz_class n = c.get_num() * (l / c.get_den());
            mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), n.get_mpz_t());
        }
        const Rational s = Rational(l) / Rational(g);
        const Poly scaled = f.scaled(s);
        Rational sk = 1;
        for (int i = 0; i < k; ++i) sk *= s;
        unit /= sk;
        parts.emplace_back(table.to_expression(scaled), k);
    }
    const bool many = parts.size() > 1 || unit != 1;
    std::string out;
    if (unit == -1) {
        out = "-";
    } else if (unit != 1) {
        out = unit.get_str() + "*";
    }
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto& [f, k] = parts[i];
        if (i > 0) out += "*";
        const bool compound = f.kind() == ExprKind::Sum || (f.kind() == ExprKind::Product && (k > 1 || many));
        std::string t = f.to_string();
        if (compound && (k > 1 || many)) t = "(" + t + ")";
        out += t;
        if (k > 1) out += "^" + std::to_string(k);
    }
    return out;
}

}  // namespace

std::string factored_string(const Expression& e)
{
    VarTable table({e});
    const auto f = table.convert(e);
    if (f.is_polynomial()) return factored_poly(table, f.num());
    return "(" + factored_poly(table, f.num()) + ")/(" + factored_poly(table, f.den()) + ")";
}

namespace {

// Gaussian elimination over rational functions. Returns the determinant and
// leaves `a` in reduced row echelon form when `solve` is set.
RationalFunction eliminate(std::vector<std::vector<RationalFunction>>& a, bool solve)
{
    const std::size_t n = a.size();
    RationalFunction det(Poly(Rational(1)));
    for (std::size_t col = 0; col < n; ++col) {
        // Prefer constant pivots to keep intermediate expressions small.
        std::size_t pivot = n;
        for (std::size_t r = col; r < n; ++r) {
            if (a[r][col].is_zero()) continue;
            if (pivot == n) pivot = r;
            if (a[r][col].is_polynomial() && a[r][col].num().is_constant()) {
                pivot = r;
                break;
            }
        }
        if (pivot == n) return {};
        if (pivot != col) {
            std::swap(a[pivot], a[col]);
            det = -det;
        }
        const RationalFunction p = a[col][col];
        det = det * p;
        for (auto& x : a[col]) x = x / p;
        for (std::size_t r = solve ? 0 : col + 1; r < n; ++r) {
            if (r == col || a[r][col].is_zero()) continue;
            const RationalFunction f = a[r][col];
            for (std::size_t c = col; c < a[r].size(); ++c) a[r][c] = a[r][c] - f * a[col][c];
        }
    }
    return det;
}

}  // namespace

Expression determinant(const Matrix& m)
{
    const std::size_t n = m.size();
    if (n == 0) return Expression::integer(1);
    std::vector<Expression> roots;
    for (const auto& row : m) {
        if (row.size() != n) throw SymbolicError("determinant of a non-square matrix");
        roots.insert(roots.end(), row.begin(), row.end());
    }
    VarTable table(roots);
    std::vector<std::vector<RationalFunction>> a(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& x : m[i]) a[i].push_back(table.convert(x));
    }
    return table.to_expression(eliminate(a, false));
}

LinearSolution solve_linear_symbolic(const std::vector<Expression>& eqs, const std::vector<DerivativeAtom>& unknowns)
{
    if (eqs.size() != unknowns.size()) {
        throw SymbolicError("linear system is not square: " + std::to_string(eqs.size()) + " equations, " +
                            std::to_string(unknowns.size()) + " unknowns");
    }
    const std::size_t n = eqs.size();
    std::vector<Expression> roots = eqs;
    for (const auto& u : unknowns) roots.push_back(Expression::atom(u));
    VarTable table(roots);

    std::vector<std::vector<RationalFunction>> a(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto form = affine_decompose(eqs[i], unknowns);
        for (const auto& c : form.coefficients) a[i].push_back(table.convert(c));
        a[i].push_back(-table.convert(form.rest));
    }
    const RationalFunction det = eliminate(a, true);
    if (det.is_zero()) throw SingularSystemError("coefficient determinant normalizes to zero");

    LinearSolution out;
    out.determinant = table.to_expression(det);
    for (std::size_t i = 0; i < n; ++i) out.values.emplace(unknowns[i], table.to_expression(a[i][n]));
    return out;
}

int rational_rank(const Matrix& m)
{
    std::vector<std::vector<Rational>> a;
    for (const auto& row : m) {
        std::vector<Rational> r;
        for (const auto& x : row) {
            const Expression v = normalize(x);
            if (!v.is_constant()) throw SymbolicError("rank of a non-constant matrix entry: " + v.to_string());
            r.push_back(v.value());
        }
        a.push_back(std::move(r));
    }
    int rank = 0;
    const std::size_t cols = a.empty() ? 0 : a.front().size();
    std::size_t row = 0;
    for (std::size_t col = 0; col < cols && row < a.size(); ++col) {
        std::size_t p = row;
        while (p < a.size() && a[p][col] == 0) ++p;
        if (p == a.size()) continue;
        std::swap(a[p], a[row]);
        for (std::size_t r = row + 1; r < a.size(); ++r) {
            if (a[r][col] == 0) continue;
            const Rational f = a[r][col] / a[row][col];
            for (std::size_t c = col; c < cols; ++c) a[r][c] -= f * a[row][c];
        }
        ++row;
        ++rank;
    }
    return rank;
}

}  // namespace overdet
