#include "support.hpp"

#include "overdet/calculus.hpp"
#include "overdet/errors.hpp"
#include "overdet/evaluate.hpp"
#include "overdet/normalize.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace overdet;

namespace {

const PdeSystem& sys()
{
    static const PdeSystem s = parse_system(R"(
coords t, x
time t
normal x
param c
field G(t, x)
field H(t, x)
eq dt(H) - dx(G) = H
eq dt(G) + dx(H) = G
over dt(H) - x*dx(G)
)");
    return s;
}

Expression P(const std::string& text) { return parse_expression(sys(), text); }

DerivativeAtom atom(const std::string& f, std::vector<MultiIndex::Entry> idx = {})
{
    return DerivativeAtom{f, MultiIndex(std::move(idx))};
}

Binding random_binding(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Binding b;
    b.set("t", u(rng)).set("x", u(rng)).set("c", u(rng));
    for (const char* f : {"G", "H"}) {
        b.set(atom(f), u(rng));
        b.set(atom(f, {{"t", 1}}), u(rng));
        b.set(atom(f, {{"x", 1}}), u(rng));
        b.set(atom(f, {{"t", 1}, {"x", 1}}), u(rng));
        b.set(atom(f, {{"t", 2}}), u(rng));
    }
    return b;
}

// Random polynomial in x, t, c, H and dt(H) with small integer coefficients.
Expression random_polynomial(std::mt19937_64& rng, const std::vector<Expression>& vars)
{
    std::uniform_int_distribution<int> coef(-4, 4);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(vars.size()) - 1);
    std::uniform_int_distribution<int> deg(0, 2);
    std::vector<Expression> terms;
    for (int k = 0; k < 5; ++k) {
        std::vector<Expression> factors{Expression::integer(coef(rng))};
        const int d = deg(rng);
        for (int i = 0; i < d; ++i) factors.push_back(vars[pick(rng)]);
        terms.push_back(Expression::product(factors));
    }
    return Expression::sum(terms);
}

}  // namespace

TEST_SUITE("expr")
{
    TEST_CASE("differentiating the first chain link in x")
    {
        const Expression e = P("(1 - x)*dt(H) + x*H");
        const Expression d = normalize(differentiate(e, "x", sys().dependencies()));
        CHECK(d == normalize(P("-dt(H) + (1 - x)*dt(dx(H)) + H + x*dx(H)")));
    }

    TEST_CASE("parameters and t-independent coefficients")
    {
        CHECK(normalize(differentiate(P("c"), "x")).is_zero());
        CHECK(normalize(differentiate(P("x*G"), "t", sys().dependencies())) == normalize(P("x*dt(G)")));
        CHECK(normalize(differentiate(P("x*G"), "q", sys().dependencies())).is_zero());
    }

    TEST_CASE("mixed partials are one atom")
    {
        CHECK(P("dt(dx(H))") == P("dx(dt(H))"));
        const auto deps = sys().dependencies();
        const Expression e = P("x^2*dt(G)*H + sin(x)*G");
        const Expression xt = normalize(differentiate(differentiate(e, "x", deps), "t", deps));
        const Expression tx = normalize(differentiate(differentiate(e, "t", deps), "x", deps));
        CHECK(xt == tx);
    }

    TEST_CASE("substituting the normal derivative of G")
    {
        const Expression e = P("dt(H) - x*dx(G)");
        const Expression s = substitute(e, atom("G", {{"x", 1}}), P("dt(H) - H"));
        CHECK(s == normalize(P("(1 - x)*dt(H) + x*H")));
        CHECK(substitute(e, atom("G", {{"t", 3}}), P("H")) == normalize(e));
        CHECK_THROWS_AS((void)substitute(e, atom("H"), P("H + 1")), SymbolicError);
    }

    TEST_CASE("substitution agrees with numeric composition")
    {
        std::mt19937_64 rng(7);
        const std::vector<Expression> vars = {P("x"), P("t"), P("c"), P("H"), P("dt(H)")};
        const std::vector<Expression> inner = {P("x"), P("c"), P("G"), P("dt(G)")};
        for (int trial = 0; trial < 10; ++trial) {
            const Expression e = random_polynomial(rng, vars);
            const Expression r = random_polynomial(rng, inner);
            const Expression s = substitute(e, atom("H"), r);
            for (int k = 0; k < 10; ++k) {
                Binding b = random_binding(rng);
                Binding composed = b;
                composed.set(atom("H"), evaluate(r, b));
                const double want = evaluate(e, composed);
                CHECK(evaluate(s, b) == doctest::Approx(want).epsilon(1e-10));
            }
        }
    }

    TEST_CASE("normalize cancels and canonicalizes")
    {
        CHECK(normalize(P("(x - 1)*H + (1 - x)*H")).is_zero());
        CHECK(normalize(P("(1 - x)*dt(H) + x*H")) == normalize(P("-((x - 1)*dt(H) - x*H)")));
        CHECK(normalize(P("(x^2 - 1)/(x - 1)")) == normalize(P("x + 1")));
        CHECK(normalize(P("H/(2*x - 2)")) == normalize(P("(H/2)/(x - 1)")));
        const Expression e = normalize(P("(x*H - dt(G))/(x^2 + c) + G/(x - c)"));
        CHECK(normalize(e) == e);
    }

    TEST_CASE("normalize preserves values")
    {
        std::mt19937_64 rng(11);
        const std::vector<Expression> samples = {
            P("(x - 1)^3*H/(x^2 - 1) + dt(G)*(c + x)^2"),
            P("(G + H)^2 - (G - H)^2 + sin(x)*exp(t)/(1 + x^2)"),
            P("1/(x + 3) - 1/(x - 3) + dx(H)*c/(c^2 + 1)"),
        };
        for (const auto& e : samples) {
            const Expression n = normalize(e);
            for (int k = 0; k < 100; ++k) {
                const Binding b = random_binding(rng);
                CHECK(evaluate(n, b) == doctest::Approx(evaluate(e, b)).epsilon(1e-10));
            }
        }
    }

    TEST_CASE("quotient by a literal zero is rejected")
    {
        CHECK_THROWS_AS((void)(Expression::integer(1) / Expression::integer(0)), SymbolicError);
        CHECK_THROWS_AS((void)P("H/(x - x)"), Error);
    }

    TEST_CASE("evaluation")
    {
        Binding b;
        b.set("x", 2.0).set(atom("H"), 3.0);
        CHECK(evaluate(P("x/(x - 1)*H"), b) == doctest::Approx(6.0));
        CHECK(evaluate(Expression::integer(0), Binding{}) == 0.0);
        Binding zero;
        zero.set("x", 0.7);
        for (const auto& a : {atom("G"), atom("H"), atom("G", {{"t", 1}}), atom("G", {{"t", 2}}), atom("H", {{"t", 1}})}) {
            zero.set(a, 0.0);
        }
        CHECK(evaluate(P("(x - 1)*dt(dt(G)) + (1 - 2*x)*dt(G) + x*G - dt(H) + H"), zero) == 0.0);
        CHECK_THROWS_AS((void)evaluate(P("H/(x - 1)"), Binding{}.set("x", 1.0).set(atom("H"), 1.0)), EvaluationError);
        CHECK_THROWS_AS((void)evaluate(P("H"), Binding{}), EvaluationError);
    }

    TEST_CASE("compiled programs match the interpreter")
    {
        std::mt19937_64 rng(3);
        const std::vector<Expression> outs = {P("x/(x - 3)*H + sin(t)*dt(G)"), P("exp(c)*ln(x^2 + 1) - cos(dx(H))"),
                                              P("(G + H)^3")};
        const CompiledExpr prog(outs);
        for (int k = 0; k < 20; ++k) {
            const Binding b = random_binding(rng);
            std::vector<double> in(prog.inputs().size());
            for (std::size_t i = 0; i < in.size(); ++i) {
                const auto& s = prog.inputs()[i];
                in[i] = s.kind == CompiledExpr::Input::Kind::Symbol ? b.symbols.at(s.symbol) : b.atoms.at(s.atom);
            }
            std::vector<double> out;
            prog.run(in, out);
            for (std::size_t j = 0; j < outs.size(); ++j) CHECK(out[j] == doctest::Approx(evaluate(outs[j], b)).epsilon(1e-12));
        }
    }

    TEST_CASE("derivative commutes with evaluation")
    {
        // Coordinates only, so a centered difference in x is meaningful.
        const Expression e = P("sin(x*t)/(2 + x^2) + exp(x)*t^2 + c*x^3");
        const Expression d = differentiate(e, "x");
        const double x0 = 0.4;
        auto f = [&](double x) { return evaluate(e, Binding{}.set("x", x).set("t", 0.8).set("c", 1.3)); };
        const double exact = evaluate(d, Binding{}.set("x", x0).set("t", 0.8).set("c", 1.3));
        const double h = 1e-2;
        const double e1 = std::abs((f(x0 + h) - f(x0 - h)) / (2 * h) - exact);
        const double e2 = std::abs((f(x0 + h / 2) - f(x0 - h / 2)) / h - exact);
        CHECK(std::log2(e1 / e2) >= 1.9);
    }

    TEST_CASE("symbolic linear solve")
    {
        const auto u = atom("G");
        const auto v = atom("H");
        const auto id = solve_linear_symbolic({P("G - x"), P("H - c")}, {u, v});
        CHECK(id.values.at(u) == normalize(P("x")));
        CHECK(id.values.at(v) == normalize(P("c")));
        CHECK_THROWS_AS((void)solve_linear_symbolic({P("G + H - x"), P("2*G + 2*H - 2*x")}, {u, v}), SingularSystemError);
        CHECK_THROWS_AS((void)solve_linear_symbolic({P("G*H - x"), P("G - H")}, {u, v}), NonAffineError);

        const std::vector<Expression> eqs = {P("x*G + (1 - x)*H - dt(G)"), P("c*G - x^2*H + 1")};
        const auto sol = solve_linear_symbolic(eqs, {u, v});
        for (const auto& e : eqs) {
            Expression back = substitute(e, u, sol.values.at(u));
            back = substitute(back, v, sol.values.at(v));
            CHECK(normalize(back).is_zero());
        }
    }

    TEST_CASE("matrices: determinant, rank, affine parts")
    {
        const Matrix m = {{P("0"), P("1 - x")}, {P("x - 1"), P("0")}};
        CHECK(normalize(determinant(m)) == normalize(P("(x - 1)^2")));
        CHECK(factored_string(normalize(determinant(m))) == "(x-1)^2");
        CHECK(rational_rank({{P("2"), P("-2"), P("2")}, {P("4"), P("-4"), P("6")}, {P("8"), P("-8"), P("16")}}) == 2);
        CHECK(rational_rank({{P("1"), P("0")}, {P("0"), P("1/3")}}) == 2);
        const auto f = affine_decompose(P("x*dt(G) + 3*H - c"), {atom("G", {{"t", 1}}), atom("H")});
        CHECK(f.coefficients[0] == normalize(P("x")));
        CHECK(f.coefficients[1] == normalize(P("3")));
        CHECK(f.rest == normalize(P("-c")));
    }

    TEST_CASE("text rendering round-trips")
    {
        for (const char* text : {"(1 - x)*dt(H) + x*H", "x^2*H/(x - 1)^2", "sin(x)*exp(-t) + ln(1 + x^2)*dt(dx(G))"}) {
            const Expression e = normalize(P(text));
            CHECK(normalize(P(e.to_string())) == e);
        }
    }
}
