#include "support.hpp"

#include "overdet/catalog.hpp"
#include "overdet/errors.hpp"
#include "overdet/normalize.hpp"

#include <doctest.h>

#include <json.hpp>

#include <random>

using namespace overdet;

TEST_SUITE("system")
{
    TEST_CASE("linear model parses with two unknowns and one extra equation")
    {
        const PdeSystem s = fixtures::parse(fixtures::linear_model);
        CHECK(s.unknowns() == std::vector<std::string>{"G", "H"});
        CHECK(s.equations.size() == 2);
        CHECK(s.over.size() == 1);
        CHECK(count_balance(s) == Counts{3, 2});
        CHECK(s.frame.time == "t");
        CHECK(s.frame.normal == "x");
    }

    TEST_CASE("parse errors carry positions")
    {
        CHECK_THROWS_WITH_AS((void)parse_system("coords t, x\ntime t\nnormal x\nfield S(t, x)\n"), doctest::Contains("no equations"),
                             ParseError);
        try {
            (void)parse_system("coords t, x\ntime t\nnormal x\nfield S(t, x)\neq dt(S) + * 2\n");
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 5);
            CHECK(e.column() > 0);
        }
        CHECK_THROWS_AS((void)parse_system("coords t, x\ntime t\nnormal x\nfield S(t, x)\neq dt(Q)\n"), ParseError);
        CHECK_THROWS_AS((void)parse_system("coords t, x\ntime t\nfield S(t, x)\neq dt(S)\n"), ParseError);
        CHECK_THROWS_AS((void)parse_system("coords t, x\ntime t\nnormal x\nfield S(t, x)\nfield S(t, x)\neq dt(S)\n"),
                        ParseError);
    }

    TEST_CASE("determined count must match the unknowns")
    {
        CHECK_THROWS_AS((void)parse_system("coords t, x\ntime t\nnormal x\nfield S(t, x)\nfield R(t, x)\neq dt(S)\n"),
                        ParseError);
    }

    TEST_CASE("normal form of the linear model")
    {
        const PdeSystem s = fixtures::parse(fixtures::linear_model);
        const NormalForm nf = solve_normal_form(s);
        const DerivativeAtom gx{"G", MultiIndex({{"x", 1}})};
        const DerivativeAtom hx{"H", MultiIndex({{"x", 1}})};
        CHECK(nf.at(gx) == normalize(parse_expression(s, "dt(H) - H")));
        CHECK(nf.at(hx) == normalize(parse_expression(s, "G - dt(G)")));
        for (const auto& [t, rhs] : nf.rhs) {
            for (const auto& a : collect_atoms(rhs)) CHECK_FALSE(is_normal_atom(s, a));
        }
    }

    TEST_CASE("trivial normal form")
    {
        const PdeSystem s = parse_system("coords t, n\ntime t\nnormal n\nfield S(t, n)\neq dn(S)\nover dt(S)\n");
        const NormalForm nf = solve_normal_form(s);
        CHECK(nf.at(DerivativeAtom{"S", MultiIndex({{"n", 1}})}).is_zero());
    }

    TEST_CASE("random constant-coefficient systems back-substitute to zero")
    {
        std::mt19937_64 rng(99);
        std::uniform_int_distribution<int> c(-5, 5);
        int built = 0;
        while (built < 5) {
            std::string src = "coords t, x\ntime t\nnormal x\nfield A(t, x)\nfield B(t, x)\nfield C(t, x)\n";
            for (int i = 0; i < 3; ++i) {
                src += "eq ";
                for (const char* f : {"A", "B", "C"}) {
                    src += "(" + std::to_string(c(rng)) + ")*dx(" + f + ") + (" + std::to_string(c(rng)) + ")*dt(" + f +
                           ") + (" + std::to_string(c(rng)) + ")*" + f + " + ";
                }
                src += "0\n";
            }
            src += "over dt(A) - dx(B)\n";
            const PdeSystem s = parse_system(src);
            NormalForm nf;
            try {
                nf = solve_normal_form(s);
            } catch (const SingularSystemError&) {
                continue;
            }
            ++built;
            for (const auto& eq : s.equations) {
                Expression e = eq.expr;
                for (const auto& [t, rhs] : nf.rhs) e = substitute(e, t, rhs);
                CHECK(normalize(e).is_zero());
            }
        }
    }

    TEST_CASE("supplied normal form block")
    {
        const PdeSystem s = parse_system(
            "coords t, x\ntime t\nnormal x\nfield S(t, x)\neq dx(S)^2 - dt(S)^2\nover dt(S) + S\nnormal_form dx(S) = dt(S)\n");
        const NormalForm nf = solve_normal_form(s);
        CHECK(nf.at(DerivativeAtom{"S", MultiIndex({{"x", 1}})}) == normalize(parse_expression(s, "dt(S)")));
        const PdeSystem bare = parse_system("coords t, x\ntime t\nnormal x\nfield S(t, x)\neq dx(S)^2 - dt(S)^2\nover dt(S) + S\n");
        CHECK_THROWS_AS((void)solve_normal_form(bare), NonAffineError);
    }

    TEST_CASE("render and parse round-trip")
    {
        for (const auto& name : catalog_names()) {
            const PdeSystem& s = catalog_get(name).system;
            const PdeSystem again = parse_system(render_system(s));
            CHECK(render_system(again) == render_system(s));
            CHECK(count_balance(again) == count_balance(s));
            REQUIRE(again.equations.size() == s.equations.size());
            for (std::size_t i = 0; i < s.equations.size(); ++i) CHECK(again.equations[i].expr == s.equations[i].expr);
        }
    }

    TEST_CASE("system JSON lists declarations")
    {
        const auto j = nlohmann::json::parse(system_json(fixtures::parse(fixtures::linear_model)));
        CHECK(j["name"] == "linear_model");
        CHECK(j["coords"].size() == 2);
        CHECK(j["fields"].size() == 2);
    }

    TEST_CASE("catalog counts")
    {
        CHECK(count_balance(catalog_get("navier_stokes_I").system) == Counts{15, 14});
        CHECK(count_balance(catalog_get("full_hydro_I").system) == Counts{22, 21});
        CHECK(count_balance(catalog_get("viscous_2d").system) == Counts{2, 1});
        CHECK(count_balance(catalog_get("navier_stokes_III").system) == Counts{6, 5});
    }
}
