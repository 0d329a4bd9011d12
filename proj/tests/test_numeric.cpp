#include "support.hpp"

#include "overdet/errors.hpp"
#include "overdet/normalize.hpp"
#include "overdet/numeric.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <limits>
#include <random>

using namespace overdet;

namespace {

constexpr double kPi = 3.14159265358979323846;

Grid unit_square(int n) { return Grid({Axis{"t", 0, 1, n}, Axis{"x", 0, 1, n}}); }

double max_interior_error(const FieldSample& f, const std::function<double(const std::vector<double>&)>& exact)
{
    double err = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (!f.valid(i)) continue;
        err = std::max(err, std::abs(f.values[i] - exact(f.grid.point(i))));
    }
    return err;
}

const PdeSystem& taylor_green_system()
{
    static const PdeSystem s = parse_system(R"(
coords t, x, y
time t
normal y
tangent x
param nu
field ux(t, x, y)
field uy(t, x, y)
field P(t, x, y)
eq momentum_x: dt(ux) + ux*dx(ux) + uy*dy(ux) + dx(P) = nu*(dx(dx(ux)) + dy(dy(ux)))
eq momentum_y: dt(uy) + ux*dx(uy) + uy*dy(uy) + dy(P) = nu*(dx(dx(uy)) + dy(dy(uy)))
eq continuity: dx(ux) + dy(uy)
over vorticity_decay: dt(dx(uy) - dy(ux)) + 2*nu*(dx(uy) - dy(ux)) + ux*dx(dx(uy) - dy(ux)) + uy*dy(dx(uy) - dy(ux))
)");
    return s;
}

std::map<std::string, Expression> taylor_green_fields()
{
    const auto& s = taylor_green_system();
    return {
        {"ux", parse_expression(s, "sin(x)*cos(y)*exp(-2*nu*t)")},
        {"uy", parse_expression(s, "-cos(x)*sin(y)*exp(-2*nu*t)")},
        {"P", parse_expression(s, "(cos(2*x) + cos(2*y))/4*exp(-4*nu*t)")},
    };
}

Grid taylor_green_grid(int n, ResidualMode mode)
{
    const double h = 1.5 / (n - 1);
    const Axis t = mode == ResidualMode::Analytic ? Axis{"t", 0.3, 0.3, 1} : Axis{"t", 0.3 - 2 * h, 0.3 + 2 * h, 5};
    return Grid({t, Axis{"x", 0.2, 1.7, n}, Axis{"y", 0.1, 1.1, n}});
}

}  // namespace

TEST_SUITE("numeric")
{
    TEST_CASE("grid layout is row-major with the last axis fastest")
    {
        const Grid g({Axis{"a", 0, 1, 3}, Axis{"b", 0, 2, 5}});
        CHECK(g.size() == 15);
        CHECK(g.stride(1) == 1);
        CHECK(g.stride(0) == 5);
        CHECK(g.unravel(7) == std::vector<int>{1, 2});
        CHECK(g.point(7)[0] == doctest::Approx(0.5));
        CHECK(g.point(7)[1] == doctest::Approx(1.0));
        CHECK(g.axis_index("b") == 1);
        CHECK(g.axis_index("c") == -1);
    }

    TEST_CASE("sampling closed forms")
    {
        const PdeSystem s = fixtures::parse(fixtures::counterexample);
        const Grid g = unit_square(16);
        const FieldSample f = sample(parse_expression(s, "exp(x - t)"), g, {});
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto p = g.point(i);
            CHECK(f.values[i] == doctest::Approx(std::exp(p[1] - p[0])).epsilon(1e-15));
        }
        const FieldSample z = sample(Expression::integer(0), g, {});
        CHECK(std::all_of(z.values.begin(), z.values.end(), [](double v) { return v == 0.0; }));
        CHECK_THROWS_AS((void)sample(parse_expression(s, "1/(x - 1)"), unit_square(5), {}), EvaluationError);
    }

    TEST_CASE("sampled Taylor-Green velocity matches the closed form")
    {
        const Grid g = taylor_green_grid(64, ResidualMode::Analytic);
        Binding nu;
        nu.set("nu", 0.01);
        const FieldSample f = sample(taylor_green_fields().at("ux"), g, nu);
        std::mt19937_64 rng(1);
        std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
        for (int k = 0; k < 10; ++k) {
            const std::size_t i = pick(rng);
            const auto p = g.point(i);
            CHECK(std::abs(f.values[i] - std::sin(p[1]) * std::cos(p[2]) * std::exp(-0.02 * p[0])) <= 1e-15);
        }
    }

    TEST_CASE("finite differences")
    {
        const Grid line({Axis{"x", 0, 2 * kPi, 257}});
        const FieldSample s{"s", line, [&] {
                                std::vector<double> v(line.size());
                                for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(line.point(i)[0]);
                                return v;
                            }()};
        const FieldSample d = fd_derivative(s, "x", 1);
        const double h = 2 * kPi / 256;
        const double err = max_interior_error(d, [](const std::vector<double>& p) { return std::cos(p[0]); });
        CHECK(err <= h * h / 6 + 1e-12);
        CHECK(std::isnan(d.values.front()));
        CHECK(std::isnan(d.values.back()));

        const FieldSample c{"c", line, std::vector<double>(line.size(), 3.0)};
        CHECK(max_interior_error(fd_derivative(c, "x", 2), [](const std::vector<double>&) { return 0.0; }) < 1e-9);

        CHECK_THROWS_AS((void)fd_derivative(s, "y", 1), VerificationError);
        CHECK_THROWS_AS((void)fd_derivative(s, "x", 5), VerificationError);
        CHECK_THROWS_AS((void)fd_derivative(s, "x", 2, Stencil::Forward), VerificationError);
    }

    TEST_CASE("centered stencils converge at second order for every supported order")
    {
        for (int order = 1; order <= 4; ++order) {
            double errs[2];
            for (int r = 0; r < 2; ++r) {
                const int n = r == 0 ? 65 : 129;
                const Grid line({Axis{"x", 0.1, 1.1, n}});
                std::vector<double> v(line.size());
                for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(2 * line.point(i)[0]);
                const FieldSample d = fd_derivative(FieldSample{"e", line, v}, "x", order);
                errs[r] = max_interior_error(
                    d, [&](const std::vector<double>& p) { return std::pow(2.0, order) * std::exp(2 * p[0]); });
            }
            const double observed = std::log2(errs[0] / errs[1]);
            CHECK(observed >= 1.8);
            CHECK(observed <= 2.2);
        }
    }

    TEST_CASE("counterexample residual vanishes on the general solution")
    {
        const PdeSystem s = fixtures::parse(fixtures::counterexample);
        const auto rep = residual(s, system_equations(s), {{"alpha", parse_expression(s, "exp(x - t)")}},
                                  unit_square(64), {});
        CHECK(rep.max_residual() < 1e-12);
        CHECK(rep.at("eq0").points == 64 * 64);
    }

    TEST_CASE("zero fields on the linear model")
    {
        const PdeSystem s = fixtures::parse(fixtures::linear_model);
        const auto rep = residual(s, system_equations(s), {{"G", Expression::integer(0)}, {"H", Expression::integer(0)}},
                                  unit_square(16), {});
        CHECK(rep.max_residual() == 0.0);
        for (const auto& e : rep.per_equation) CHECK(e.l2 == 0.0);
    }

    TEST_CASE("Taylor-Green residuals: analytic and finite differences")
    {
        const auto& s = taylor_green_system();
        Binding nu;
        nu.set("nu", 0.01);
        const auto exact = residual(s, system_equations(s), taylor_green_fields(),
                                    taylor_green_grid(64, ResidualMode::Analytic), nu);
        CHECK(exact.max_residual() < 1e-10);

        ResidualOptions fd;
        fd.mode = ResidualMode::FiniteDifference;
        const auto coarse = residual(s, system_equations(s), taylor_green_fields(),
                                     taylor_green_grid(64, ResidualMode::FiniteDifference), nu, fd);
        const auto fine = residual(s, system_equations(s), taylor_green_fields(),
                                   taylor_green_grid(128, ResidualMode::FiniteDifference), nu, fd);
        for (const auto& o : convergence_order(coarse, fine)) {
            INFO(o.name);
            CHECK_FALSE(o.exact);
            CHECK(o.order == doctest::Approx(2.0).epsilon(0.1));
        }
    }

    TEST_CASE("convergence order flags exact solutions and detects the forward stencil")
    {
        const PdeSystem s = fixtures::parse(fixtures::counterexample);
        const std::map<std::string, Expression> f = {{"alpha", parse_expression(s, "exp(x - t)")}};
        const auto a1 = residual(s, system_equations(s), f, unit_square(32), {});
        const auto a2 = residual(s, system_equations(s), f, unit_square(64), {});
        for (const auto& o : convergence_order(a1, a2)) CHECK(o.exact);

        ResidualOptions fwd;
        fwd.mode = ResidualMode::FiniteDifference;
        fwd.stencil = Stencil::Forward;
        const auto f1 = residual(s, system_equations(s), f, unit_square(65), {}, fwd);
        const auto f2 = residual(s, system_equations(s), f, unit_square(129), {}, fwd);
        const auto orders = convergence_order(f1, f2);
        bool seen = false;
        for (const auto& o : orders) {
            if (o.exact) continue;
            seen = true;
            CHECK(o.order == doctest::Approx(1.0).epsilon(0.15));
        }
        CHECK(seen);
    }

    TEST_CASE("points with vanishing denominators are excluded")
    {
        const PdeSystem s = parse_system("coords t, x\ntime t\nnormal x\nfield S(t, x)\neq dx(S)*x - x\nover dt(S)/x\n");
        const auto rep = residual(s, system_equations(s), {{"S", parse_expression(s, "x")}},
                                  Grid({Axis{"t", 0, 1, 3}, Axis{"x", -1, 1, 5}}), {});
        CHECK(rep.at("over0").excluded == 3);
        CHECK(rep.excluded_points == 3);
        CHECK(rep.at("eq0").excluded == 0);
    }

    TEST_CASE("auxiliary fields are solved pointwise by minimum norm")
    {
        // a*dx(w) + b*dy(w) = dx(w)^2 + dy(w)^2 has minimum-norm solution (a, b) = grad(w).
        const PdeSystem s = parse_system(R"(
coords t, x, y
time t
normal y
field w(t, x, y)
aux a(t, x, y)
aux b(t, x, y)
eq dy(w) - 2*y
over dt(w) + a*dx(w) + b*dy(w) - dx(w)^2 - dy(w)^2
rel gradient: a*dx(w) + b*dy(w) - dx(w)^2 - dy(w)^2
)");
        const Grid g({Axis{"t", 0, 0, 1}, Axis{"x", 0.5, 1.5, 9}, Axis{"y", 0.5, 1.5, 9}});
        const auto rep = residual(s, system_equations(s), {{"w", parse_expression(s, "x^2 + y^2")}}, g, {});
        CHECK(rep.at("over0").max < 1e-12);
        CHECK(rep.at("gradient").max < 1e-12);
        CHECK_FALSE(rep.notes.empty());

        ResidualOptions none;
        none.aux_relations = {"missing"};
        CHECK_THROWS_AS((void)residual(s, system_equations(s), {{"w", parse_expression(s, "x^2 + y^2")}}, g, {}, none),
                        VerificationError);
    }

    TEST_CASE("report JSON")
    {
        const PdeSystem s = fixtures::parse(fixtures::counterexample);
        auto rep = residual(s, system_equations(s), {{"alpha", parse_expression(s, "exp(x - t)")}}, unit_square(8), {});
        rep.orders = {{"eq0", 0, true}, {"over0", 2.01, false}};
        const auto j = nlohmann::json::parse(rep.to_json());
        CHECK(j["mode"] == "analytic");
        CHECK(j["grid"].size() == 2);
        CHECK(j["per_equation"][0]["name"] == "eq0");
        CHECK(j["orders"]["eq0"] == "exact");
        CHECK(j["orders"]["over0"].get<double>() == doctest::Approx(2.01));
    }

    TEST_CASE("RK4 on dH/dt = x/(x - 1) H at x = 2")
    {
        const PdeSystem s = fixtures::parse(fixtures::linear_model);
        OdeSystem ode;
        ode.state = {DerivativeAtom{"H", {}}};
        ode.rates = {parse_expression(s, "2*H")};
        const auto tr = integrate_ode(ode, {1.0}, {}, 0, 1, 1e-3);
        CHECK(std::abs(tr.states.back()[0] - std::exp(2.0)) < 1e-6);
        CHECK(tr.times.size() == 1001);
        CHECK(tr.to_csv().rfind("t,H\n", 0) == 0);

        const auto zero = integrate_ode(ode, {0.0}, {}, 0, 1, 1e-2);
        for (const auto& st : zero.states) CHECK(st[0] == 0.0);
    }

    TEST_CASE("RK4 step halving shows fourth order")
    {
        const PdeSystem s = fixtures::parse(fixtures::linear_model);
        OdeSystem ode;
        ode.state = {DerivativeAtom{"G", {}}, DerivativeAtom{"H", {}}};
        ode.rates = {parse_expression(s, "H"), parse_expression(s, "-G")};
        const auto e = [&](double dt) {
            const auto tr = integrate_ode(ode, {0.0, 1.0}, {}, 0, 2, dt);
            return std::abs(tr.states.back()[0] - std::sin(2.0));
        };
        const double ratio = e(0.1) / e(0.05);
        CHECK(ratio == doctest::Approx(16.0).epsilon(0.1));
    }

    TEST_CASE("RK4 rejects non-finite states")
    {
        const PdeSystem s = fixtures::parse(fixtures::linear_model);
        OdeSystem ode;
        ode.state = {DerivativeAtom{"H", {}}};
        ode.rates = {parse_expression(s, "H^2")};
        CHECK_THROWS_AS((void)integrate_ode(ode, {1e200}, {}, 0, 1, 0.5), EvaluationError);
    }

    TEST_CASE("Cauchy ODE of the linear model tracks the nonzero joint solution")
    {
        const PdeSystem s = fixtures::parse(fixtures::linear_model);
        const NormalForm nf = solve_normal_form(s);
        const ReductionChain chain = build_chain(s, nf, 0);
        const auto cf = cauchy_form(s, chain);
        const OdeSystem ode = cauchy_ode(s, cf, {{"x", Rational(2)}});
        REQUIRE(ode.state.size() == 4);
        // State order: G, H, dt(G), dt(H); G = exp(t), H = 0.
        const auto tr = integrate_ode(ode, {1.0, 0.0, 1.0, 0.0}, {}, 0, 1, 1e-3);
        CHECK(std::abs(tr.states.back()[0] - std::exp(1.0)) < 1e-6);
        CHECK(std::abs(tr.states.back()[1]) < 1e-12);
    }

    TEST_CASE("manufactured systems are exact and reproducible")
    {
        for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
            const ManufacturedSystem m = manufactured_overdetermined(seed);
            CHECK(count_balance(m.system) == Counts{3, 2});
            const auto rep = residual(m.system, system_equations(m.system), m.exact, unit_square(16), {});
            CHECK(rep.max_residual() < 1e-12);
            const ManufacturedSystem again = manufactured_overdetermined(seed);
            CHECK(render_system(again.system) == render_system(m.system));
            CHECK(again.k == m.k);
        }
        CHECK(render_system(manufactured_overdetermined(1).system) != render_system(manufactured_overdetermined(2).system));
    }
}
