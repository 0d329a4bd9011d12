#include "overdet/catalog.hpp"

#include "overdet/normalize.hpp"
#include "overdet/reduction.hpp"

#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace overdet {

namespace {

using nlohmann::ordered_json;

ManufacturedSolution differential_rotation(bool with_pressure_and_density)
{
    ManufacturedSolution m;
    m.description = "inviscid differential rotation u = r^2 (-y, x, 0), labels rotated back by r^2 t";
    m.fields = {
        {"ux", "-(x^2 + y^2)*y"},
        {"uy", "(x^2 + y^2)*x"},
        {"uz", "0"},
        {"wx", "0"},
        {"wy", "0"},
        {"wz", "4*(x^2 + y^2)"},
        {"x0", "x*cos((x^2 + y^2)*t) + y*sin((x^2 + y^2)*t)"},
        {"y0", "-x*sin((x^2 + y^2)*t) + y*cos((x^2 + y^2)*t)"},
        {"z0", "z"},
        {"W0x", "0"},
        {"W0y", "0"},
        {"W0z", "4*(x^2 + y^2)"},
    };
    if (with_pressure_and_density) {
        m.fields.emplace_back("P", "(x^2 + y^2)^3/6");
        m.fields.emplace_back("rho", "1");
        m.fields.emplace_back("ax", "0");
        m.fields.emplace_back("ay", "0");
        m.fields.emplace_back("az", "0");
    } else {
        m.aux_relations = {"alpha_x", "alpha_y", "alpha_z"};
    }
    m.params = {{"nu", 0.0}};
    m.primary = {{"x", -1.0, 1.0}, {"y", -0.9, 0.8}};
    m.frozen = {{"t", 0.5}, {"z", 0.0}};
    return m;
}

// Contact discontinuity smoothed into a cosine profile, advected at unit
// speed through uniform pressure.
ManufacturedSolution contact_wave(bool with_alpha)
{
    ManufacturedSolution m;
    m.fields = {
        {"ux", "1"},
        {"uy", "0"},
        {"uz", "0"},
        {"wx", "0"},
        {"wy", "0"},
        {"wz", "0"},
        {"rho", "7/5*(1 + 1/5*cos(x - t))"},
        {"T", "1/(7/5*(1 + 1/5*cos(x - t)))"},
        {"P", "1"},
        {"s", "-7/5*ln(7/5*(1 + 1/5*cos(x - t)))"},
        {"psi", "0"},
        {"qx", "0"},
        {"qy", "0"},
        {"qz", "0"},
        {"y0", "y"},
        {"z0", "z"},
        {"W0x", "0"},
        {"W0y", "0"},
        {"W0z", "0"},
    };
    if (with_alpha) {
        m.description = "cosine contact wave at unit speed, alpha = (1/rhos, 0, 0)";
        m.fields.emplace_back("rhos", "1 + 1/5*cos(x - t)");
        m.fields.emplace_back("ax", "1/(1 + 1/5*cos(x - t))");
        m.fields.emplace_back("ay", "0");
        m.fields.emplace_back("az", "0");
        m.fields.emplace_back("x0", "x - 2*t + 1/5*sin(x - t)");
        m.fields.emplace_back("R0", "1");
    } else {
        m.description = "cosine contact wave at unit speed, alpha solved pointwise";
        m.fields.emplace_back("x0", "x - t");
        m.aux_relations = {"alpha_x", "alpha_y", "alpha_z"};
    }
    m.params = {{"mu", 0.01}, {"kappa", 0.0}, {"gamma", 1.4}, {"Fx", 0.0}, {"Fy", 0.0}, {"Fz", 0.0}, {"Q", 0.0}};
    m.primary = {{"x", 0.0, 2.0}, {"y", -0.5, 0.5}};
    m.frozen = {{"t", 0.3}, {"z", 0.0}};
    return m;
}

ManufacturedSolution taylor_green_3d()
{
    ManufacturedSolution m;
    m.description = "Taylor-Green vortex, nu = 0.01";
    m.fields = {
        {"ux", "sin(x)*cos(y)*exp(-2*nu*t)"},
        {"uy", "-cos(x)*sin(y)*exp(-2*nu*t)"},
        {"uz", "0"},
        {"P", "(cos(2*x) + cos(2*y))/4*exp(-4*nu*t)"},
        {"wz", "2*sin(x)*sin(y)*exp(-2*nu*t)"},
    };
    m.params = {{"nu", 0.01}};
    m.primary = {{"x", 0.2, 1.7}, {"y", 0.1, 1.1}};
    m.frozen = {{"t", 0.3}, {"z", 0.0}};
    return m;
}

std::vector<CatalogEntry> build_entries()
{
    const auto& sources = embedded_catalog_sources();
    std::vector<CatalogEntry> out;
    auto add = [&](CatalogEntry e) {
        e.source = sources.at(e.name);
        e.system = parse_system(e.source);
        if (!(count_balance(e.system) == e.expected)) {
            throw Error("catalog entry " + e.name + " does not match its expected counts");
        }
        out.push_back(std::move(e));
    };

    {
        CatalogEntry e;
        e.name = "linear_s1";
        e.topic = "linear model system";
        e.expected = {3, 2};
        e.feasibility = Feasibility::Full;
        ManufacturedSolution m;
        m.description = "nonzero joint solution G = exp(t), H = 0";
        m.fields = {{"G", "exp(t)"}, {"H", "0"}};
        m.primary = {{"t", 0.0, 1.0}, {"x", 0.0, 1.0}};
        e.manufactured = m;
        e.golden = {
            {"chain_G1", "(1 - x)*dt(H) + x*H"},
            {"chain_G2", "(x - 1)*dt(dt(G)) + (1 - 2*x)*dt(G) + x*G - dt(H) + H"},
            {"leading_matrix_11", "0"},
            {"leading_matrix_12", "1 - x"},
            {"leading_matrix_21", "x - 1"},
            {"leading_matrix_22", "0"},
            {"leading_determinant", "(x - 1)^2"},
            {"fixed_point_H_t", "x*H/(x - 1)"},
            {"fixed_point_H_tt", "x^2*H/(x - 1)^2"},
            {"fixed_point_H_ttt", "x^3*H/(x - 1)^3"},
        };
        e.alternates = {
            "the hand-written fixed-point relations for (G_t, G, H) contain algebra slips; the engine relations are "
            "checked against tests/oracles/linear_model_closure.out instead",
        };
        e.notes = {"G = c exp(t), H = 0 solves all three equations, so the joint solution is not only the trivial one"};
        add(std::move(e));
    }
    {
        CatalogEntry e;
        e.name = "counterexample_s2";
        e.topic = "single-field counterexample";
        e.expected = {2, 1};
        e.feasibility = Feasibility::Full;
        ManufacturedSolution m;
        m.description = "general solution alpha = exp(x - t)";
        m.fields = {{"alpha", "exp(x - t)"}};
        m.primary = {{"t", 0.0, 1.0}, {"x", 0.0, 1.0}};
        e.manufactured = m;
        e.golden = {{"chain_G1", "dt(alpha) + alpha"}};
        e.notes = {"the second chain link is a consequence of the first, so the reduction stops"};
        add(std::move(e));
    }
    {
        CatalogEntry e;
        e.name = "navier_stokes_I";
        e.topic = "Navier-Stokes with labels and auxiliary vector";
        e.expected = {15, 14};
        e.feasibility = Feasibility::CountsAndResidualOnly;
        e.manufactured = differential_rotation(true);
        e.notes = {
            "the auxiliary vector is written a and alpha in different places; both are the field alpha (ax, ay, az)",
            "frozen vorticity is given for the x and y components only; the z component is not encoded",
            "label Jacobian divided by rho equals 1, with no initial density factor",
        };
        add(std::move(e));
    }
    {
        CatalogEntry e;
        e.name = "full_hydro_I";
        e.topic = "complete hydrodynamics with labels and auxiliary vector";
        e.expected = {22, 21};
        e.feasibility = Feasibility::CountsAndResidualOnly;
        e.manufactured = contact_wave(true);
        e.alternates = {
            "alpha transport with alpha x curl(u) in place of alpha x curl(alpha), matching navier_stokes_I",
        };
        e.notes = {
            "ideal gas closure T = exp(s) rho^(gamma - 1), P = rho T",
            "label Jacobian divided by rhos equals 1/rho0(r0), carried by the auxiliary field R0",
            "kappa = 0 in the manufactured solution",
        };
        add(std::move(e));
    }
    {
        CatalogEntry e;
        e.name = "viscous_2d";
        e.topic = "planar viscous flow reduced to the vorticity";
        e.expected = {2, 1};
        e.feasibility = Feasibility::SymbolicDerivationOnly;
        ManufacturedSolution m;
        m.description = "Taylor-Green vorticity w = 2 sin(x) sin(y) exp(-2 nu t), nu = 0.01";
        m.fields = {{"w", "2*sin(x)*sin(y)*exp(-2*nu*t)"}};
        m.params = {{"nu", 0.01}};
        m.primary = {{"x", 0.2, 1.7}, {"y", 0.1, 1.1}};
        m.frozen = {{"t", 0.3}};
        m.fd_supported = false;
        e.manufactured = m;
        e.golden = {
            {"A", "(beta*dy(beta) + dx(beta))/(1 + beta^2)"},
            {"B", "(dx(alpha) + beta*dy(alpha) + w)/(1 + beta^2)"},
            {"C", "(beta*dx(beta) - dy(beta))/(1 + beta^2)"},
            {"D", "(beta*dx(alpha) - dy(alpha) + beta*w)/(1 + beta^2)"},
            {"ux", "(dx(B) - dy(D) + C*B - A*D)/(dy(C) - dx(A))"},
        };
        e.notes = {
            "coefficients re-derived from compressible_2d with constant density",
            "the ux relations carry fifth derivatives of w; verification is analytic only",
        };
        add(std::move(e));
    }
    {
        CatalogEntry e;
        e.name = "navier_stokes_II";
        e.topic = "Navier-Stokes with the frozen-vorticity integral";
        e.expected = {10, 9};
        e.feasibility = Feasibility::CountsAndResidualOnly;
        e.manufactured = differential_rotation(false);
        e.notes = {"alpha is determined pointwise from the alpha relations and is not counted"};
        add(std::move(e));
    }
    {
        CatalogEntry e;
        e.name = "full_hydro_II";
        e.topic = "complete hydrodynamics with the frozen-vorticity integral";
        e.expected = {18, 17};
        e.feasibility = Feasibility::CountsAndResidualOnly;
        e.manufactured = contact_wave(false);
        e.notes = {
            "vorticity transport is replaced by w = omega0(r0); only the x momentum balance is kept",
            "alpha is determined pointwise from the alpha relations and is not counted",
        };
        add(std::move(e));
    }
    {
        CatalogEntry e;
        e.name = "compressible_2d";
        e.topic = "planar compressible flow with the ux closure";
        e.expected = {8, 5};
        e.feasibility = Feasibility::SymbolicDerivationOnly;
        ManufacturedSolution m;
        m.description = "rigid rotation u = (-y, x) with rho = 1 + r^2 and radial pressure balance";
        m.fields = {
            {"ux", "-y"},
            {"uy", "x"},
            {"rho", "1 + x^2 + y^2"},
            {"P", "1 + (x^2 + y^2)/2 + (x^2 + y^2)^2/4"},
            {"w", "2"},
        };
        m.params = {{"gamma", 1.4}};
        m.primary = {{"x", -1.0, 1.0}, {"y", 0.5, 1.5}};
        m.frozen = {{"t", 0.0}};
        e.manufactured = m;
        e.golden = {
            {"A", "(beta*K + dx(beta))/(1 + beta^2)"},
            {"B", "(dx(alpha) + beta*dy(alpha) + w - dt(rho)/rho*beta + dy(rho)/rho*alpha*beta)/(1 + beta^2)"},
            {"C", "(beta*dx(beta) - K)/(1 + beta^2)"},
            {"D", "(beta*dx(alpha) - dy(alpha) + beta*w + dt(rho)/rho - dy(rho)/rho*alpha)/(1 + beta^2)"},
            {"ux", "(dx(B) - dy(D) + C*B - A*D)/(dy(C) - dx(A))"},
        };
        e.notes = {
            "entropy s = ln(P) - gamma ln(rho)",
            "expected counts fixed from the equation list: 5 determined, 3 over-determining",
        };
        add(std::move(e));
    }
    {
        CatalogEntry e;
        e.name = "navier_stokes_III";
        e.topic = "three-dimensional Navier-Stokes with the ux closure";
        e.expected = {6, 5};
        e.feasibility = Feasibility::SymbolicDerivationOnly;
        e.manufactured = taylor_green_3d();
        e.golden = {
            {"A", "(beta*dy(beta) + dx(beta))/(1 + beta^2)"},
            {"B", "(dx(alpha) + beta*dy(alpha) + wz - beta*dz(uz))/(1 + beta^2)"},
            {"C", "(beta*dx(beta) - dy(beta))/(1 + beta^2)"},
            {"D", "(beta*dx(alpha) - dy(alpha) + beta*wz + dz(uz))/(1 + beta^2)"},
            {"ux", "(dx(B) - dy(D) + C*B - A*D)/(dy(C) - dx(A))"},
        };
        add(std::move(e));
    }
    return out;
}

const std::vector<CatalogEntry>& entries()
{
    static const std::vector<CatalogEntry> all = build_entries();
    return all;
}

// Copy of `sys` where the named `let` fields become opaque auxiliary fields.
PdeSystem with_opaque(const PdeSystem& sys, const std::vector<std::string>& names)
{
    PdeSystem out = sys;
    for (auto& f : out.fields) {
        if (std::find(names.begin(), names.end(), f.name) != names.end()) {
            f.role = FieldRole::Auxiliary;
            f.definition = Expression::integer(0);
        }
    }
    return out;
}

const Equation& find_equation(const PdeSystem& sys, const std::string& label)
{
    for (const auto* list : {&sys.equations, &sys.over, &sys.relations}) {
        for (const auto& eq : *list) {
            if (eq.label == label) return eq;
        }
    }
    throw Error(sys.name + " has no equation " + label);
}

DerivativeAtom atom_of(const std::string& field, const std::string& coord)
{
    return DerivativeAtom{field, MultiIndex({{coord, 1}})};
}

struct ClosureCoefficients {
    std::map<std::string, Expression> coeff;  // A, B, C, D
};

// uy = -beta ux - alpha substituted into the vorticity definition and the
// continuity equation, solved for dy(ux) and dx(ux).
ClosureCoefficients closure_coefficients(const PdeSystem& sys, const std::string& vorticity,
                                         const std::string& continuity)
{
    const PdeSystem op = with_opaque(sys, {"alpha", "beta"});
    const Dependencies deps = op.dependencies();
    const Expression closure = parse_expression(op, "-beta*ux - alpha");
    std::vector<Expression> eqs;
    for (const auto& label : {vorticity, continuity}) {
        const Expression e = op.expand(find_equation(op, label).expr);
        eqs.push_back(normalize(substitute_field(e, "uy", closure, deps)));
    }
    const DerivativeAtom uy = atom_of("ux", op.frame.normal);
    const DerivativeAtom ux_t = atom_of("ux", op.frame.tangents.front());
    const auto sol = solve_linear_symbolic(eqs, {uy, ux_t});
    const DerivativeAtom u{"ux", {}};
    const auto ab = affine_decompose(normalize(-sol.values.at(uy)), {u});
    const auto cd = affine_decompose(normalize(-sol.values.at(ux_t)), {u});
    ClosureCoefficients out;
    out.coeff["A"] = normalize(ab.coefficients[0]);
    out.coeff["B"] = normalize(ab.rest);
    out.coeff["C"] = normalize(cd.coefficients[0]);
    out.coeff["D"] = normalize(cd.rest);
    return out;
}

// ux from the compatibility of dy(ux) + A ux + B = 0 and dx(ux) + C ux + D = 0.
Expression closure_ux(const PdeSystem& sys)
{
    const PdeSystem op = with_opaque(sys, {"alpha", "beta", "A", "B", "C", "D"});
    const Dependencies deps = op.dependencies();
    const std::string n = op.frame.normal;
    const std::string tg = op.frame.tangents.front();
    const Expression ey = parse_expression(op, "d" + n + "(ux) + A*ux + B");
    const Expression ex = parse_expression(op, "d" + tg + "(ux) + C*ux + D");
    const Expression cross = normalize(differentiate(ey, tg, deps) - differentiate(ex, n, deps));
    const std::vector<Rule> rules = {
        {atom_of("ux", n), parse_expression(op, "-A*ux - B")},
        {atom_of("ux", tg), parse_expression(op, "-C*ux - D")},
    };
    const Expression reduced = apply_rules(cross, rules, deps);
    const auto form = affine_decompose(reduced, {DerivativeAtom{"ux", {}}});
    if (normalize(form.coefficients[0]).is_zero()) throw SingularSystemError("ux drops out of the compatibility condition");
    return normalize(-form.rest / form.coefficients[0]);
}

Expression let_definition(const PdeSystem& op, const std::string& name)
{
    const FieldDecl* f = op.field(name);
    if (f == nullptr || f->role != FieldRole::Defined) throw Error(op.name + " has no definition " + name);
    return normalize(op.expand(f->definition));
}

Expression without_density_derivatives(const Expression& e)
{
    return normalize(rewrite_leaves(e, [](const Expression& leaf) {
        if (leaf.kind() == ExprKind::Derivative && leaf.derivative().field == "rho" && !leaf.derivative().index.empty()) {
            return Expression::integer(0);
        }
        return leaf;
    }));
}

void compare(GoldenReport& report, const std::string& label, const Expression& derived, const Expression& golden)
{
    GoldenComparison c;
    c.label = label;
    const Expression d = normalize(derived);
    const Expression g = normalize(golden);
    c.derived = d.to_string();
    c.golden = g.to_string();
    c.equal = d == g;
    report.items.push_back(std::move(c));
}

void record_failure(GoldenReport& report, const std::string& label, const std::string& golden, const std::exception& ex)
{
    GoldenComparison c;
    c.label = label;
    c.golden = golden;
    c.error = ex.what();
    report.items.push_back(std::move(c));
}

std::string golden_text(const CatalogEntry& e, const std::string& label)
{
    for (const auto& g : e.golden) {
        if (g.label == label) return g.expression;
    }
    throw Error(e.name + " has no golden item " + label);
}

void golden_linear(const CatalogEntry& e, GoldenReport& report)
{
    const PdeSystem& sys = e.system;
    const Dependencies deps = sys.dependencies();
    auto golden = [&](const std::string& label) { return parse_expression(sys, golden_text(e, label)); };
    try {
        const NormalForm nf = solve_normal_form(sys);
        const ReductionChain chain = build_chain(sys, nf, 0);
        compare(report, "chain_G1", chain.links.at(0), golden("chain_G1"));
        compare(report, "chain_G2", chain.links.at(1), golden("chain_G2"));
        const LeadingMatrix m = leading_matrix(sys, nf, chain);
        for (std::size_t j = 0; j < 2; ++j) {
            for (std::size_t i = 0; i < 2; ++i) {
                const std::string label = "leading_matrix_" + std::to_string(j + 1) + std::to_string(i + 1);
                compare(report, label, m.entries.at(j).at(i), golden(label));
            }
        }
        compare(report, "leading_determinant", m.determinant, golden("leading_determinant"));

        const DerivativeAtom ht{"H", MultiIndex({{"t", 1}})};
        const auto sol = solve_linear_symbolic({chain.links.at(0)}, {ht});
        const std::vector<Rule> rules = {{ht, sol.values.at(ht)}};
        compare(report, "fixed_point_H_t", sol.values.at(ht), golden("fixed_point_H_t"));
        for (int k = 2; k <= 3; ++k) {
            const std::string label = k == 2 ? "fixed_point_H_tt" : "fixed_point_H_ttt";
            const Expression a = Expression::atom(DerivativeAtom{"H", MultiIndex({{"t", k}})});
            compare(report, label, apply_rules(a, rules, deps), golden(label));
        }
    } catch (const Error& ex) {
        record_failure(report, "linear_pipeline", "", ex);
    }
}

void golden_single(const CatalogEntry& e, GoldenReport& report)
{
    try {
        const NormalForm nf = solve_normal_form(e.system);
        const Expression g1 = eliminate_normal(e.system, nf, 0);
        compare(report, "chain_G1", g1, parse_expression(e.system, golden_text(e, "chain_G1")));
    } catch (const Error& ex) {
        record_failure(report, "chain_G1", golden_text(e, "chain_G1"), ex);
    }
}

// Closed-form ux pipeline shared by the compressible and three-dimensional
// entries.
void golden_closure(const CatalogEntry& e, const std::string& vorticity, const std::string& continuity,
                    GoldenReport& report)
{
    const PdeSystem op = with_opaque(e.system, {"alpha", "beta"});
    try {
        const auto cc = closure_coefficients(e.system, vorticity, continuity);
        for (const std::string name : {"A", "B", "C", "D"}) {
            compare(report, name, cc.coeff.at(name), op.expand(parse_expression(op, golden_text(e, name))));
        }
    } catch (const Error& ex) {
        record_failure(report, "A", golden_text(e, "A"), ex);
    }
    try {
        const PdeSystem op2 = with_opaque(e.system, {"alpha", "beta", "A", "B", "C", "D"});
        compare(report, "ux", closure_ux(e.system), parse_expression(op2, golden_text(e, "ux")));
    } catch (const Error& ex) {
        record_failure(report, "ux", golden_text(e, "ux"), ex);
    }
}

void golden_viscous(const CatalogEntry& e, GoldenReport& report)
{
    const CatalogEntry& base = catalog_get("compressible_2d");
    const PdeSystem op = with_opaque(e.system, {"alpha", "beta"});
    try {
        const auto cc = closure_coefficients(base.system, "vorticity", "mass");
        for (const std::string name : {"A", "B", "C", "D"}) {
            compare(report, name, without_density_derivatives(cc.coeff.at(name)),
                    parse_expression(op, golden_text(e, name)));
        }
        for (const std::string name : {"A", "B", "C", "D"}) {
            compare(report, name + "_definition", let_definition(op, name), parse_expression(op, golden_text(e, name)));
        }
    } catch (const Error& ex) {
        record_failure(report, "A", golden_text(e, "A"), ex);
    }
    try {
        const PdeSystem op2 = with_opaque(e.system, {"alpha", "beta", "A", "B", "C", "D"});
        const Expression golden = parse_expression(op2, golden_text(e, "ux"));
        compare(report, "ux", closure_ux(base.system), golden);
        compare(report, "ux_definition", let_definition(op2, "ux"), golden);
    } catch (const Error& ex) {
        record_failure(report, "ux", golden_text(e, "ux"), ex);
    }
}

ordered_json entry_summary(const CatalogEntry& e)
{
    ordered_json j;
    j["name"] = e.name;
    j["topic"] = e.topic;
    j["equations"] = e.expected.equations;
    j["unknowns"] = e.expected.unknowns;
    j["feasibility"] = feasibility_name(e.feasibility);
    j["manufactured"] = e.manufactured.has_value();
    j["golden"] = e.golden.size();
    return j;
}

}  // namespace

std::string feasibility_name(Feasibility f)
{
    switch (f) {
        case Feasibility::Full: return "full";
        case Feasibility::SymbolicDerivationOnly: return "symbolic-derivation-only";
        case Feasibility::CountsAndResidualOnly: return "counts-and-residual-only";
    }
    return "?";
}

std::map<std::string, Expression> CatalogEntry::exact_fields() const
{
    std::map<std::string, Expression> out;
    if (!manufactured) return out;
    for (const auto& [name, text] : manufactured->fields) out.emplace(name, parse_expression(system, text));
    return out;
}

Binding CatalogEntry::parameters() const
{
    Binding b;
    if (manufactured) {
        for (const auto& [k, v] : manufactured->params) b.set(k, v);
    }
    return b;
}

const CatalogEntry& catalog_get(const std::string& name)
{
    for (const auto& e : entries()) {
        if (e.name == name) return e;
    }
    throw UnknownEntryError("unknown catalog entry '" + name + "'");
}

std::vector<std::string> catalog_names()
{
    std::vector<std::string> out;
    for (const auto& e : entries()) out.push_back(e.name);
    return out;
}

std::string catalog_table()
{
    std::ostringstream out;
    out << std::left << std::setw(20) << "name" << std::setw(10) << "counts" << std::setw(27) << "feasibility"
        << "topic\n";
    for (const auto& e : entries()) {
        const std::string counts =
            "(" + std::to_string(e.expected.equations) + ", " + std::to_string(e.expected.unknowns) + ")";
        out << std::setw(20) << e.name << std::setw(10) << counts << std::setw(27) << feasibility_name(e.feasibility)
            << e.topic << "\n";
    }
    return out.str();
}

std::string catalog_list_json()
{
    ordered_json j = ordered_json::array();
    for (const auto& e : entries()) j.push_back(entry_summary(e));
    return j.dump(2) + "\n";
}

std::string catalog_show_json(const CatalogEntry& e)
{
    ordered_json j = entry_summary(e);
    j["title"] = e.system.title;
    if (e.manufactured) {
        ordered_json m;
        m["description"] = e.manufactured->description;
        ordered_json fields = ordered_json::object();
        for (const auto& [k, v] : e.manufactured->fields) fields[k] = v;
        m["fields"] = std::move(fields);
        m["params"] = e.manufactured->params;
        m["fd_supported"] = e.manufactured->fd_supported;
        j["manufactured_solution"] = std::move(m);
    }
    ordered_json golden = ordered_json::array();
    for (const auto& g : e.golden) golden.push_back({{"label", g.label}, {"expression", g.expression}});
    j["golden_expressions"] = std::move(golden);
    j["alternates"] = e.alternates;
    j["notes"] = e.notes;
    j["source"] = e.source;
    return j.dump(2) + "\n";
}

Grid manufactured_grid(const CatalogEntry& e, int n, ResidualMode mode)
{
    if (!e.manufactured) throw VerificationError(e.name + " has no manufactured solution");
    const auto& m = *e.manufactured;
    const Axis first{m.primary.at(0).symbol, m.primary.at(0).lo, m.primary.at(0).hi, n};
    std::vector<Axis> axes;
    for (const auto& c : e.system.frame.coords) {
        const auto it = std::find_if(m.primary.begin(), m.primary.end(), [&](const AxisRange& r) { return r.symbol == c; });
        if (it != m.primary.end()) {
            axes.push_back(Axis{c, it->lo, it->hi, n});
            continue;
        }
        const double v = m.frozen.count(c) ? m.frozen.at(c) : 0.0;
        if (mode == ResidualMode::FiniteDifference) {
            axes.push_back(Axis{c, v - 2 * first.h(), v + 2 * first.h(), 5});
        } else {
            axes.push_back(Axis{c, v, v, 1});
        }
    }
    return Grid(std::move(axes));
}

ResidualReport verify_entry(const CatalogEntry& e, int n, ResidualMode mode)
{
    if (!e.manufactured) throw VerificationError(e.name + " has no manufactured solution");
    const auto& m = *e.manufactured;
    if (mode == ResidualMode::FiniteDifference && !m.fd_supported) {
        throw VerificationError(e.name + " supports analytic verification only");
    }
    std::vector<NamedExpression> eqs;
    for (auto& q : system_equations(e.system)) {
        if (std::find(m.unverified.begin(), m.unverified.end(), q.name) == m.unverified.end()) eqs.push_back(std::move(q));
    }
    ResidualOptions opt;
    opt.mode = mode;
    opt.aux_relations = m.aux_relations;
    ResidualReport r = residual(e.system, eqs, e.exact_fields(), manufactured_grid(e, n, mode), e.parameters(), opt);
    r.notes.insert(r.notes.begin(), "manufactured solution: " + m.description);
    return r;
}

bool GoldenReport::all_equal() const
{
    return !items.empty() && std::all_of(items.begin(), items.end(), [](const GoldenComparison& c) { return c.equal; });
}

const GoldenComparison& GoldenReport::at(const std::string& label) const
{
    for (const auto& c : items) {
        if (c.label == label) return c;
    }
    throw Error("no golden comparison " + label);
}

std::string GoldenReport::to_json() const
{
    ordered_json j;
    j["entry"] = entry;
    ordered_json list = ordered_json::array();
    for (const auto& c : items) {
        ordered_json jc;
        jc["label"] = c.label;
        jc["derived"] = c.derived;
        jc["golden"] = c.golden;
        jc["equal"] = c.equal;
        if (!c.error.empty()) jc["error"] = c.error;
        list.push_back(std::move(jc));
    }
    j["items"] = std::move(list);
    j["all_equal"] = all_equal();
    return j.dump(2) + "\n";
}

GoldenReport derive_golden(const std::string& name)
{
    const CatalogEntry& e = catalog_get(name);
    GoldenReport report;
    report.entry = name;
    if (name == "linear_s1") {
        golden_linear(e, report);
    } else if (name == "counterexample_s2") {
        golden_single(e, report);
    } else if (name == "compressible_2d") {
        golden_closure(e, "vorticity", "mass", report);
    } else if (name == "navier_stokes_III") {
        golden_closure(e, "vorticity", "continuity", report);
    } else if (name == "viscous_2d") {
        golden_viscous(e, report);
    }
    return report;
}

}  // namespace overdet
