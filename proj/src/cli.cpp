#include "overdet/cli.hpp"

#include "overdet/catalog.hpp"
#include "overdet/errors.hpp"
#include "overdet/numeric.hpp"
#include "overdet/system.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace overdet {

namespace {

using nlohmann::ordered_json;

struct RunConfig {
    std::string input;
    std::string entry;  // catalog entry or "list" / "show" / "golden"
    int over = 0;
    int depth = 0;
    std::string at;
    int grid = 64;
    std::string mode = "analytic";
    std::string format = "json";
    std::string out;
    std::uint64_t seed = SamplingBox{}.seed;
    int max_extra = 4;
    double tol = -1;  // mode default when negative
    std::vector<std::string> fields;
};

struct Loaded {
    PdeSystem system;
    const CatalogEntry* entry = nullptr;
};

class UsageError : public Error {
public:
    using Error::Error;
};

Loaded load_input(const std::string& input)
{
    Loaded l;
    const std::string prefix = "catalog:";
    if (input.rfind(prefix, 0) == 0) {
        l.entry = &catalog_get(input.substr(prefix.size()));
        l.system = l.entry->system;
        return l;
    }
    std::ifstream in(input);
    if (!in) throw UsageError("cannot open '" + input + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        l.system = parse_system(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(input + ": " + e.detail(), e.line(), e.column());
    }
    return l;
}

void emit(const RunConfig& cfg, const std::string& text, std::ostream& out)
{
    if (cfg.out.empty()) {
        out << text;
        return;
    }
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + cfg.out + "'");
    f << text;
}

void check_over(const PdeSystem& sys, int over)
{
    if (over < 0 || over >= static_cast<int>(sys.over.size())) {
        throw UsageError("--over " + std::to_string(over) + " is out of range; " + sys.name + " has " +
                         std::to_string(sys.over.size()) + " over-determining equation(s)");
    }
}

int cmd_reduce(const RunConfig& cfg, std::ostream& out)
{
    const Loaded l = load_input(cfg.input);
    check_over(l.system, cfg.over);
    SamplingBox box;
    box.seed = cfg.seed;
    ReductionResult r;
    try {
        r = reduce_system(l.system, cfg.over, cfg.depth, box);
    } catch (const NonAffineError& e) {
        throw ReductionError(std::string("normal form: ") + e.what());
    } catch (const SingularSystemError& e) {
        throw ReductionError(std::string("normal form: ") + e.what());
    }
    if (cfg.format == "latex") {
        emit(cfg, r.to_latex(), out);
    } else if (cfg.format == "text") {
        emit(cfg, r.to_text(), out);
    } else {
        emit(cfg, r.to_json(), out);
    }
    return r.solvability.determinant_zero ? exit_code::determinant_zero : exit_code::ok;
}

// Grid and fields for a user file: the first two coordinates span [0, 1],
// the others sit at their --at value (0 by default). Unknown fields without
// a --field closed form are zero.
struct FileFixture {
    std::map<std::string, Expression> fields;
    Grid grid;
    Binding params;
};

FileFixture file_fixture(const PdeSystem& sys, const RunConfig& cfg, ResidualMode mode)
{
    FileFixture fx;
    const auto at = parse_binding(cfg.at);
    for (const auto& p : sys.params) {
        const auto it = at.find(p);
        if (it == at.end()) throw UsageError("parameter '" + p + "' needs a value (--at " + p + "=...)");
        fx.params.set(p, it->second.get_d());
    }
    for (const auto& assignment : cfg.fields) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos) throw UsageError("--field expects NAME=EXPRESSION");
        fx.fields.emplace(assignment.substr(0, eq), parse_expression(sys, assignment.substr(eq + 1)));
    }
    for (const auto& u : sys.unknowns()) fx.fields.emplace(u, Expression::integer(0));
    std::vector<Axis> axes;
    const auto& coords = sys.frame.coords;
    const double h = cfg.grid > 1 ? 1.0 / (cfg.grid - 1) : 0.0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (i < 2) {
            axes.push_back(Axis{coords[i], 0.0, 1.0, cfg.grid});
            continue;
        }
        const auto it = at.find(coords[i]);
        const double v = it == at.end() ? 0.0 : it->second.get_d();
        if (mode == ResidualMode::FiniteDifference) {
            axes.push_back(Axis{coords[i], v - 2 * h, v + 2 * h, 5});
        } else {
            axes.push_back(Axis{coords[i], v, v, 1});
        }
    }
    fx.grid = Grid(std::move(axes));
    return fx;
}

ResidualReport verify_once(const Loaded& l, const RunConfig& cfg, ResidualMode mode, int n)
{
    if (l.entry != nullptr && cfg.fields.empty()) {
        if (!l.entry->manufactured) throw UsageError(l.entry->name + " has no manufactured solution; pass --field");
        if (mode == ResidualMode::FiniteDifference && !l.entry->manufactured->fd_supported) {
            throw UsageError(l.entry->name + " supports --mode analytic only");
        }
        return verify_entry(*l.entry, n, mode);
    }
    RunConfig sized = cfg;
    sized.grid = n;
    const FileFixture fx = file_fixture(l.system, sized, mode);
    ResidualOptions opt;
    opt.mode = mode;
    return residual(l.system, system_equations(l.system), fx.fields, fx.grid, fx.params, opt);
}

int cmd_verify(const RunConfig& cfg, std::ostream& out)
{
    const Loaded l = load_input(cfg.input);
    if (cfg.mode != "analytic" && cfg.mode != "fd") throw UsageError("--mode must be analytic or fd");
    const ResidualMode mode = cfg.mode == "fd" ? ResidualMode::FiniteDifference : ResidualMode::Analytic;
    if (cfg.grid < 3) throw UsageError("--grid must be at least 3");
    const double tol = cfg.tol >= 0 ? cfg.tol : (mode == ResidualMode::Analytic ? 1e-10 : 1e-2);

    ResidualReport rep = verify_once(l, cfg, mode, cfg.grid);
    if (mode == ResidualMode::FiniteDifference) {
        const ResidualReport fine = verify_once(l, cfg, mode, 2 * cfg.grid);
        rep.orders = convergence_order(rep, fine);
        rep.notes.push_back("orders against a grid of " + std::to_string(2 * cfg.grid) + " points per axis");
    }
    bool passed = true;
    for (const auto& e : rep.per_equation) passed = passed && e.points > 0 && e.max <= tol;

    if (cfg.format == "text") {
        std::ostringstream s;
        s << rep.system << " (" << mode_name(mode) << ", grid " << cfg.grid << ")\n";
        for (const auto& e : rep.per_equation) {
            s << "  " << std::left << std::setw(28) << e.name << " max " << std::scientific << std::setprecision(3)
              << e.max << "  rms " << e.l2 << "  points " << e.points << "\n";
        }
        for (const auto& o : rep.orders) {
            s << "  order " << o.name << ": " << (o.exact ? std::string("exact") : std::to_string(o.order)) << "\n";
        }
        s << (passed ? "PASS" : "FAIL") << " at tolerance " << std::scientific << std::setprecision(1) << tol << "\n";
        emit(cfg, s.str(), out);
    } else if (cfg.format == "latex") {
        std::ostringstream s;
        s << "\\begin{tabular}{lrr}\n  equation & max & rms \\\\\n";
        for (const auto& e : rep.per_equation) {
            s << "  \\texttt{" << e.name << "} & " << std::scientific << std::setprecision(3) << e.max << " & " << e.l2
              << " \\\\\n";
        }
        s << "\\end{tabular}\n";
        emit(cfg, s.str(), out);
    } else {
        ordered_json j = ordered_json::parse(rep.to_json());
        j["tolerance"] = tol;
        j["passed"] = passed;
        emit(cfg, j.dump(2) + "\n", out);
    }
    return passed ? exit_code::ok : exit_code::verification;
}

int cmd_closure(const RunConfig& cfg, std::ostream& out)
{
    const Loaded l = load_input(cfg.input);
    check_over(l.system, cfg.over);
    if (cfg.at.empty()) throw UsageError("closure needs --at");
    const auto point = parse_binding(cfg.at);
    NormalForm nf;
    try {
        nf = solve_normal_form(l.system);
    } catch (const NonAffineError& e) {
        throw ReductionError(std::string("normal form: ") + e.what());
    } catch (const SingularSystemError& e) {
        throw ReductionError(std::string("normal form: ") + e.what());
    }
    const ReductionChain chain = build_chain(l.system, nf, cfg.over, cfg.depth);
    const ClosureReport rep = fixed_point_closure(l.system, nf, chain, point, cfg.max_extra);
    if (cfg.format == "text" || cfg.format == "latex") {
        const bool tex = cfg.format == "latex";
        std::ostringstream s;
        for (std::size_t i = 0; i < rep.frozen_chain.size(); ++i) {
            const auto& g = rep.frozen_chain[i];
            s << (tex ? "G^{(" + std::to_string(i + 1) + ")} = " + g.to_latex() + " = 0 \\\\\n"
                      : "G" + std::to_string(i + 1) + " = " + g.to_string() + "\n");
        }
        for (std::size_t i = 0; i < rep.relations.size(); ++i) {
            const auto& r = rep.relations[i];
            s << (tex ? "R_{" + std::to_string(i + 1) + "} = " + r.to_latex() + " = 0 \\\\\n"
                      : "R" + std::to_string(i + 1) + " = " + r.to_string() + "\n");
        }
        if (!rep.relations.empty()) {
            s << (tex ? "\\text{rank } " : "rank ") << rep.rank << (tex ? ",\\ " : ", verdict ")
              << verdict_name(rep.verdict) << "\n";
        }
        emit(cfg, s.str(), out);
    } else {
        emit(cfg, closure_json(l.system, rep), out);
    }
    return exit_code::ok;
}

int cmd_catalog(const RunConfig& cfg, const std::string& action, std::ostream& out)
{
    if (action == "list") {
        emit(cfg, cfg.format == "text" ? catalog_table() : catalog_list_json(), out);
        return exit_code::ok;
    }
    if (cfg.entry.empty()) throw UsageError("catalog " + action + " needs an entry name");
    const CatalogEntry& e = catalog_get(cfg.entry);
    if (action == "golden") {
        const GoldenReport g = derive_golden(e.name);
        emit(cfg, g.to_json(), out);
        return g.items.empty() || g.all_equal() ? exit_code::ok : exit_code::verification;
    }
    if (cfg.format == "text") {
        std::ostringstream s;
        s << e.name << ": " << e.system.title << "\n";
        s << "counts: (" << e.expected.equations << ", " << e.expected.unknowns << ")\n";
        s << "feasibility: " << feasibility_name(e.feasibility) << "\n";
        for (const auto& n : e.notes) s << "note: " << n << "\n";
        s << "\n" << e.source;
        emit(cfg, s.str(), out);
    } else {
        emit(cfg, catalog_show_json(e), out);
    }
    return exit_code::ok;
}

}  // namespace

Rational parse_rational(const std::string& text)
{
    std::string s = text;
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    if (s.empty()) throw ParseError("empty number", 0, 0);
    bool negative = false;
    std::string body = s;
    if (body[0] == '-' || body[0] == '+') {
        negative = body[0] == '-';
        body = body.substr(1);
    }
    const auto digits = [](const std::string& d) {
        return !d.empty() && std::all_of(d.begin(), d.end(), [](unsigned char c) { return std::isdigit(c); });
    };
    Rational v;
    if (const auto slash = body.find('/'); slash != std::string::npos) {
        const std::string num = body.substr(0, slash);
        const std::string den = body.substr(slash + 1);
        if (!digits(num) || !digits(den)) throw ParseError("malformed number '" + text + "'", 0, 0);
        if (mpz_class(den) == 0) throw ParseError("zero denominator in '" + text + "'", 0, 0);
        v = Rational(mpz_class(num), mpz_class(den));
    } else if (const auto dot = body.find('.'); dot != std::string::npos) {
        const std::string whole = body.substr(0, dot);
        const std::string frac = body.substr(dot + 1);
        if ((!whole.empty() && !digits(whole)) || (!frac.empty() && !digits(frac)) || (whole.empty() && frac.empty())) {
            throw ParseError("malformed number '" + text + "'", 0, 0);
        }
        mpz_class scale = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
        v = Rational(mpz_class(whole.empty() ? "0" : whole) * scale + mpz_class(frac.empty() ? "0" : frac), scale);
    } else {
        if (!digits(body)) throw ParseError("malformed number '" + text + "'", 0, 0);
        v = Rational(mpz_class(body));
    }
    v.canonicalize();
    return negative ? Rational(-v) : v;
}

std::map<std::string, Rational> parse_binding(const std::string& text)
{
    std::map<std::string, Rational> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw ParseError("binding '" + item + "' is not NAME=VALUE", 0, 0);
        std::string name = item.substr(0, eq);
        name.erase(std::remove_if(name.begin(), name.end(), [](unsigned char c) { return std::isspace(c); }), name.end());
        out[name] = parse_rational(item.substr(eq + 1));
    }
    return out;
}

std::string closure_json(const PdeSystem& sys, const ClosureReport& rep)
{
    ordered_json j;
    j["system"] = sys.name;
    ordered_json point = ordered_json::object();
    for (const auto& [k, v] : rep.point) point[k] = v.get_str();
    j["point"] = std::move(point);
    ordered_json rules = ordered_json::object();
    for (const auto& r : rep.rules) rules[r.lead.to_string()] = r.rhs.to_string();
    j["rules"] = std::move(rules);
    ordered_json chain = ordered_json::array();
    for (const auto& g : rep.frozen_chain) chain.push_back(g.to_string());
    j["frozen_chain"] = std::move(chain);
    ordered_json rels = ordered_json::array();
    for (const auto& r : rep.relations) rels.push_back(r.to_string());
    j["relations"] = std::move(rels);
    ordered_json atoms = ordered_json::array();
    for (const auto& a : rep.atoms) atoms.push_back(a.to_string());
    j["atoms"] = std::move(atoms);
    ordered_json m = ordered_json::array();
    for (const auto& row : rep.coefficients) {
        ordered_json r = ordered_json::array();
        for (const auto& e : row) r.push_back(e.to_string());
        m.push_back(std::move(r));
    }
    j["coefficients"] = std::move(m);
    if (!rep.relations.empty()) {
        j["rank"] = rep.rank;
        j["verdict"] = verdict_name(rep.verdict);
    }
    return j.dump(2) + "\n";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Dimension reduction and verification of over-determined PDE systems", "overdet"};
    app.require_subcommand(1);
    RunConfig cfg;

    const auto add_format = [&](CLI::App* c) {
        c->add_option("--format", cfg.format, "json, latex or text")->check(CLI::IsMember({"json", "latex", "text"}));
        c->add_option("--out", cfg.out, "write to this file instead of stdout");
    };

    auto* reduce = app.add_subcommand("reduce", "normal form, chain, leading matrix and Cauchy form");
    reduce->add_option("input", cfg.input, "DSL file or catalog:<name>")->required();
    reduce->add_option("--over", cfg.over, "over-determining equation index");
    reduce->add_option("--depth", cfg.depth, "chain depth (default: number of unknowns)");
    reduce->add_option("--seed", cfg.seed, "seed for determinant sampling");
    add_format(reduce);

    auto* verify = app.add_subcommand("verify", "residuals of closed-form fields");
    verify->add_option("input", cfg.input, "DSL file or catalog:<name>")->required();
    verify->add_option("--grid", cfg.grid, "points per primary axis");
    verify->add_option("--mode", cfg.mode, "analytic or fd");
    verify->add_option("--tol", cfg.tol, "pass threshold on the max residual");
    verify->add_option("--at", cfg.at, "parameter and frozen coordinate values");
    verify->add_option("--field", cfg.fields, "NAME=EXPRESSION closed form for a field");
    verify->add_option("--seed", cfg.seed, "accepted for uniform invocation; verification draws no random numbers");
    add_format(verify);

    auto* closure = app.add_subcommand("closure", "fixed-point closure at a frozen point");
    closure->add_option("input", cfg.input, "DSL file or catalog:<name>")->required();
    closure->add_option("--at", cfg.at, "values of every non-time coordinate and parameter")->required();
    closure->add_option("--over", cfg.over, "over-determining equation index");
    closure->add_option("--depth", cfg.depth, "chain depth (default: number of unknowns)");
    closure->add_option("--max-extra", cfg.max_extra, "number of closure relations");
    add_format(closure);

    auto* catalog = app.add_subcommand("catalog", "built-in systems");
    catalog->require_subcommand(1);
    std::string action;
    for (const char* name : {"list", "show", "golden"}) {
        auto* sub = catalog->add_subcommand(name);
        if (std::string(name) != "list") sub->add_option("name", cfg.entry, "entry name")->required();
        add_format(sub);
        sub->callback([&action, name] { action = name; });
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_code::ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::usage;
    }

    try {
        if (reduce->parsed()) return cmd_reduce(cfg, out);
        if (verify->parsed()) return cmd_verify(cfg, out);
        if (closure->parsed()) return cmd_closure(cfg, out);
        return cmd_catalog(cfg, action, out);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::usage;
    } catch (const UnknownEntryError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::usage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::usage;
    } catch (const SingularPointError& e) {
        err << "error: " << e.what() << " (denominator " << e.denominator() << ")\n";
        return exit_code::singular_point;
    } catch (const ReductionError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::normal_form;
    } catch (const NonAffineError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::normal_form;
    } catch (const SingularSystemError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::normal_form;
    } catch (const VerificationError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::verification;
    } catch (const EvaluationError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::verification;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::usage;
    }
}

}  // namespace overdet
