#include "overdet/reduction.hpp"

#include "overdet/calculus.hpp"
#include "overdet/errors.hpp"
#include "overdet/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace overdet {

namespace {

bool matches(const DerivativeAtom& a, const DerivativeAtom& lead)
{
    if (a.field != lead.field) return false;
    for (const auto& [c, k] : lead.index.entries()) {
        if (a.index.order(c) < k) return false;
    }
    return true;
}

Expression derive_by(const Expression& e, const MultiIndex& by, const Dependencies& deps)
{
    Expression out = e;
    for (const auto& [c, k] : by.entries()) {
        for (int i = 0; i < k; ++i) out = differentiate(out, c, deps);
    }
    return out;
}

MultiIndex index_minus(const MultiIndex& a, const MultiIndex& b)
{
    std::vector<MultiIndex::Entry> out;
    for (const auto& [c, k] : a.entries()) out.emplace_back(c, k - b.order(c));
    return MultiIndex(std::move(out));
}

DerivativeAtom time_atom(const std::string& field, const std::string& time, int k)
{
    if (k == 0) return DerivativeAtom{field, {}};
    return DerivativeAtom{field, MultiIndex({{time, k}})};
}

void check_pure(const PdeSystem& sys, const Expression& e, const char* what)
{
    for (const auto& a : collect_atoms(e)) {
        if (is_normal_atom(sys, a)) {
            throw ReductionError(std::string(what) + " still contains the normal derivative " + a.to_string());
        }
    }
}

}  // namespace

Expression apply_rules(const Expression& e, const std::vector<Rule>& rules, const Dependencies& deps)
{
    constexpr int kMaxRounds = 64;
    Expression cur = normalize(e);
    std::map<DerivativeAtom, Expression> cache;
    for (int round = 0; round < kMaxRounds; ++round) {
        std::map<DerivativeAtom, Expression> repl;
        for (const auto& a : collect_atoms(cur)) {
            if (auto it = cache.find(a); it != cache.end()) {
                repl.emplace(a, it->second);
                continue;
            }
            for (const auto& r : rules) {
                if (!matches(a, r.lead)) continue;
                Expression d = derive_by(r.rhs, index_minus(a.index, r.lead.index), deps);
                cache.emplace(a, d);
                repl.emplace(a, std::move(d));
                break;
            }
        }
        if (repl.empty()) return cur;
        cur = normalize(replace_atoms(cur, repl));
    }
    throw ReductionError("rule application did not settle after " + std::to_string(kMaxRounds) + " rounds");
}

std::vector<Rule> normal_rules(const NormalForm& nf)
{
    std::vector<Rule> out;
    for (const auto& t : nf.targets) out.push_back({t, nf.rhs.at(t)});
    return out;
}

// ---------------------------------------------------------------------------
// Chain

Expression eliminate_normal(const PdeSystem& sys, const NormalForm& nf, int over_index)
{
    if (over_index < 0 || over_index >= static_cast<int>(sys.over.size())) {
        throw ReductionError("over-determining equation index " + std::to_string(over_index) + " out of range (" +
                             std::to_string(sys.over.size()) + " available)");
    }
    const Expression g = sys.expand(sys.over[static_cast<std::size_t>(over_index)].expr);
    Expression g1 = apply_rules(g, normal_rules(nf), sys.dependencies());
    check_pure(sys, g1, "G^(1)");
    return g1;
}

ReductionChain extend_chain(const PdeSystem& sys, const NormalForm& nf, ReductionChain chain)
{
    if (chain.links.empty()) throw ReductionError("cannot extend an empty chain");
    const auto deps = sys.dependencies();
    const Expression d = differentiate(chain.links.back(), sys.frame.normal, deps);
    Expression next = apply_rules(d, normal_rules(nf), deps);
    check_pure(sys, next, "chain link");
    chain.links.push_back(std::move(next));
    return chain;
}

ReductionChain build_chain(const PdeSystem& sys, const NormalForm& nf, int over_index, int depth)
{
    if (depth <= 0) depth = static_cast<int>(sys.unknowns().size());
    ReductionChain chain;
    chain.over_index = over_index;
    chain.links.push_back(eliminate_normal(sys, nf, over_index));
    while (static_cast<int>(chain.links.size()) < depth) chain = extend_chain(sys, nf, std::move(chain));
    return chain;
}

std::vector<DerivativeAtom> highest_time_atoms(const PdeSystem& sys, int p)
{
    std::vector<DerivativeAtom> out;
    for (const auto& u : sys.unknowns()) out.push_back(time_atom(u, sys.frame.time, p));
    return out;
}

std::vector<Expression> time_differentiated_system(const PdeSystem& sys, const ReductionChain& chain)
{
    const auto deps = sys.dependencies();
    const int p = static_cast<int>(chain.links.size());
    std::vector<Expression> out;
    for (int l = 0; l < p; ++l) {
        Expression e = chain.links[static_cast<std::size_t>(l)];
        for (int k = 0; k < p - 1 - l; ++k) e = differentiate(e, sys.frame.time, deps);
        out.push_back(normalize(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Leading matrix

LeadingMatrix leading_matrix(const PdeSystem& sys, const NormalForm& nf, const ReductionChain& chain)
{
    const auto unknowns = sys.unknowns();
    const std::size_t p = chain.links.size();
    if (p != unknowns.size()) {
        throw ReductionError("leading matrix needs a chain of depth " + std::to_string(unknowns.size()) + ", got " +
                             std::to_string(p));
    }
    LeadingMatrix m;
    m.unknowns = unknowns;

    const auto rows = time_differentiated_system(sys, chain);
    const auto top = highest_time_atoms(sys, static_cast<int>(p));
    for (const auto& r : rows) m.entries.push_back(affine_decompose(r, top).coefficients);

    std::vector<DerivativeAtom> a;
    for (const auto& u : unknowns) a.push_back(time_atom(u, sys.frame.time, 1));
    std::vector<Expression> row;
    for (const auto& av : a) row.push_back(normalize(partial(chain.links.front(), av)));
    Matrix jac(p);
    for (std::size_t v = 0; v < p; ++v) {
        const Expression& f = nf.rhs.at(nf.targets[v]);
        for (std::size_t w = 0; w < p; ++w) jac[v].push_back(normalize(partial(f, a[w])));
    }
    for (std::size_t j = 0; j < p; ++j) {
        m.product_formula.push_back(row);
        std::vector<Expression> next;
        for (std::size_t w = 0; w < p; ++w) {
            std::vector<Expression> terms;
            for (std::size_t v = 0; v < p; ++v) terms.push_back(row[v] * jac[v][w]);
            next.push_back(normalize(Expression::sum(std::move(terms))));
        }
        row = std::move(next);
    }

    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < p; ++i) {
            if (!equivalent(m.entries[j][i], m.product_formula[j][i])) {
                throw ReductionError("leading matrix entry (" + std::to_string(j + 1) + "," + std::to_string(i + 1) +
                                     ") disagrees: coefficient " + m.entries[j][i].to_string() +
                                     " vs product formula " + m.product_formula[j][i].to_string());
            }
        }
    }
    m.determinant = normalize(determinant(m.entries));
    return m;
}

// ---------------------------------------------------------------------------
// Solvability

namespace {

std::string snap_rational(double v)
{
    for (long q = 1; q <= 64; ++q) {
        const double p = std::round(v * static_cast<double>(q));
        if (std::abs(p / static_cast<double>(q) - v) < 1e-6) {
            Rational r(static_cast<long>(p), q);
            r.canonicalize();
            return r.get_str();
        }
    }
    return {};
}

}  // namespace

SolvabilityReport check_solvability(const LeadingMatrix& m, const SamplingBox& box)
{
    SolvabilityReport rep;
    rep.determinant = normalize(m.determinant);
    rep.determinant_zero = rep.determinant.is_zero();
    rep.factored = factored_string(rep.determinant);
    if (rep.determinant_zero) return rep;

    // Variables: symbols by name, atoms by their DSL spelling.
    std::vector<std::string> names = collect_symbols(rep.determinant);
    const auto atoms = collect_atoms(rep.determinant);
    if (names.empty() && atoms.empty()) return rep;

    // Treat every variable as a coordinate so that differentiate() applies.
    std::map<std::string, Expression> as_coord;
    for (const auto& n : names) as_coord.emplace(n, Expression::coordinate(n));
    std::map<DerivativeAtom, Expression> atom_coord;
    for (const auto& a : atoms) {
        const std::string n = "__" + a.to_string();
        atom_coord.emplace(a, Expression::coordinate(n));
        names.push_back(n);
    }
    const Expression f = replace_atoms(substitute_symbols(rep.determinant, as_coord), atom_coord);
    Dependencies none;
    std::vector<Expression> outputs{f};
    for (const auto& n : names) outputs.push_back(differentiate(f, n, none));
    CompiledExpr prog(outputs);
    std::vector<int> slot;
    for (const auto& n : names) slot.push_back(prog.slot_of(n));

    std::mt19937_64 rng(box.seed);
    std::uniform_real_distribution<double> uni(box.lo, box.hi);
    std::vector<std::pair<double, std::vector<double>>> samples;
    std::vector<double> in(prog.inputs().size());
    std::vector<double> out;
    for (int s = 0; s < box.samples; ++s) {
        std::vector<double> pt(names.size());
        for (auto& v : pt) v = uni(rng);
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (slot[i] >= 0) in[static_cast<std::size_t>(slot[i])] = pt[i];
        }
        prog.run(in, out);
        if (std::isfinite(out[0])) samples.emplace_back(std::abs(out[0]), std::move(pt));
    }
    std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    std::set<std::vector<long>> seen;
    const std::size_t candidates = std::min<std::size_t>(samples.size(), 8);
    for (std::size_t c = 0; c < candidates; ++c) {
        std::vector<double> pt = samples[c].second;
        double val = 0;
        for (int it = 0; it < 200; ++it) {
            for (std::size_t i = 0; i < names.size(); ++i) {
                if (slot[i] >= 0) in[static_cast<std::size_t>(slot[i])] = pt[i];
            }
            prog.run(in, out);
            val = out[0];
            if (!std::isfinite(val) || std::abs(val) < 1e-14) break;
            double g2 = 0;
            for (std::size_t i = 0; i < names.size(); ++i) g2 += out[i + 1] * out[i + 1];
            if (g2 == 0) break;
            for (std::size_t i = 0; i < names.size(); ++i) pt[i] -= val * out[i + 1] / g2;
        }
        if (!std::isfinite(val) || std::abs(val) > 1e-10) continue;
        bool inside = true;
        for (double v : pt) inside = inside && v >= box.lo - 1e-9 && v <= box.hi + 1e-9;
        if (!inside) continue;
        std::vector<long> key;
        for (double v : pt) key.push_back(std::lround(v * 1e5));
        if (!seen.insert(key).second) continue;

        VanishingHint h;
        std::map<std::string, Expression> exact_sym;
        std::map<DerivativeAtom, Expression> exact_atom;
        bool all_exact = true;
        std::size_t i = 0;
        for (const auto& n : collect_symbols(rep.determinant)) {
            h.point[n] = pt[i];
            const auto r = snap_rational(pt[i]);
            if (r.empty()) {
                all_exact = false;
            } else {
                exact_sym.emplace(n, Expression::constant(Rational(r)));
            }
            ++i;
        }
        for (const auto& a : atoms) {
            h.point[a.to_string()] = pt[i];
            const auto r = snap_rational(pt[i]);
            if (r.empty()) {
                all_exact = false;
            } else {
                exact_atom.emplace(a, Expression::constant(Rational(r)));
            }
            ++i;
        }
        if (all_exact &&
            normalize(replace_atoms(substitute_symbols(rep.determinant, exact_sym), exact_atom)).is_zero()) {
            for (const auto& [n, v] : exact_sym) h.exact[n] = v.to_string();
            for (const auto& [a, v] : exact_atom) h.exact[a.to_string()] = v.to_string();
            for (const auto& [n, v] : exact_sym) h.point[n] = v.value().get_d();
            for (const auto& [a, v] : exact_atom) h.point[a.to_string()] = v.value().get_d();
        }
        rep.hints.push_back(std::move(h));
    }
    std::sort(rep.hints.begin(), rep.hints.end(),
              [](const VanishingHint& a, const VanishingHint& b) { return a.point < b.point; });
    return rep;
}

// ---------------------------------------------------------------------------
// Cauchy form

CauchyForm cauchy_form(const PdeSystem& sys, const ReductionChain& chain)
{
    const auto rows = time_differentiated_system(sys, chain);
    CauchyForm cf;
    cf.targets = highest_time_atoms(sys, static_cast<int>(chain.links.size()));
    auto sol = solve_linear_symbolic(rows, cf.targets);
    cf.rhs = std::move(sol.values);
    return cf;
}

std::vector<Rule> cauchy_rules(const NormalForm& nf, const CauchyForm& cf)
{
    auto rules = normal_rules(nf);
    for (const auto& t : cf.targets) rules.push_back({t, cf.rhs.at(t)});
    return rules;
}

FurtherReduction probe_further_reduction(const PdeSystem& sys, const NormalForm& nf, const ReductionChain& chain,
                                         const CauchyForm& cf)
{
    const ReductionChain longer = extend_chain(sys, nf, chain);
    FurtherReduction out;
    out.residual = apply_rules(longer.links.back(), cauchy_rules(nf, cf), sys.dependencies());
    out.stalls = out.residual.is_zero();
    return out;
}

// ---------------------------------------------------------------------------
// Fixed-point closure

std::string verdict_name(ClosureVerdict v)
{
    switch (v) {
        case ClosureVerdict::None: return "none";
        case ClosureVerdict::TrivialOnly: return "trivial-only";
        case ClosureVerdict::NontrivialPossible: return "nontrivial-possible";
    }
    return "?";
}

namespace {

int field_rank(const PdeSystem& sys, const std::string& field)
{
    for (std::size_t i = 0; i < sys.fields.size(); ++i) {
        if (sys.fields[i].name == field) return static_cast<int>(i);
    }
    return static_cast<int>(sys.fields.size());
}

// Higher time order first, then field declaration order, then index.
bool closure_atom_less(const PdeSystem& sys, const DerivativeAtom& a, const DerivativeAtom& b)
{
    const int ta = a.index.order(sys.frame.time);
    const int tb = b.index.order(sys.frame.time);
    if (ta != tb) return ta > tb;
    const int fa = field_rank(sys, a.field);
    const int fb = field_rank(sys, b.field);
    if (fa != fb) return fa < fb;
    return b.index < a.index;
}

std::vector<DerivativeAtom> unknown_atoms(const PdeSystem& sys, const Expression& e)
{
    std::vector<DerivativeAtom> out;
    for (const auto& a : collect_atoms(e)) {
        const auto* f = sys.field(a.field);
        if (f && f->role == FieldRole::Unknown) out.push_back(a);
    }
    std::sort(out.begin(), out.end(),
              [&](const DerivativeAtom& a, const DerivativeAtom& b) { return closure_atom_less(sys, a, b); });
    return out;
}

double value_at(const Expression& e, const std::map<std::string, Rational>& point)
{
    std::map<std::string, Expression> sub;
    for (const auto& [k, v] : point) sub.emplace(k, Expression::constant(v));
    const Expression frozen = normalize(substitute_symbols(e, sub));
    if (frozen.is_constant()) return frozen.value().get_d();
    return std::numeric_limits<double>::quiet_NaN();
}

Expression freeze(const Expression& e, const std::map<std::string, Expression>& sub)
{
    return normalize(substitute_symbols(e, sub));
}

void check_nonsingular(const Expression& e, const std::map<std::string, Rational>& point, const std::string& what)
{
    const auto nd = numerator_denominator(e);
    if (nd.denominator.is_constant()) return;
    const double d = value_at(nd.denominator, point);
    if (d == 0) {
        const std::string den = factored_string(nd.denominator);
        throw SingularPointError("denominator " + den + " of " + what + " vanishes at the chosen point", den);
    }
}

}  // namespace

ClosureReport fixed_point_closure(const PdeSystem& sys, const NormalForm& nf, const ReductionChain& chain,
                                  const std::map<std::string, Rational>& point, int max_extra)
{
    for (const auto& c : sys.frame.coords) {
        if (c != sys.frame.time && !point.count(c)) throw ReductionError("closure point does not bind '" + c + "'");
    }
    for (const auto& prm : sys.params) {
        if (!point.count(prm)) throw ReductionError("closure point does not bind parameter '" + prm + "'");
    }
    if (point.count(sys.frame.time)) throw ReductionError("closure point must not bind the time coordinate");

    const auto deps = sys.dependencies();
    ClosureReport rep;
    rep.point = point;
    std::map<std::string, Expression> sub;
    for (const auto& [k, v] : point) sub.emplace(k, Expression::constant(v));

    std::vector<Rule> rules;
    for (std::size_t l = 0; l < chain.links.size(); ++l) {
        const Expression r = apply_rules(chain.links[l], rules, deps);
        const auto atoms = unknown_atoms(sys, r);
        if (atoms.empty()) {
            throw ReductionError("chain link " + std::to_string(l + 1) + " has no unknown left to solve for");
        }
        const DerivativeAtom lead = atoms.front();
        const auto form = affine_decompose(r, {lead});
        const Expression& pivot = form.coefficients.front();
        const std::string label = "the rule for " + lead.to_string();
        check_nonsingular(pivot, point, label);
        if (value_at(pivot, point) == 0) {
            const std::string f = factored_string(pivot);
            throw SingularPointError("pivot " + f + " of " + label + " vanishes at the chosen point", f);
        }
        const Expression rhs = normalize(-form.rest / pivot);
        check_nonsingular(rhs, point, label);
        rules.push_back({lead, rhs});
    }
    std::vector<Rule> frozen_rules;
    for (const auto& r : rules) frozen_rules.push_back({r.lead, freeze(r.rhs, sub)});
    rep.rules = frozen_rules;
    for (const auto& g : chain.links) rep.frozen_chain.push_back(freeze(g, sub));
    if (max_extra <= 0) return rep;

    const ReductionChain longer = extend_chain(sys, nf, chain);
    const Expression r1 = apply_rules(longer.links.back(), rules, deps);
    check_nonsingular(r1, point, "the first closure relation");
    rep.relations.push_back(freeze(r1, sub));
    while (static_cast<int>(rep.relations.size()) < max_extra) {
        const Expression d = differentiate(rep.relations.back(), sys.frame.time, deps);
        rep.relations.push_back(apply_rules(d, frozen_rules, deps));
    }

    std::set<DerivativeAtom> all;
    for (const auto& r : rep.relations) {
        for (const auto& a : unknown_atoms(sys, r)) all.insert(a);
    }
    rep.atoms.assign(all.begin(), all.end());
    std::sort(rep.atoms.begin(), rep.atoms.end(),
              [&](const DerivativeAtom& a, const DerivativeAtom& b) { return closure_atom_less(sys, a, b); });

    bool homogeneous = true;
    for (const auto& r : rep.relations) {
        auto form = affine_decompose(r, rep.atoms);
        rep.coefficients.push_back(std::move(form.coefficients));
        homogeneous = homogeneous && form.rest.is_zero();
        rep.constants.push_back(form.rest);
    }
    rep.rank = rep.atoms.empty() ? 0 : rational_rank(rep.coefficients);
    // Trivial-only needs every unknown value among the determined atoms.
    bool covers = true;
    for (const auto& u : sys.unknowns()) {
        covers = covers && std::find(rep.atoms.begin(), rep.atoms.end(), DerivativeAtom{u, {}}) != rep.atoms.end();
    }
    rep.verdict = homogeneous && covers && rep.rank == static_cast<int>(rep.atoms.size())
                      ? ClosureVerdict::TrivialOnly
                      : ClosureVerdict::NontrivialPossible;
    return rep;
}

// ---------------------------------------------------------------------------
// Moving surface

Expression surface_speed(const PdeSystem& sys, const Expression& F)
{
    Dependencies deps;
    const Expression ft = normalize(differentiate(F, sys.frame.time, deps));
    if (ft.is_zero()) return {};
    std::vector<Expression> squares;
    for (const auto& c : sys.frame.coords) {
        if (c == sys.frame.time) continue;
        const Expression d = differentiate(F, c, deps);
        squares.push_back(Expression::power(d, 2));
    }
    const Expression grad2 = normalize(Expression::sum(std::move(squares)));
    if (grad2.is_zero()) throw SymbolicError("surface function has a vanishing gradient");
    const Expression inv_norm = Expression::apply(
        Func::Exp, Expression::product({Expression::constant(Rational(-1, 2)), Expression::apply(Func::Ln, grad2)}));
    return ft * inv_norm;
}

SurfaceRelation raw_surface_relation(const PdeSystem& sys, const std::string& field, int j, const Expression& speed)
{
    const auto& t = sys.frame.time;
    const auto& n = sys.frame.normal;
    SurfaceRelation rel;
    rel.quantity = time_atom(field, t, j - 1);
    const Expression dj = Expression::atom(time_atom(field, t, j));
    const Expression mixed = Expression::atom(DerivativeAtom{field, rel.quantity.index.raised(n)});
    rel.rate = dj - speed * mixed;
    return rel;
}

MovingSurfaceSystem moving_surface_system(const PdeSystem& sys, const NormalForm& nf, const ReductionChain& chain,
                                          const Expression& F)
{
    const auto deps = sys.dependencies();
    const auto rules = normal_rules(nf);
    const int p = static_cast<int>(chain.links.size());
    MovingSurfaceSystem out;
    out.speed = surface_speed(sys, F);
    for (const auto& u : sys.unknowns()) {
        for (int j = 1; j <= p; ++j) {
            SurfaceRelation rel = raw_surface_relation(sys, u, j, out.speed);
            rel.rate = apply_rules(rel.rate, rules, deps);
            out.transport.push_back(std::move(rel));
        }
    }
    out.chain = chain.links;
    for (int j = 0; j <= p; ++j) {
        for (const auto& u : sys.unknowns()) out.unknowns.push_back(time_atom(u, sys.frame.time, j));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Full pipeline

ReductionResult reduce_system(const PdeSystem& sys, int over_index, int depth, const SamplingBox& box)
{
    ReductionResult r;
    r.system = sys.name;
    r.over_index = over_index;
    r.counts = count_balance(sys);
    const NormalForm nf = solve_normal_form(sys);
    for (const auto& t : nf.targets) r.normal_form.push_back(t.to_string() + " = " + nf.rhs.at(t).to_string());
    r.chain = build_chain(sys, nf, over_index, depth);
    r.matrix = leading_matrix(sys, nf, r.chain);
    r.solvability = check_solvability(r.matrix, box);
    if (r.solvability.determinant_zero) {
        r.notes.push_back("leading determinant vanishes identically; no Cauchy form");
        return r;
    }
    r.cauchy = cauchy_form(sys, r.chain);
    r.further = probe_further_reduction(sys, nf, r.chain, *r.cauchy);
    if (r.further->stalls) {
        r.notes.push_back("no further reduction: the next chain link vanishes modulo the Cauchy form");
    }
    return r;
}

}  // namespace overdet
