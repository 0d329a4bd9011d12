#include "overdet/poly.hpp"

#include "overdet/errors.hpp"
#include "overdet/normalize.hpp"

#include <algorithm>
#include <set>

namespace overdet {

// ---------------------------------------------------------------------------
// Monomials

int monomial_degree(const Monomial& m)
{
    int d = 0;
    for (const auto& [v, e] : m) d += e;
    return d;
}

bool GrlexLess::operator()(const Monomial& a, const Monomial& b) const
{
    const int da = monomial_degree(a);
    const int db = monomial_degree(b);
    if (da != db) return da < db;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first == b[j].first) {
            if (a[i].second != b[j].second) return a[i].second < b[j].second;
            ++i;
            ++j;
        } else {
            // The monomial holding the earlier variable is larger.
            return a[i].first > b[j].first;
        }
    }
    return i == a.size() && j < b.size();
}

namespace {

Monomial mono_mul(const Monomial& a, const Monomial& b)
{
    Monomial out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
            out.push_back(a[i++]);
        } else if (i == a.size() || b[j].first < a[i].first) {
            out.push_back(b[j++]);
        } else {
            out.emplace_back(a[i].first, a[i].second + b[j].second);
            ++i;
            ++j;
        }
    }
    return out;
}

std::optional<Monomial> mono_div(const Monomial& a, const Monomial& b)
{
    Monomial out;
    std::size_t i = 0;
    for (const auto& [v, e] : b) {
        while (i < a.size() && a[i].first < v) out.push_back(a[i++]);
        if (i == a.size() || a[i].first != v || a[i].second < e) return std::nullopt;
        if (a[i].second > e) out.emplace_back(v, a[i].second - e);
        ++i;
    }
    while (i < a.size()) out.push_back(a[i++]);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Poly

Poly::Poly(const Rational& c)
{
    if (c != 0) terms_.emplace(Monomial{}, c);
}

Poly Poly::variable(int id, int exp)
{
    Poly p;
    p.terms_.emplace(Monomial{{id, exp}}, Rational(1));
    return p;
}

bool Poly::is_constant() const
{
    return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
}

Rational Poly::constant_value() const
{
    if (terms_.empty()) return 0;
    const auto it = terms_.find(Monomial{});
    return it == terms_.end() ? Rational(0) : it->second;
}

const Monomial& Poly::leading_monomial() const { return terms_.rbegin()->first; }
const Rational& Poly::leading_coefficient() const { return terms_.rbegin()->second; }

int Poly::degree_in(int var) const
{
    int d = 0;
    for (const auto& [m, c] : terms_) {
        for (const auto& [v, e] : m) {
            if (v == var) d = std::max(d, e);
        }
    }
    return d;
}

int Poly::total_degree() const { return terms_.empty() ? 0 : monomial_degree(leading_monomial()); }

std::vector<int> Poly::variables() const
{
    std::set<int> vs;
    for (const auto& [m, c] : terms_) {
        for (const auto& [v, e] : m) vs.insert(v);
    }
    return {vs.begin(), vs.end()};
}

std::vector<Poly> Poly::coefficients_in(int var) const
{
    std::vector<Poly> out(static_cast<std::size_t>(degree_in(var)) + 1);
    for (const auto& [m, c] : terms_) {
        Monomial rest;
        int e = 0;
        for (const auto& ve : m) {
            if (ve.first == var) {
                e = ve.second;
            } else {
                rest.push_back(ve);
            }
        }
        out[static_cast<std::size_t>(e)].add_term(rest, c);
    }
    return out;
}

Poly Poly::from_coefficients(const std::vector<Poly>& coeffs, int var)
{
    Poly out;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        if (coeffs[k].is_zero()) continue;
        if (k == 0) {
            out += coeffs[k];
        } else {
            out += coeffs[k] * variable(var, static_cast<int>(k));
        }
    }
    return out;
}

Poly Poly::derivative(int var) const
{
    Poly out;
    for (const auto& [m, c] : terms_) {
        Monomial dm;
        int e = 0;
        for (const auto& ve : m) {
            if (ve.first == var) {
                e = ve.second;
                if (e > 1) dm.emplace_back(var, e - 1);
            } else {
                dm.push_back(ve);
            }
        }
        if (e > 0) out.add_term(dm, c * e);
    }
    return out;
}

Poly Poly::scaled(const Rational& c) const
{
    if (c == 0) return {};
    Poly out = *this;
    for (auto& [m, v] : out.terms_) v *= c;
    return out;
}

Poly Poly::monic() const
{
    if (terms_.empty()) return {};
    return scaled(1 / leading_coefficient());
}

void Poly::add_term(const Monomial& m, const Rational& c)
{
    if (c == 0) return;
    auto [it, inserted] = terms_.emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }
}

Poly& Poly::operator+=(const Poly& o)
{
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
}

Poly& Poly::operator-=(const Poly& o)
{
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
}

Poly operator*(const Poly& a, const Poly& b)
{
    Poly out;
    if (a.is_zero() || b.is_zero()) return out;
    for (const auto& [ma, ca] : a.terms_) {
        for (const auto& [mb, cb] : b.terms_) out.add_term(mono_mul(ma, mb), ca * cb);
    }
    return out;
}

Poly Poly::pow(unsigned k) const
{
    Poly result(Rational(1));
    Poly base = *this;
    while (k > 0) {
        if (k & 1U) result = result * base;
        k >>= 1U;
        if (k > 0) base = base * base;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Division and GCD

std::optional<Poly> divide_exact(const Poly& a, const Poly& b)
{
    if (b.is_zero()) throw SymbolicError("polynomial division by zero");
    if (b.is_constant()) return a.scaled(1 / b.constant_value());
    Poly q;
    Poly r = a;
    const auto& lm_b = b.leading_monomial();
    const auto& lc_b = b.leading_coefficient();
    while (!r.is_zero()) {
        auto m = mono_div(r.leading_monomial(), lm_b);
        if (!m) return std::nullopt;
        Poly t;
        t.add_term(*m, r.leading_coefficient() / lc_b);
        q += t;
        r -= t * b;
    }
    return q;
}

namespace {

Poly exact(const Poly& a, const Poly& b)
{
    auto q = divide_exact(a, b);
    if (!q) throw SymbolicError("internal: inexact polynomial division");
    return *std::move(q);
}

using Upoly = std::vector<Poly>;

int udeg(const Upoly& p)
{
    for (int k = static_cast<int>(p.size()) - 1; k >= 0; --k) {
        if (!p[static_cast<std::size_t>(k)].is_zero()) return k;
    }
    return -1;
}

void trim(Upoly& p) { p.resize(static_cast<std::size_t>(udeg(p) + 1)); }

Upoly prem(Upoly a, const Upoly& b)
{
    const int db = udeg(b);
    const Poly& lcb = b[static_cast<std::size_t>(db)];
    int e = udeg(a) - db + 1;
    while (udeg(a) >= db) {
        const int da = udeg(a);
        const Poly lca = a[static_cast<std::size_t>(da)];
        for (auto& c : a) c = c * lcb;
        for (int k = 0; k <= db; ++k) {
            a[static_cast<std::size_t>(k + da - db)] -= lca * b[static_cast<std::size_t>(k)];
        }
        trim(a);
        --e;
    }
    if (e > 0) {
        const Poly f = lcb.pow(static_cast<unsigned>(e));
        for (auto& c : a) c = c * f;
    }
    return a;
}

Poly content_in(const Poly& p, int var)
{
    Poly g;
    for (const auto& c : p.coefficients_in(var)) {
        if (c.is_zero()) continue;
        g = gcd(g, c);
        if (g.is_constant()) return Poly(Rational(1));
    }
    return g;
}

// Subresultant PRS for primitive inputs in `var`; returns the last nonzero
// remainder (not yet made primitive).
Poly subresultant_gcd(const Poly& a, const Poly& b, int var)
{
    Upoly A = a.coefficients_in(var);
    Upoly B = b.coefficients_in(var);
    if (udeg(A) < udeg(B)) std::swap(A, B);
    Poly g(Rational(1));
    Poly h(Rational(1));
    while (true) {
        const int d = udeg(A) - udeg(B);
        Upoly R = prem(A, B);
        if (udeg(R) < 0) return Poly::from_coefficients(B, var);
        if (udeg(R) == 0) return Poly(Rational(1));
        A = std::move(B);
        const Poly div = g * h.pow(static_cast<unsigned>(d));
        for (auto& c : R) c = exact(c, div);
        B = std::move(R);
        g = A[static_cast<std::size_t>(udeg(A))];
        if (d == 0) {
            // h unchanged
        } else if (d == 1) {
            h = g;
        } else {
            h = exact(g.pow(static_cast<unsigned>(d)), h.pow(static_cast<unsigned>(d - 1)));
        }
    }
}

}  // namespace

Poly gcd(const Poly& a, const Poly& b)
{
    if (a.is_zero()) return b.monic();
    if (b.is_zero()) return a.monic();
    if (a.is_constant() || b.is_constant()) return Poly(Rational(1));
    if (a == b) return a.monic();

    const auto va = a.variables();
    const auto vb = b.variables();
    const int var = std::min(va.front(), vb.front());
    const bool in_a = std::binary_search(va.begin(), va.end(), var);
    const bool in_b = std::binary_search(vb.begin(), vb.end(), var);
    if (!in_a) return gcd(a, content_in(b, var));
    if (!in_b) return gcd(content_in(a, var), b);

    const Poly ca = content_in(a, var);
    const Poly cb = content_in(b, var);
    const Poly c = gcd(ca, cb);
    const Poly pa = exact(a, ca);
    const Poly pb = exact(b, cb);
    Poly g = subresultant_gcd(pa, pb, var);
    if (!g.is_constant()) g = exact(g, content_in(g, var));
    return (c * g).monic();
}

SquareFree square_free(const Poly& p)
{
    SquareFree out;
    if (p.is_zero()) {
        out.unit = 0;
        return out;
    }
    out.unit = p.leading_coefficient();
    if (p.is_constant()) return out;

    std::map<int, Poly> by_multiplicity;
    const auto absorb = [&](const Poly& f, int k) {
        if (f.is_constant()) return;
        auto [it, fresh] = by_multiplicity.emplace(k, f);
        if (!fresh) it->second = it->second * f;
    };

    // Split off the content in the first variable, then run Yun's algorithm
    // on the primitive part.
    std::vector<Poly> pending{p.monic()};
    std::vector<int> mult{1};
    while (!pending.empty()) {
        Poly q = pending.back();
        const int base = mult.back();
        pending.pop_back();
        mult.pop_back();
        if (q.is_constant()) continue;
        const int var = q.variables().front();
        const Poly cont = content_in(q, var);
        if (!cont.is_constant()) {
            pending.push_back(cont.monic());
            mult.push_back(base);
            q = exact(q, cont);
        }
        q = q.monic();
        Poly dq = q.derivative(var);
        Poly a = gcd(q, dq);
        Poly b = exact(q, a);
        Poly c = exact(dq, a);
        Poly d = c - b.derivative(var);
        int i = 1;
        while (!b.is_constant()) {
            a = gcd(b, d);
            absorb(a.monic(), base * i);
            b = exact(b, a);
            c = exact(d, a);
            d = c - b.derivative(var);
            ++i;
        }
    }
    for (auto& [k, f] : by_multiplicity) out.factors.emplace_back(f.monic(), k);
    // Recover the unit so that unit * prod f^k == p.
    Poly prod(Rational(1));
    for (const auto& [f, k] : out.factors) prod = prod * f.pow(static_cast<unsigned>(k));
    out.unit = p.leading_coefficient() / prod.leading_coefficient();
    return out;
}

// ---------------------------------------------------------------------------
// RationalFunction

RationalFunction::RationalFunction(Poly num) : num_(std::move(num)), den_(Rational(1)) {}

RationalFunction::RationalFunction(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den))
{
    if (den_.is_zero()) throw SymbolicError("rational function with zero denominator");
    reduce();
}

void RationalFunction::reduce()
{
    if (num_.is_zero()) {
        den_ = Poly(Rational(1));
        return;
    }
    if (den_.is_constant()) {
        num_ = num_.scaled(1 / den_.constant_value());
        den_ = Poly(Rational(1));
        return;
    }
    const Poly g = gcd(num_, den_);
    if (!g.is_constant()) {
        num_ = exact(num_, g);
        den_ = exact(den_, g);
    }
    const Rational lc = den_.leading_coefficient();
    num_ = num_.scaled(1 / lc);
    den_ = den_.scaled(1 / lc);
    if (den_.is_constant()) den_ = Poly(Rational(1));
}

RationalFunction operator+(const RationalFunction& a, const RationalFunction& b)
{
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.den_ == b.den_) return {a.num_ + b.num_, a.den_};
    if (b.is_polynomial()) return {a.num_ + b.num_ * a.den_, a.den_};
    if (a.is_polynomial()) return {a.num_ * b.den_ + b.num_, b.den_};
    const Poly g = gcd(a.den_, b.den_);
    const Poly ca = exact(b.den_, g);  // multiplier for a
    const Poly cb = exact(a.den_, g);  // multiplier for b
    return {a.num_ * ca + b.num_ * cb, a.den_ * ca};
}

RationalFunction operator-(const RationalFunction& a)
{
    RationalFunction out = a;
    out.num_ = -a.num_;
    return out;
}

RationalFunction operator-(const RationalFunction& a, const RationalFunction& b) { return a + (-b); }

RationalFunction operator*(const RationalFunction& a, const RationalFunction& b)
{
    if (a.is_zero() || b.is_zero()) return {};
    if (a.is_polynomial() && b.is_polynomial()) return RationalFunction(a.num_ * b.num_);
    Poly an = a.num_;
    Poly bn = b.num_;
    Poly ad = a.den_;
    Poly bd = b.den_;
    if (!bd.is_constant()) {
        const Poly g = gcd(an, bd);
        if (!g.is_constant()) {
            an = exact(an, g);
            bd = exact(bd, g);
        }
    }
    if (!ad.is_constant()) {
        const Poly g = gcd(bn, ad);
        if (!g.is_constant()) {
            bn = exact(bn, g);
            ad = exact(ad, g);
        }
    }
    RationalFunction out;
    out.num_ = an * bn;
    out.den_ = ad * bd;
    const Rational lc = out.den_.leading_coefficient();
    out.num_ = out.num_.scaled(1 / lc);
    out.den_ = out.den_.scaled(1 / lc);
    return out;
}

RationalFunction operator/(const RationalFunction& a, const RationalFunction& b)
{
    if (b.is_zero()) throw SymbolicError("division by an expression that normalizes to zero");
    return a * RationalFunction(b.den_, b.num_);
}

RationalFunction RationalFunction::pow(int k) const
{
    if (k < 0) {
        if (is_zero()) throw SymbolicError("zero raised to a negative power");
        return RationalFunction(den_.pow(static_cast<unsigned>(-k)), num_.pow(static_cast<unsigned>(-k)));
    }
    RationalFunction out;
    out.num_ = num_.pow(static_cast<unsigned>(k));
    out.den_ = den_.pow(static_cast<unsigned>(k));
    return out;
}

// ---------------------------------------------------------------------------
// Variable order and conversion

namespace {

int variable_rank(ExprKind k)
{
    switch (k) {
        case ExprKind::Derivative: return 0;
        case ExprKind::Function: return 1;
        case ExprKind::Parameter: return 2;
        case ExprKind::Coordinate: return 3;
        default: return 4;
    }
}

}  // namespace

bool variable_less(const Expression& a, const Expression& b)
{
    const int ra = variable_rank(a.kind());
    const int rb = variable_rank(b.kind());
    if (ra != rb) return ra < rb;
    switch (a.kind()) {
        case ExprKind::Derivative: {
            const auto& da = a.derivative();
            const auto& db = b.derivative();
            if (da.field != db.field) return da.field < db.field;
            if (da.index.total() != db.index.total()) return da.index.total() > db.index.total();
            return db.index < da.index;
        }
        case ExprKind::Parameter:
        case ExprKind::Coordinate: return a.name() < b.name();
        default: return compare(a, b) < 0;
    }
}

VarTable::VarTable(const std::vector<Expression>& roots)
{
    std::vector<Expression> found;
    for (const auto& r : roots) gather(r, found);
    std::sort(found.begin(), found.end(), variable_less);
    found.erase(std::unique(found.begin(), found.end()), found.end());
    for (const auto& v : found) intern(v);
}

Expression VarTable::canonical_leaf(const Expression& e)
{
    if (e.kind() != ExprKind::Function) return e;
    const auto it = functions_.find(e.node());
    if (it != functions_.end()) return it->second;
    Expression f = Expression::apply(e.func(), normalize(e.children().front()));
    keep_alive_.push_back(e);
    functions_.emplace(e.node(), f);
    return f;
}

void VarTable::gather(const Expression& e, std::vector<Expression>& out)
{
    std::set<const Node*> seen;
    std::vector<Expression> stack{e};
    while (!stack.empty()) {
        Expression n = stack.back();
        stack.pop_back();
        if (!seen.insert(n.node()).second) continue;
        switch (n.kind()) {
            case ExprKind::Constant: break;
            case ExprKind::Coordinate:
            case ExprKind::Parameter:
            case ExprKind::Derivative: out.push_back(n); break;
            case ExprKind::Function: {
                Expression f = canonical_leaf(n);
                // Normalization may fold the application to a constant.
                if (f.kind() == ExprKind::Function) {
                    out.push_back(f);
                } else {
                    stack.push_back(f);
                }
                break;
            }
            default:
                for (const auto& c : n.children()) stack.push_back(c);
        }
    }
}

int VarTable::intern(const Expression& var)
{
    auto [it, fresh] = ids_.emplace(var, static_cast<int>(vars_.size()));
    if (fresh) vars_.push_back(var);
    return it->second;
}

std::optional<int> VarTable::id_of(const Expression& var) const
{
    const auto it = ids_.find(var);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

RationalFunction VarTable::convert(const Expression& e)
{
    if (const auto it = memo_.find(e.node()); it != memo_.end()) return it->second;
    RationalFunction out;
    switch (e.kind()) {
        case ExprKind::Constant: out = RationalFunction(Poly(e.value())); break;
        case ExprKind::Coordinate:
        case ExprKind::Parameter:
        case ExprKind::Derivative: out = RationalFunction(Poly::variable(intern(e))); break;
        case ExprKind::Function: {
            Expression f = canonical_leaf(e);
            out = f.kind() == ExprKind::Function ? RationalFunction(Poly::variable(intern(f))) : convert(f);
            break;
        }
        case ExprKind::Power: out = convert(e.children().front()).pow(e.exponent()); break;
        case ExprKind::Product: {
            out = RationalFunction(Poly(Rational(1)));
            for (const auto& c : e.children()) out = out * convert(c);
            break;
        }
        case ExprKind::Quotient: out = convert(e.children()[0]) / convert(e.children()[1]); break;
        case ExprKind::Sum: {
            // Group polynomial terms first so denominators are combined once.
            Poly poly;
            RationalFunction rest;
            for (const auto& c : e.children()) {
                RationalFunction t = convert(c);
                if (t.is_polynomial()) {
                    poly += t.num();
                } else {
                    rest = rest + t;
                }
            }
            out = rest + RationalFunction(poly);
            break;
        }
    }
    keep_alive_.push_back(e);
    memo_.emplace(e.node(), out);
    return out;
}

Expression VarTable::to_expression(const Poly& p) const
{
    std::vector<Expression> terms;
    terms.reserve(p.terms().size());
    for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
        const auto& [m, c] = *it;
        std::vector<Expression> factors;
        if (c != 1 || m.empty()) factors.push_back(Expression::constant(c));
        for (const auto& [v, k] : m) {
            const Expression& base = vars_[static_cast<std::size_t>(v)];
            factors.push_back(k == 1 ? base : RawBuilder::power(base, k));
        }
        terms.push_back(factors.size() == 1 ? factors.front() : RawBuilder::product(std::move(factors)));
    }
    if (terms.empty()) return Expression();
    if (terms.size() == 1) return terms.front();
    return RawBuilder::sum(std::move(terms));
}

Expression VarTable::to_expression(const RationalFunction& f) const
{
    if (f.is_polynomial()) return to_expression(f.num());
    // Clear denominators so both sides have coprime integer coefficients.
    mpz_class l = 1;
    for (const auto* p : {&f.num(), &f.den()}) {
        for (const auto& [m, c] : p->terms()) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), c.get_den_mpz_t());
    }
    Poly num = f.num().scaled(Rational(l));
    Poly den = f.den().scaled(Rational(l));
    mpz_class g = 0;
    for (const auto* p : {&num, &den}) {
        for (const auto& [m, c] : p->terms()) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.get_num_mpz_t());
    }
    if (den.leading_coefficient() < 0) g = -g;
    num = num.scaled(Rational(1, 1) / Rational(g));
    den = den.scaled(Rational(1, 1) / Rational(g));
    return RawBuilder::quotient(to_expression(num), to_expression(den));
}

}  // namespace overdet
