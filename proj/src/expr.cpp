#include "overdet/expr.hpp"

#include "overdet/errors.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <unordered_set>

namespace overdet {

// ---------------------------------------------------------------------------
// MultiIndex / DerivativeAtom

MultiIndex::MultiIndex(std::vector<Entry> orders)
{
    std::sort(orders.begin(), orders.end(),
              [](const Entry& a, const Entry& b) { return a.first < b.first; });
    for (auto& [coord, k] : orders) {
        if (k < 0) throw SymbolicError("negative derivative order for " + coord);
        if (!entries_.empty() && entries_.back().first == coord) {
            entries_.back().second += k;
        } else {
            entries_.emplace_back(std::move(coord), k);
        }
    }
    std::erase_if(entries_, [](const Entry& e) { return e.second == 0; });
}

int MultiIndex::order(std::string_view coord) const
{
    for (const auto& [c, k] : entries_) {
        if (c == coord) return k;
    }
    return 0;
}

int MultiIndex::total() const
{
    int n = 0;
    for (const auto& e : entries_) n += e.second;
    return n;
}

MultiIndex MultiIndex::raised(std::string_view coord, int by) const
{
    return with_order(coord, order(coord) + by);
}

MultiIndex MultiIndex::with_order(std::string_view coord, int k) const
{
    auto entries = entries_;
    bool found = false;
    for (auto& e : entries) {
        if (e.first == coord) {
            e.second = k;
            found = true;
        }
    }
    if (!found) entries.emplace_back(std::string(coord), k);
    return MultiIndex(std::move(entries));
}

MultiIndex MultiIndex::without(std::string_view coord) const { return with_order(coord, 0); }

std::string DerivativeAtom::to_string() const
{
    std::string out;
    int parens = 0;
    for (const auto& [coord, k] : index.entries()) {
        for (int i = 0; i < k; ++i) {
            out += "d" + coord + "(";
            ++parens;
        }
    }
    out += field;
    out.append(static_cast<std::size_t>(parens), ')');
    return out;
}

std::string_view func_name(Func f)
{
    switch (f) {
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Exp: return "exp";
        case Func::Ln: return "ln";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Hashing

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t mix(std::uint64_t h, std::uint64_t v)
{
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h * kFnvPrime;
}

std::uint64_t hash_string(std::uint64_t h, std::string_view s)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return mix(h, s.size());
}

std::uint64_t hash_mpz(std::uint64_t h, const mpz_class& z)
{
    const auto n = mpz_size(z.get_mpz_t());
    h = mix(h, static_cast<std::uint64_t>(mpz_sgn(z.get_mpz_t()) + 2));
    for (std::size_t i = 0; i < n; ++i) {
        h = mix(h, static_cast<std::uint64_t>(mpz_getlimbn(z.get_mpz_t(), static_cast<mp_size_t>(i))));
    }
    return h;
}

void finish_hash(Node& n)
{
    std::uint64_t h = mix(kFnvOffset, static_cast<std::uint64_t>(n.kind));
    switch (n.kind) {
        case ExprKind::Constant:
            h = hash_mpz(h, n.value.get_num());
            h = hash_mpz(h, n.value.get_den());
            break;
        case ExprKind::Coordinate:
        case ExprKind::Parameter: h = hash_string(h, n.name); break;
        case ExprKind::Derivative:
            h = hash_string(h, n.atom.field);
            for (const auto& [c, k] : n.atom.index.entries()) {
                h = hash_string(h, c);
                h = mix(h, static_cast<std::uint64_t>(k));
            }
            break;
        case ExprKind::Function: h = mix(h, static_cast<std::uint64_t>(n.func)); break;
        case ExprKind::Power:
            h = mix(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(n.exponent)));
            break;
        default: break;
    }
    for (const auto& c : n.children) h = mix(h, c.hash());
    n.hash = static_cast<std::size_t>(h);
}

const Expression& zero_expr()
{
    static const Expression z = Expression::constant(Rational(0));
    return z;
}

Rational rational_pow(const Rational& base, int k)
{
    const unsigned long e = static_cast<unsigned long>(k < 0 ? -k : k);
    mpz_class num;
    mpz_class den;
    mpz_pow_ui(num.get_mpz_t(), base.get_num_mpz_t(), e);
    mpz_pow_ui(den.get_mpz_t(), base.get_den_mpz_t(), e);
    Rational r = k < 0 ? Rational(den, num) : Rational(num, den);
    r.canonicalize();
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Raw construction

Expression RawBuilder::make(Node n)
{
    finish_hash(n);
    return Expression(std::make_shared<const Node>(std::move(n)));
}

Expression RawBuilder::sum(std::vector<Expression> terms)
{
    Node n;
    n.kind = ExprKind::Sum;
    n.children = std::move(terms);
    return make(std::move(n));
}

Expression RawBuilder::product(std::vector<Expression> factors)
{
    Node n;
    n.kind = ExprKind::Product;
    n.children = std::move(factors);
    return make(std::move(n));
}

Expression RawBuilder::quotient(Expression num, Expression den)
{
    Node n;
    n.kind = ExprKind::Quotient;
    n.children = {std::move(num), std::move(den)};
    return make(std::move(n));
}

Expression RawBuilder::power(Expression base, int exponent)
{
    Node n;
    n.kind = ExprKind::Power;
    n.exponent = exponent;
    n.children = {std::move(base)};
    return make(std::move(n));
}

// ---------------------------------------------------------------------------
// Factories

Expression::Expression() : Expression(zero_expr()) {}

Expression Expression::constant(const Rational& value)
{
    Node n;
    n.kind = ExprKind::Constant;
    n.value = value;
    n.value.canonicalize();
    return RawBuilder::make(std::move(n));
}

Expression Expression::integer(long value) { return constant(Rational(value)); }

Expression Expression::coordinate(std::string name)
{
    Node n;
    n.kind = ExprKind::Coordinate;
    n.name = std::move(name);
    return RawBuilder::make(std::move(n));
}

Expression Expression::parameter(std::string name)
{
    Node n;
    n.kind = ExprKind::Parameter;
    n.name = std::move(name);
    return RawBuilder::make(std::move(n));
}

Expression Expression::atom(DerivativeAtom atom)
{
    Node n;
    n.kind = ExprKind::Derivative;
    n.atom = std::move(atom);
    return RawBuilder::make(std::move(n));
}

Expression Expression::field(std::string name) { return atom(DerivativeAtom{std::move(name), {}}); }

namespace {

Expression with_coefficient(const Rational& coef, const Expression& rest)
{
    if (coef == 1) return rest;
    std::vector<Expression> factors{Expression::constant(coef)};
    if (rest.kind() == ExprKind::Product) {
        factors.insert(factors.end(), rest.children().begin(), rest.children().end());
    } else {
        factors.push_back(rest);
    }
    return RawBuilder::product(std::move(factors));
}

}  // namespace

Expression Expression::sum(std::vector<Expression> terms)
{
    Rational constant = 0;
    std::vector<std::pair<Expression, Rational>> parts;
    parts.reserve(terms.size());

    const auto add_term = [&](const Expression& t) {
        if (t.kind() == ExprKind::Constant) {
            constant += t.value();
            return;
        }
        if (t.kind() == ExprKind::Product && t.children().front().kind() == ExprKind::Constant) {
            const auto kids = t.children();
            Expression rest = kids.size() == 2
                                  ? kids[1]
                                  : RawBuilder::product(std::vector<Expression>(kids.begin() + 1, kids.end()));
            parts.emplace_back(std::move(rest), kids.front().value());
            return;
        }
        parts.emplace_back(t, Rational(1));
    };
    for (const auto& t : terms) {
        if (t.kind() == ExprKind::Sum) {
            for (const auto& c : t.children()) add_term(c);
        } else {
            add_term(t);
        }
    }

    std::sort(parts.begin(), parts.end(),
              [](const auto& a, const auto& b) { return compare(a.first, b.first) < 0; });
    std::vector<Expression> out;
    out.reserve(parts.size() + 1);
    if (constant != 0) out.push_back(Expression::constant(constant));
    for (std::size_t i = 0; i < parts.size();) {
        Rational coef = parts[i].second;
        std::size_t j = i + 1;
        while (j < parts.size() && parts[j].first == parts[i].first) {
            coef += parts[j].second;
            ++j;
        }
        if (coef != 0) out.push_back(with_coefficient(coef, parts[i].first));
        i = j;
    }
    if (out.empty()) return Expression();
    if (out.size() == 1) return out.front();
    return RawBuilder::sum(std::move(out));
}


Expression Expression::product(std::vector<Expression> factors)
{
    Rational coef = 1;
    std::vector<std::pair<Expression, int>> parts;
    parts.reserve(factors.size());

    const auto add_factor = [&](const Expression& f) {
        switch (f.kind()) {
            case ExprKind::Constant: coef *= f.value(); break;
            case ExprKind::Power: parts.emplace_back(f.children().front(), f.exponent()); break;
            default: parts.emplace_back(f, 1); break;
        }
    };
    for (const auto& f : factors) {
        if (f.kind() == ExprKind::Product) {
            for (const auto& c : f.children()) add_factor(c);
        } else {
            add_factor(f);
        }
    }
    if (coef == 0) return Expression();

    std::sort(parts.begin(), parts.end(),
              [](const auto& a, const auto& b) { return compare(a.first, b.first) < 0; });
    std::vector<Expression> out;
    out.reserve(parts.size() + 1);
    for (std::size_t i = 0; i < parts.size();) {
        int exp = parts[i].second;
        std::size_t j = i + 1;
        while (j < parts.size() && parts[j].first == parts[i].first) {
            exp += parts[j].second;
            ++j;
        }
        if (exp == 1) {
            out.push_back(parts[i].first);
        } else if (exp != 0) {
            out.push_back(RawBuilder::power(parts[i].first, exp));
        }
        i = j;
    }
    if (coef != 1) out.insert(out.begin(), Expression::constant(coef));
    if (out.empty()) return Expression::integer(1);
    if (out.size() == 1) return out.front();
    return RawBuilder::product(std::move(out));
}

Expression Expression::quotient(Expression num, Expression den)
{
    if (den.is_zero()) throw SymbolicError("quotient with zero denominator: " + num.to_string() + " / 0");
    if (den.is_one()) return num;
    if (num.is_zero()) return num;
    if (den.is_constant()) return product({std::move(num), constant(1 / den.value())});
    if (num == den) return integer(1);
    return RawBuilder::quotient(std::move(num), std::move(den));
}

Expression Expression::power(Expression base, int exponent)
{
    if (exponent == 0) return integer(1);
    if (exponent == 1) return base;
    switch (base.kind()) {
        case ExprKind::Constant:
            if (base.value() == 0 && exponent < 0) throw SymbolicError("zero raised to a negative power");
            return constant(rational_pow(base.value(), exponent));
        case ExprKind::Power: return power(base.children().front(), base.exponent() * exponent);
        case ExprKind::Product: {
            std::vector<Expression> factors;
            for (const auto& c : base.children()) factors.push_back(power(c, exponent));
            return product(std::move(factors));
        }
        default: return RawBuilder::power(std::move(base), exponent);
    }
}

Expression Expression::apply(Func f, Expression arg)
{
    if (arg.is_zero()) {
        switch (f) {
            case Func::Sin: return integer(0);
            case Func::Cos:
            case Func::Exp: return integer(1);
            case Func::Ln: throw SymbolicError("ln(0)");
        }
    }
    if (f == Func::Ln && arg.is_one()) return integer(0);
    Node n;
    n.kind = ExprKind::Function;
    n.func = f;
    n.children = {std::move(arg)};
    return RawBuilder::make(std::move(n));
}

// ---------------------------------------------------------------------------
// Accessors

ExprKind Expression::kind() const { return node_->kind; }
const Rational& Expression::value() const { return node_->value; }
const std::string& Expression::name() const { return node_->name; }
const DerivativeAtom& Expression::derivative() const { return node_->atom; }
int Expression::exponent() const { return node_->exponent; }
Func Expression::func() const { return node_->func; }
std::span<const Expression> Expression::children() const { return node_->children; }
std::size_t Expression::hash() const { return node_->hash; }

bool Expression::is_zero() const { return kind() == ExprKind::Constant && value() == 0; }
bool Expression::is_one() const { return kind() == ExprKind::Constant && value() == 1; }

bool Expression::is_atom() const
{
    const auto k = kind();
    return k == ExprKind::Coordinate || k == ExprKind::Parameter || k == ExprKind::Derivative;
}

// ---------------------------------------------------------------------------
// Ordering

int compare(const Expression& a, const Expression& b)
{
    if (a.node() == b.node()) return 0;
    if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
    switch (a.kind()) {
        case ExprKind::Constant: return cmp(a.value(), b.value()) < 0 ? -1 : (a.value() == b.value() ? 0 : 1);
        case ExprKind::Coordinate:
        case ExprKind::Parameter: return a.name().compare(b.name()) < 0 ? -1 : (a.name() == b.name() ? 0 : 1);
        case ExprKind::Derivative: {
            const auto c = a.derivative() <=> b.derivative();
            return c < 0 ? -1 : (c == 0 ? 0 : 1);
        }
        default: break;
    }
    if (a.hash() != b.hash()) return a.hash() < b.hash() ? -1 : 1;
    if (a.exponent() != b.exponent()) return a.exponent() < b.exponent() ? -1 : 1;
    if (a.func() != b.func()) return a.func() < b.func() ? -1 : 1;
    const auto ca = a.children();
    const auto cb = b.children();
    if (ca.size() != cb.size()) return ca.size() < cb.size() ? -1 : 1;
    for (std::size_t i = 0; i < ca.size(); ++i) {
        if (const int c = compare(ca[i], cb[i]); c != 0) return c;
    }
    return 0;
}

bool operator==(const Expression& a, const Expression& b)
{
    if (a.node() == b.node()) return true;
    if (a.hash() != b.hash()) return false;
    return compare(a, b) == 0;
}

Expression operator+(const Expression& a, const Expression& b) { return Expression::sum({a, b}); }
Expression operator-(const Expression& a, const Expression& b) { return Expression::sum({a, -b}); }
Expression operator*(const Expression& a, const Expression& b) { return Expression::product({a, b}); }
Expression operator/(const Expression& a, const Expression& b) { return Expression::quotient(a, b); }
Expression operator-(const Expression& a) { return Expression::product({Expression::integer(-1), a}); }

// ---------------------------------------------------------------------------
// Text rendering

namespace {

// Binding strength of a rendered fragment.
enum Prec { kSum = 1, kProduct = 2, kPower = 3, kAtom = 4 };

struct Rendered {
    std::string text;
    int prec;
};

std::string rational_text(const Rational& v) { return v.get_str(); }

Rendered render(const Expression& e);

std::string wrap(const Rendered& r, int min_prec)
{
    return r.prec < min_prec ? "(" + r.text + ")" : r.text;
}

Rendered render(const Expression& e)
{
    switch (e.kind()) {
        case ExprKind::Constant: {
            const auto& v = e.value();
            if (v < 0) return {rational_text(v), kSum};
            return {rational_text(v), v.get_den() == 1 ? kAtom : kProduct};
        }
        case ExprKind::Coordinate:
        case ExprKind::Parameter: return {e.name(), kAtom};
        case ExprKind::Derivative: return {e.derivative().to_string(), kAtom};
        case ExprKind::Function:
            return {std::string(func_name(e.func())) + "(" + render(e.children().front()).text + ")", kAtom};
        case ExprKind::Power: {
            const int k = e.exponent();
            const auto base = wrap(render(e.children().front()), kAtom);
            return {base + "^" + (k < 0 ? "(" + std::to_string(k) + ")" : std::to_string(k)), kPower};
        }
        case ExprKind::Product: {
            const auto kids = e.children();
            std::string out;
            std::size_t first = 0;
            bool negative = false;
            if (kids.front().kind() == ExprKind::Constant) {
                const auto& c = kids.front().value();
                first = 1;
                if (c == -1) {
                    out = "-";
                    negative = true;
                } else {
                    out = rational_text(c) + "*";
                    negative = c < 0;
                }
            }
            for (std::size_t i = first; i < kids.size(); ++i) {
                if (i > first) out += "*";
                out += wrap(render(kids[i]), kPower);
            }
            return {out, negative ? kSum : kProduct};
        }
        case ExprKind::Quotient: {
            const auto num = render(e.children()[0]);
            const auto den = render(e.children()[1]);
            return {wrap(num, kProduct) + "/" + wrap(den, kPower), kProduct};
        }
        case ExprKind::Sum: {
            std::string out;
            bool first = true;
            for (const auto& c : e.children()) {
                auto r = render(c);
                if (!first && r.text.front() != '-') out += "+";
                out += r.text;
                first = false;
            }
            return {out, kSum};
        }
    }
    return {"?", kAtom};
}

// ---------------------------------------------------------------------------
// LaTeX rendering

std::string latex_name(const std::string& name)
{
    static const std::set<std::string> greek = {
        "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta",   "theta", "kappa", "lambda", "mu",
        "nu",    "xi",   "pi",    "rho",   "sigma",   "tau",  "phi",   "chi",   "psi",   "omega",  "Omega",
        "Gamma", "Delta", "Phi", "Psi"};
    if (greek.count(name)) return "\\" + name;
    // Trailing digits or an underscore-separated suffix become subscripts.
    if (const auto us = name.find('_'); us != std::string::npos && us > 0 && us + 1 < name.size()) {
        return latex_name(name.substr(0, us)) + "_{" + name.substr(us + 1) + "}";
    }
    std::size_t cut = name.size();
    while (cut > 1 && std::isdigit(static_cast<unsigned char>(name[cut - 1]))) --cut;
    if (cut < name.size()) return latex_name(name.substr(0, cut)) + "_{" + name.substr(cut) + "}";
    if (name.size() > 1) return "\\mathrm{" + name + "}";
    return name;
}

std::string latex_rational(const Rational& v)
{
    if (v.get_den() == 1) return v.get_num().get_str();
    const std::string sign = v < 0 ? "-" : "";
    return sign + "\\frac{" + mpz_class(abs(v.get_num())).get_str() + "}{" + v.get_den().get_str() + "}";
}

std::string latex_atom(const DerivativeAtom& a)
{
    const int n = a.index.total();
    if (n == 0) return latex_name(a.field);
    std::string den;
    for (const auto& [c, k] : a.index.entries()) {
        den += "\\partial " + latex_name(c);
        if (k > 1) den += "^{" + std::to_string(k) + "}";
    }
    const std::string top = n > 1 ? "\\partial^{" + std::to_string(n) + "}" : "\\partial";
    return "\\frac{" + top + " " + latex_name(a.field) + "}{" + den + "}";
}

Rendered latex(const Expression& e);

std::string latex_wrap(const Rendered& r, int min_prec)
{
    return r.prec < min_prec ? "\\left(" + r.text + "\\right)" : r.text;
}

Rendered latex(const Expression& e)
{
    switch (e.kind()) {
        case ExprKind::Constant: {
            const auto& v = e.value();
            return {latex_rational(v), v < 0 ? kSum : kAtom};
        }
        case ExprKind::Coordinate:
        case ExprKind::Parameter: return {latex_name(e.name()), kAtom};
        case ExprKind::Derivative: return {latex_atom(e.derivative()), kAtom};
        case ExprKind::Function: {
            const std::string arg = latex(e.children().front()).text;
            if (e.func() == Func::Exp) return {"e^{" + arg + "}", kAtom};
            return {"\\" + std::string(func_name(e.func())) + "\\left(" + arg + "\\right)", kAtom};
        }
        case ExprKind::Power: {
            const auto base = latex_wrap(latex(e.children().front()), kAtom);
            return {"{" + base + "}^{" + std::to_string(e.exponent()) + "}", kPower};
        }
        case ExprKind::Product: {
            const auto kids = e.children();
            std::string out;
            std::size_t first = 0;
            bool negative = false;
            if (kids.front().kind() == ExprKind::Constant) {
                const auto& c = kids.front().value();
                first = 1;
                negative = c < 0;
                if (c == -1) {
                    out = "-";
                } else {
                    out = latex_rational(c) + " ";
                }
            }
            for (std::size_t i = first; i < kids.size(); ++i) {
                if (i > first) out += " \\cdot ";
                out += latex_wrap(latex(kids[i]), kPower);
            }
            return {out, negative ? kSum : kProduct};
        }
        case ExprKind::Quotient:
            return {"\\frac{" + latex(e.children()[0]).text + "}{" + latex(e.children()[1]).text + "}", kAtom};
        case ExprKind::Sum: {
            std::string out;
            bool first = true;
            for (const auto& c : e.children()) {
                auto r = latex(c);
                if (!first) out += r.text.front() == '-' ? " " : " + ";
                out += r.text;
                first = false;
            }
            return {out, kSum};
        }
    }
    return {"?", kAtom};
}

}  // namespace

std::string Expression::to_string() const { return render(*this).text; }
std::string Expression::to_latex() const { return latex(*this).text; }

// ---------------------------------------------------------------------------
// Traversal helpers

namespace {

template <typename Visit>
void walk(const Expression& root, Visit&& visit)
{
    std::unordered_set<const Node*> seen;
    std::vector<Expression> stack{root};
    while (!stack.empty()) {
        Expression e = std::move(stack.back());
        stack.pop_back();
        if (!seen.insert(e.node()).second) continue;
        if (!visit(e)) return;
        for (const auto& c : e.children()) stack.push_back(c);
    }
}

}  // namespace

std::vector<DerivativeAtom> collect_atoms(const Expression& e)
{
    std::set<DerivativeAtom> out;
    walk(e, [&](const Expression& n) {
        if (n.kind() == ExprKind::Derivative) out.insert(n.derivative());
        return true;
    });
    return {out.begin(), out.end()};
}

std::vector<std::string> collect_symbols(const Expression& e)
{
    std::set<std::string> out;
    walk(e, [&](const Expression& n) {
        if (n.kind() == ExprKind::Coordinate || n.kind() == ExprKind::Parameter) out.insert(n.name());
        return true;
    });
    return {out.begin(), out.end()};
}

bool contains_atom(const Expression& e, const DerivativeAtom& atom)
{
    bool found = false;
    walk(e, [&](const Expression& n) {
        if (n.kind() == ExprKind::Derivative && n.derivative() == atom) found = true;
        return !found;
    });
    return found;
}

bool contains_field(const Expression& e, std::string_view field)
{
    bool found = false;
    walk(e, [&](const Expression& n) {
        if (n.kind() == ExprKind::Derivative && n.derivative().field == field) found = true;
        return !found;
    });
    return found;
}

std::size_t node_count(const Expression& e)
{
    std::size_t n = 0;
    walk(e, [&](const Expression&) {
        ++n;
        return true;
    });
    return n;
}

}  // namespace overdet
