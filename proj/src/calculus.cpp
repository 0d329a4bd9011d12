#include "overdet/calculus.hpp"

#include "overdet/errors.hpp"
#include "overdet/normalize.hpp"

#include <unordered_map>

namespace overdet {

bool Dependencies::depends(const std::string& field, const std::string& coord) const
{
    const auto it = map_.find(field);
    return it == map_.end() || it->second.count(coord) > 0;
}

namespace {

Expression rebuild(const Expression& e, std::vector<Expression> kids)
{
    switch (e.kind()) {
        case ExprKind::Sum: return Expression::sum(std::move(kids));
        case ExprKind::Product: return Expression::product(std::move(kids));
        case ExprKind::Quotient: return Expression::quotient(std::move(kids[0]), std::move(kids[1]));
        case ExprKind::Power: return Expression::power(std::move(kids[0]), e.exponent());
        case ExprKind::Function: return Expression::apply(e.func(), std::move(kids[0]));
        default: return e;
    }
}

// Chain, product and quotient rules shared by both derivative flavours.
// `leaf` differentiates atoms.
class Deriver {
public:
    explicit Deriver(std::function<Expression(const Expression&)> leaf) : leaf_(std::move(leaf)) {}

    Expression operator()(const Expression& e)
    {
        if (const auto it = memo_.find(e.node()); it != memo_.end()) return it->second;
        Expression d = compute(e);
        memo_.emplace(e.node(), d);
        keep_.push_back(e);
        return d;
    }

private:
    Expression compute(const Expression& e)
    {
        switch (e.kind()) {
            case ExprKind::Constant: return {};
            case ExprKind::Coordinate:
            case ExprKind::Parameter:
            case ExprKind::Derivative: return leaf_(e);
            case ExprKind::Sum: {
                std::vector<Expression> terms;
                for (const auto& c : e.children()) terms.push_back((*this)(c));
                return Expression::sum(std::move(terms));
            }
            case ExprKind::Product: {
                const auto kids = e.children();
                std::vector<Expression> terms;
                for (std::size_t i = 0; i < kids.size(); ++i) {
                    Expression di = (*this)(kids[i]);
                    if (di.is_zero()) continue;
                    std::vector<Expression> factors;
                    for (std::size_t j = 0; j < kids.size(); ++j) factors.push_back(j == i ? di : kids[j]);
                    terms.push_back(Expression::product(std::move(factors)));
                }
                return Expression::sum(std::move(terms));
            }
            case ExprKind::Quotient: {
                const Expression& n = e.children()[0];
                const Expression& d = e.children()[1];
                const Expression dn = (*this)(n);
                const Expression dd = (*this)(d);
                if (dd.is_zero()) return Expression::quotient(dn, d);
                return Expression::quotient(dn * d - n * dd, Expression::power(d, 2));
            }
            case ExprKind::Power: {
                const Expression& b = e.children().front();
                const int k = e.exponent();
                return Expression::product(
                    {Expression::integer(k), Expression::power(b, k - 1), (*this)(b)});
            }
            case ExprKind::Function: {
                const Expression& a = e.children().front();
                const Expression da = (*this)(a);
                if (da.is_zero()) return {};
                switch (e.func()) {
                    case Func::Sin: return Expression::apply(Func::Cos, a) * da;
                    case Func::Cos: return -(Expression::apply(Func::Sin, a) * da);
                    case Func::Exp: return e * da;
                    case Func::Ln: return da / a;
                }
            }
        }
        return {};
    }

    std::function<Expression(const Expression&)> leaf_;
    std::unordered_map<const Node*, Expression> memo_;
    std::vector<Expression> keep_;
};

}  // namespace

Expression differentiate(const Expression& e, const std::string& v, const Dependencies& deps)
{
    Deriver d([&](const Expression& leaf) -> Expression {
        switch (leaf.kind()) {
            case ExprKind::Coordinate: return Expression::integer(leaf.name() == v ? 1 : 0);
            case ExprKind::Derivative: {
                const auto& a = leaf.derivative();
                if (!deps.depends(a.field, v)) return {};
                return Expression::atom(DerivativeAtom{a.field, a.index.raised(v)});
            }
            default: return {};
        }
    });
    return d(e);
}

Expression partial(const Expression& e, const DerivativeAtom& atom)
{
    Deriver d([&](const Expression& leaf) -> Expression {
        return Expression::integer(leaf.kind() == ExprKind::Derivative && leaf.derivative() == atom ? 1 : 0);
    });
    return d(e);
}

Expression rewrite_leaves(const Expression& e, const std::function<Expression(const Expression&)>& leaf)
{
    std::unordered_map<const Node*, Expression> memo;
    std::function<Expression(const Expression&)> go = [&](const Expression& x) -> Expression {
        if (const auto it = memo.find(x.node()); it != memo.end()) return it->second;
        Expression out;
        if (x.children().empty()) {
            out = leaf(x);
        } else {
            std::vector<Expression> kids;
            bool changed = false;
            for (const auto& c : x.children()) {
                kids.push_back(go(c));
                changed = changed || kids.back().node() != c.node();
            }
            out = changed ? rebuild(x, std::move(kids)) : x;
        }
        memo.emplace(x.node(), out);
        return out;
    };
    return go(e);
}

Expression replace_atoms(const Expression& e, const std::map<DerivativeAtom, Expression>& repl)
{
    if (repl.empty()) return e;
    return rewrite_leaves(e, [&](const Expression& leaf) {
        if (leaf.kind() != ExprKind::Derivative) return leaf;
        const auto it = repl.find(leaf.derivative());
        return it == repl.end() ? leaf : it->second;
    });
}

Expression substitute(const Expression& e, const DerivativeAtom& target, const Expression& replacement)
{
    if (contains_atom(replacement, target)) {
        throw SymbolicError("self-referential substitution for " + target.to_string());
    }
    if (!contains_atom(e, target)) return normalize(e);
    return normalize(replace_atoms(e, {{target, replacement}}));
}

Expression substitute_field(const Expression& e, const std::string& field, const Expression& definition,
                            const Dependencies& deps)
{
    if (!contains_field(e, field)) return e;
    std::map<MultiIndex, Expression> cache;
    return rewrite_leaves(e, [&](const Expression& leaf) -> Expression {
        if (leaf.kind() != ExprKind::Derivative || leaf.derivative().field != field) return leaf;
        const auto& index = leaf.derivative().index;
        if (const auto it = cache.find(index); it != cache.end()) return it->second;
        Expression d = definition;
        for (const auto& [coord, k] : index.entries()) {
            for (int i = 0; i < k; ++i) d = differentiate(d, coord, deps);
        }
        cache.emplace(index, d);
        return d;
    });
}

Expression substitute_symbols(const Expression& e, const std::map<std::string, Expression>& values)
{
    if (values.empty()) return e;
    return rewrite_leaves(e, [&](const Expression& leaf) {
        if (leaf.kind() != ExprKind::Coordinate && leaf.kind() != ExprKind::Parameter) return leaf;
        const auto it = values.find(leaf.name());
        return it == values.end() ? leaf : it->second;
    });
}

}  // namespace overdet
