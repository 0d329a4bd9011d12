// Differentiation and substitution.
#pragma once

#include "overdet/expr.hpp"

#include <functional>
#include <map>
#include <set>
#include <string>

namespace overdet {

/// Which coordinates each field depends on. Fields not listed are taken to
/// depend on every coordinate.
class Dependencies {
public:
    Dependencies() = default;
    void declare(const std::string& field, std::set<std::string> coords) { map_[field] = std::move(coords); }
    [[nodiscard]] bool depends(const std::string& field, const std::string& coord) const;

private:
    std::map<std::string, std::set<std::string>> map_;
};

/// Total derivative in coordinate `v`. Derivative atoms of fields that depend
/// on `v` gain one order in `v`; other atoms are constant.
[[nodiscard]] Expression differentiate(const Expression& e, const std::string& v,
                                       const Dependencies& deps = {});

/// Partial derivative with respect to a derivative atom treated as an
/// independent variable (as in dF/dA with A = dS/dt).
[[nodiscard]] Expression partial(const Expression& e, const DerivativeAtom& atom);

/// Simultaneous replacement of atoms; no re-normalization.
[[nodiscard]] Expression replace_atoms(const Expression& e, const std::map<DerivativeAtom, Expression>& repl);

/// Replaces every occurrence of `target` and normalizes. Throws
/// SymbolicError when `replacement` contains `target`.
[[nodiscard]] Expression substitute(const Expression& e, const DerivativeAtom& target,
                                    const Expression& replacement);

/// Replaces every derivative atom of `field` by the corresponding derivative
/// of `definition`. No normalization.
[[nodiscard]] Expression substitute_field(const Expression& e, const std::string& field,
                                          const Expression& definition, const Dependencies& deps = {});

/// Replaces coordinate or parameter symbols by expressions. No
/// normalization.
[[nodiscard]] Expression substitute_symbols(const Expression& e, const std::map<std::string, Expression>& values);

/// Generic bottom-up rewrite over the DAG with memoization. `leaf` is
/// invoked for every non-composite node and returns its replacement.
[[nodiscard]] Expression rewrite_leaves(const Expression& e, const std::function<Expression(const Expression&)>& leaf);

}  // namespace overdet
