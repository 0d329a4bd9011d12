// PDE system declarations, the DSL front end, and the normal-derivative
// solved form.
#pragma once

#include "overdet/calculus.hpp"
#include "overdet/expr.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace overdet {

struct CoordinateFrame {
    std::vector<std::string> coords;  // declaration order
    std::string time;
    std::string normal;
    std::vector<std::string> tangents;

    [[nodiscard]] bool has(const std::string& c) const;
    /// Coordinates that are neither time, normal nor tangential.
    [[nodiscard]] std::vector<std::string> passive() const;
};

enum class FieldRole {
    Unknown,    // evolving unknown S_v, counted
    Auxiliary,  // given or pointwise-determined field, not counted
    Defined,    // `let` abbreviation, expanded on demand
};

struct FieldDecl {
    std::string name;
    std::vector<std::string> coords;
    FieldRole role = FieldRole::Unknown;
    Expression definition;  // Defined only
};

enum class EquationKind { Determined, Over, Relation };

struct Equation {
    std::string label;
    Expression expr;  // normalized, implicitly == 0
    EquationKind kind = EquationKind::Determined;
};

class PdeSystem {
public:
    std::string name;
    std::string title;
    CoordinateFrame frame;
    std::vector<std::string> params;
    std::vector<FieldDecl> fields;
    std::vector<Equation> equations;  // determined
    std::vector<Equation> over;
    std::vector<Equation> relations;  // checked, not counted
    std::map<DerivativeAtom, Expression> normal_form;  // user-supplied, may be empty

    [[nodiscard]] const FieldDecl* field(const std::string& name) const;
    /// Names of Unknown fields in declaration order.
    [[nodiscard]] std::vector<std::string> unknowns() const;
    [[nodiscard]] Dependencies dependencies() const;
    /// Expands every `let` field (recursively) into its definition.
    [[nodiscard]] Expression expand(const Expression& e) const;
    /// Determined equations followed by over-determining ones.
    [[nodiscard]] std::vector<Equation> counted_equations() const;
};

/// Throws ParseError on syntax errors, undeclared symbols, duplicate
/// declarations, missing `time`/`normal`, or an empty equation list.
[[nodiscard]] PdeSystem parse_system(const std::string& source);

/// Parses a single expression against the declarations of `sys`.
[[nodiscard]] Expression parse_expression(const PdeSystem& sys, const std::string& text);

/// DSL text; parse_system(render_system(s)) reproduces s.
[[nodiscard]] std::string render_system(const PdeSystem& sys);
[[nodiscard]] std::string system_json(const PdeSystem& sys);

struct Counts {
    int equations = 0;
    int unknowns = 0;
    friend bool operator==(const Counts&, const Counts&) = default;
};

[[nodiscard]] Counts count_balance(const PdeSystem& sys);

/// dS_k/dn = F_k for every unknown S_k, in field declaration order.
struct NormalForm {
    std::vector<DerivativeAtom> targets;
    std::map<DerivativeAtom, Expression> rhs;

    [[nodiscard]] const Expression& at(const DerivativeAtom& a) const { return rhs.at(a); }
};

/// Uses the system's `normal_form` block when present, otherwise solves the
/// (expanded) determined equations for the normal derivatives. Throws
/// NonAffineError or SingularSystemError.
[[nodiscard]] NormalForm solve_normal_form(const PdeSystem& sys);

/// True when `a` is a derivative atom of an unknown with positive order in
/// the normal coordinate.
[[nodiscard]] bool is_normal_atom(const PdeSystem& sys, const DerivativeAtom& a);

}  // namespace overdet
