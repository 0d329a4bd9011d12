// Dimension reduction of an over-determined system: normal-derivative
// elimination, the surface chain, the leading matrix and its determinant,
// the Cauchy form, fixed-point closure and the moving-surface system.
#pragma once

#include "overdet/normalize.hpp"
#include "overdet/system.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace overdet {

/// lead -> rhs. Any derivative of `lead` is replaced by the matching
/// derivative of `rhs`.
struct Rule {
    DerivativeAtom lead;
    Expression rhs;
};

/// Applies `rules` until no atom matches, then normalizes. Throws
/// ReductionError if the rewriting does not settle.
[[nodiscard]] Expression apply_rules(const Expression& e, const std::vector<Rule>& rules, const Dependencies& deps);

[[nodiscard]] std::vector<Rule> normal_rules(const NormalForm& nf);

struct ReductionChain {
    int over_index = 0;
    std::vector<Expression> links;  // G^(1) ... G^(l)
};

/// G^(1): the selected over-determining equation with every normal
/// derivative of an unknown eliminated. Throws ReductionError if one
/// survives.
[[nodiscard]] Expression eliminate_normal(const PdeSystem& sys, const NormalForm& nf, int over_index);

/// Appends G^(l+1) = reduce(d/dn G^(l)).
[[nodiscard]] ReductionChain extend_chain(const PdeSystem& sys, const NormalForm& nf, ReductionChain chain);

/// Chain of the given depth; depth 0 means p, the number of unknowns.
[[nodiscard]] ReductionChain build_chain(const PdeSystem& sys, const NormalForm& nf, int over_index, int depth = 0);

/// d^p S_v / dt^p for every unknown, in declaration order.
[[nodiscard]] std::vector<DerivativeAtom> highest_time_atoms(const PdeSystem& sys, int p);

/// Row l is d^(p-l)/dt^(p-l) G^(l), normalized.
[[nodiscard]] std::vector<Expression> time_differentiated_system(const PdeSystem& sys, const ReductionChain& chain);

struct LeadingMatrix {
    std::vector<std::string> unknowns;  // column order
    Matrix entries;                     // coefficient extraction
    Matrix product_formula;             // g^T J^(j-1)
    Expression determinant;
};

/// Throws ReductionError when the two computations disagree.
[[nodiscard]] LeadingMatrix leading_matrix(const PdeSystem& sys, const NormalForm& nf, const ReductionChain& chain);

struct VanishingHint {
    std::map<std::string, double> point;
    std::map<std::string, std::string> exact;  // rational value when verified exactly
};

struct SolvabilityReport {
    bool determinant_zero = false;
    Expression determinant;
    std::string factored;
    std::vector<VanishingHint> hints;
};

struct SamplingBox {
    double lo = -3;
    double hi = 3;
    int samples = 1000;
    std::uint64_t seed = 20240611;
};

[[nodiscard]] SolvabilityReport check_solvability(const LeadingMatrix& m, const SamplingBox& box = {});

struct CauchyForm {
    std::vector<DerivativeAtom> targets;
    std::map<DerivativeAtom, Expression> rhs;
};

/// Throws SingularSystemError when the leading determinant vanishes.
[[nodiscard]] CauchyForm cauchy_form(const PdeSystem& sys, const ReductionChain& chain);

/// Rules that replace d^p S_k/dt^p by Q_k, plus the normal-form rules.
[[nodiscard]] std::vector<Rule> cauchy_rules(const NormalForm& nf, const CauchyForm& cf);

/// G^(p+1) reduced modulo the normal form and the Cauchy form. A zero
/// residual means the chain yields no further constraint.
struct FurtherReduction {
    Expression residual;
    bool stalls = false;
};

[[nodiscard]] FurtherReduction probe_further_reduction(const PdeSystem& sys, const NormalForm& nf,
                                                       const ReductionChain& chain, const CauchyForm& cf);

enum class ClosureVerdict { None, TrivialOnly, NontrivialPossible };

[[nodiscard]] std::string verdict_name(ClosureVerdict v);

struct ClosureReport {
    std::map<std::string, Rational> point;
    std::vector<Rule> rules;                // frozen, from the chain
    std::vector<Expression> frozen_chain;   // G^(l) at the point
    std::vector<Expression> relations;      // R_1 ... R_k
    std::vector<DerivativeAtom> atoms;      // column order
    Matrix coefficients;                    // relations x atoms
    std::vector<Expression> constants;      // inhomogeneous parts
    int rank = 0;
    ClosureVerdict verdict = ClosureVerdict::None;
};

/// `point` must bind every non-time coordinate and parameter. Throws
/// SingularPointError when a pivot or denominator vanishes there.
[[nodiscard]] ClosureReport fixed_point_closure(const PdeSystem& sys, const NormalForm& nf,
                                                const ReductionChain& chain,
                                                const std::map<std::string, Rational>& point, int max_extra = 4);

/// d/dt (quantity) = rate along the moving surface.
struct SurfaceRelation {
    DerivativeAtom quantity;
    Expression rate;
};

struct MovingSurfaceSystem {
    Expression speed;  // V = F_t / |grad F|
    std::vector<SurfaceRelation> transport;  // p*p relations, normal form substituted
    std::vector<Expression> chain;           // p chain equations
    std::vector<DerivativeAtom> unknowns;    // d^j S_v / dt^j, j = 0..p
    [[nodiscard]] int equation_count() const { return static_cast<int>(transport.size() + chain.size()); }
    [[nodiscard]] int unknown_count() const { return static_cast<int>(unknowns.size()); }
};

/// Surface speed V = F_t / |grad F| with the gradient over all non-time
/// coordinates.
[[nodiscard]] Expression surface_speed(const PdeSystem& sys, const Expression& F);

/// The relation before the normal form is substituted:
/// d/dt(d^(j-1)S/dt^(j-1)) = d^j S/dt^j - V d^j S/dt^(j-1)dn.
[[nodiscard]] SurfaceRelation raw_surface_relation(const PdeSystem& sys, const std::string& field, int j,
                                                   const Expression& speed);

[[nodiscard]] MovingSurfaceSystem moving_surface_system(const PdeSystem& sys, const NormalForm& nf,
                                                        const ReductionChain& chain, const Expression& F);

/// Everything `overdet reduce` reports.
struct ReductionResult {
    std::string system;
    int over_index = 0;
    std::vector<std::string> normal_form;  // "dx(G) = ..."
    ReductionChain chain;
    LeadingMatrix matrix;
    SolvabilityReport solvability;
    std::optional<CauchyForm> cauchy;
    std::optional<FurtherReduction> further;
    Counts counts;
    std::vector<std::string> notes;

    [[nodiscard]] std::string to_json() const;
    [[nodiscard]] std::string to_latex() const;
    [[nodiscard]] std::string to_text() const;
};

[[nodiscard]] ReductionResult reduce_system(const PdeSystem& sys, int over_index = 0, int depth = 0,
                                            const SamplingBox& box = {});

}  // namespace overdet
