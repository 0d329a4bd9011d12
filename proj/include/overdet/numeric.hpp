// Grid sampling, finite differences, residual reports, convergence orders,
// fixed-step RK4 integration and the manufactured over-determined systems
// used as end-to-end oracles.
#pragma once

#include "overdet/evaluate.hpp"
#include "overdet/reduction.hpp"
#include "overdet/system.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace overdet {

struct Axis {
    std::string symbol;
    double lo = 0;
    double hi = 1;
    int points = 1;

    /// Spacing; 0 for a single-point axis.
    [[nodiscard]] double h() const { return points > 1 ? (hi - lo) / (points - 1) : 0.0; }
    [[nodiscard]] double at(int i) const { return points > 1 ? lo + i * h() : lo; }
};

/// Tensor grid, row-major with the last axis fastest.
class Grid {
public:
    Grid() = default;
    explicit Grid(std::vector<Axis> axes);

    [[nodiscard]] const std::vector<Axis>& axes() const { return axes_; }
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] int axis_index(const std::string& symbol) const;  // -1 if absent
    [[nodiscard]] std::size_t stride(int axis) const { return strides_[axis]; }
    /// Per-axis index of flat position `flat`.
    [[nodiscard]] std::vector<int> unravel(std::size_t flat) const;
    [[nodiscard]] std::vector<double> point(std::size_t flat) const;

private:
    std::vector<Axis> axes_;
    std::vector<std::size_t> strides_;
};

/// Values of one field on a grid. NaN marks points where the value is not
/// available (stencil bands).
struct FieldSample {
    std::string name;
    Grid grid;
    std::vector<double> values;

    [[nodiscard]] bool valid(std::size_t flat) const;
};

/// Pointwise evaluation of `e` over the grid axes plus `params`. Throws
/// EvaluationError naming the coordinates of a zero denominator.
[[nodiscard]] FieldSample sample(const Expression& e, const Grid& g, const Binding& params, std::string name = "");

enum class Stencil {
    Centered,  // second order, half-width 1 for orders 1-2 and 2 for 3-4
    Forward,   // first order one-sided, order 1 only
};

/// Throws VerificationError for an unknown axis, unsupported order or too
/// few points.
[[nodiscard]] FieldSample fd_derivative(const FieldSample& f, const std::string& axis, int order,
                                        Stencil stencil = Stencil::Centered);

enum class ResidualMode { Analytic, FiniteDifference };

[[nodiscard]] std::string mode_name(ResidualMode m);

struct NamedExpression {
    std::string name;
    Expression expr;
};

struct ResidualOptions {
    ResidualMode mode = ResidualMode::Analytic;
    Stencil stencil = Stencil::Centered;
    double denominator_floor = 1e-8;  // smaller |den| excludes the point
    double condition_limit = 1e8;     // pointwise auxiliary solves
    /// Relation labels used for the pointwise auxiliary solve; empty means
    /// every relation that contains an unresolved auxiliary field.
    std::vector<std::string> aux_relations;
};

struct EquationResidual {
    std::string name;
    double max = 0;
    double l2 = 0;  // root mean square over the counted points
    std::size_t points = 0;
    std::size_t excluded = 0;
};

/// Observed order between two resolutions; `exact` when both norms vanish.
struct ConvergenceOrder {
    std::string name;
    double order = 0;
    bool exact = false;
};

struct ResidualReport {
    std::string system;
    ResidualMode mode = ResidualMode::Analytic;
    Grid grid;
    std::vector<EquationResidual> per_equation;
    std::size_t excluded_points = 0;
    std::vector<ConvergenceOrder> orders;
    std::vector<std::string> notes;

    [[nodiscard]] const EquationResidual& at(const std::string& name) const;
    [[nodiscard]] double max_residual() const;
    [[nodiscard]] std::string to_json() const;
};

/// Residuals of `exprs` (expressions in the system's fields, already
/// expanded or not) for closed-form `fields`. Auxiliary fields without a
/// closed form are solved pointwise from the system relations that contain
/// them (minimum-norm least squares).
[[nodiscard]] ResidualReport residual(const PdeSystem& sys, const std::vector<NamedExpression>& exprs,
                                      const std::map<std::string, Expression>& fields, const Grid& g,
                                      const Binding& params, const ResidualOptions& opt = {});

/// Every determined, over-determining and relation equation of `sys`.
[[nodiscard]] std::vector<NamedExpression> system_equations(const PdeSystem& sys);

/// log2(norm1 / norm2) per equation, matched by name.
[[nodiscard]] std::vector<ConvergenceOrder> convergence_order(const ResidualReport& coarse,
                                                              const ResidualReport& fine);

/// Explicit first-order system d(state_i)/dt = rates_i. Rates may use the
/// time symbol, parameters and the state atoms.
struct OdeSystem {
    std::string time = "t";
    std::vector<DerivativeAtom> state;
    std::vector<Expression> rates;
};

struct Trajectory {
    std::vector<std::string> names;
    std::vector<double> times;
    std::vector<std::vector<double>> states;

    [[nodiscard]] std::string to_csv() const;
};

/// Classical RK4 with fixed step. Throws EvaluationError on a zero
/// denominator or a non-finite state.
[[nodiscard]] Trajectory integrate_ode(const OdeSystem& ode, const std::vector<double>& initial, const Binding& params,
                                       double t0, double t1, double dt);

/// State d^j S_v/dt^j (j < p) at a frozen point, closed by the Cauchy form.
/// Throws VerificationError when a right-hand side keeps a non-time
/// derivative after freezing.
[[nodiscard]] OdeSystem cauchy_ode(const PdeSystem& sys, const CauchyForm& cf, const std::map<std::string, Rational>& point);

/// d(row)/d(atom) for affine rows, by unit perturbation of the atom values
/// in `b`.
[[nodiscard]] std::vector<std::vector<double>> numeric_jacobian(const std::vector<Expression>& rows,
                                                                const std::vector<DerivativeAtom>& atoms,
                                                                const Binding& b);

/// Two-field linear system in (t, x) with constant rational coefficients,
/// admitting S_v = s_v exp(k x + w t), plus one over-determining equation.
struct ManufacturedSystem {
    PdeSystem system;
    std::map<std::string, Expression> exact;
    Rational k;
    Rational w;
    std::uint64_t seed = 0;
    int redraws = 0;
};

[[nodiscard]] ManufacturedSystem manufactured_overdetermined(std::uint64_t seed);

}  // namespace overdet
