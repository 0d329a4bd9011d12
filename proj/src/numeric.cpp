#include "overdet/numeric.hpp"

#include "overdet/errors.hpp"
#include "overdet/normalize.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace overdet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v)
{
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

}  // namespace

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)), strides_(axes_.size(), 1)
{
    for (const auto& a : axes_) {
        if (a.points < 1) throw VerificationError("axis " + a.symbol + " has no points");
        if (a.points > 1 && !(a.hi > a.lo)) throw VerificationError("axis " + a.symbol + " has an empty extent");
    }
    for (int i = static_cast<int>(axes_.size()) - 2; i >= 0; --i) {
        strides_[i] = strides_[i + 1] * static_cast<std::size_t>(axes_[i + 1].points);
    }
}

std::size_t Grid::size() const
{
    std::size_t n = 1;
    for (const auto& a : axes_) n *= static_cast<std::size_t>(a.points);
    return n;
}

int Grid::axis_index(const std::string& symbol) const
{
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        if (axes_[i].symbol == symbol) return static_cast<int>(i);
    }
    return -1;
}

std::vector<int> Grid::unravel(std::size_t flat) const
{
    std::vector<int> idx(axes_.size());
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        idx[i] = static_cast<int>(flat / strides_[i]);
        flat %= strides_[i];
    }
    return idx;
}

std::vector<double> Grid::point(std::size_t flat) const
{
    const auto idx = unravel(flat);
    std::vector<double> p(axes_.size());
    for (std::size_t i = 0; i < axes_.size(); ++i) p[i] = axes_[i].at(idx[i]);
    return p;
}

bool FieldSample::valid(std::size_t flat) const
{
    return !std::isnan(values[flat]);
}

namespace {

// Fills the symbol inputs of `c` from grid coordinates and parameters.
struct SymbolSlots {
    std::vector<std::pair<int, int>> axis;      // input slot, axis index
    std::vector<std::pair<int, double>> fixed;  // input slot, value
};

SymbolSlots bind_symbols(const CompiledExpr& c, const Grid& g, const Binding& params)
{
    SymbolSlots s;
    for (std::size_t i = 0; i < c.inputs().size(); ++i) {
        const auto& in = c.inputs()[i];
        if (in.kind != CompiledExpr::Input::Kind::Symbol) continue;
        if (const int a = g.axis_index(in.symbol); a >= 0) {
            s.axis.emplace_back(static_cast<int>(i), a);
        } else if (const auto it = params.symbols.find(in.symbol); it != params.symbols.end()) {
            s.fixed.emplace_back(static_cast<int>(i), it->second);
        } else {
            throw EvaluationError("unbound symbol " + in.symbol);
        }
    }
    return s;
}

void fill_symbols(const SymbolSlots& s, const std::vector<double>& coords, std::vector<double>& in)
{
    for (const auto& [slot, axis] : s.axis) in[static_cast<std::size_t>(slot)] = coords[static_cast<std::size_t>(axis)];
    for (const auto& [slot, v] : s.fixed) in[static_cast<std::size_t>(slot)] = v;
}

std::string describe_point(const Grid& g, const std::vector<double>& coords)
{
    std::string out;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (i > 0) out += ", ";
        out += g.axes()[i].symbol + "=" + format_double(coords[i]);
    }
    return out;
}

}  // namespace

FieldSample sample(const Expression& e, const Grid& g, const Binding& params, std::string name)
{
    const CompiledExpr c({e});
    for (const auto& in : c.inputs()) {
        if (in.kind == CompiledExpr::Input::Kind::Atom) {
            throw EvaluationError("cannot sample field atom " + in.atom.to_string());
        }
    }
    const auto slots = bind_symbols(c, g, params);
    FieldSample f{std::move(name), g, std::vector<double>(g.size())};
    std::vector<double> in(c.inputs().size());
    std::vector<double> out(1);
    for (std::size_t p = 0; p < g.size(); ++p) {
        const auto coords = g.point(p);
        fill_symbols(slots, coords, in);
        double den = 0;
        c.run(in, out, &den);
        if (den == 0 || !std::isfinite(out[0])) {
            throw EvaluationError("zero denominator sampling " + e.to_string() + " at " + describe_point(g, coords));
        }
        f.values[p] = out[0];
    }
    return f;
}

FieldSample fd_derivative(const FieldSample& f, const std::string& axis, int order, Stencil stencil)
{
    const int a = f.grid.axis_index(axis);
    if (a < 0) throw VerificationError("axis " + axis + " is not in the grid");
    if (order < 1 || order > 4) throw VerificationError("finite differences support orders 1 to 4");
    if (stencil == Stencil::Forward && order != 1) throw VerificationError("forward stencil supports order 1 only");

    const Axis& ax = f.grid.axes()[static_cast<std::size_t>(a)];
    const int hw = stencil == Stencil::Forward ? 1 : (order <= 2 ? 1 : 2);
    if (ax.points < 2 * hw + 1) {
        throw VerificationError("axis " + axis + " needs at least " + std::to_string(2 * hw + 1) + " points");
    }
    const double h = ax.h();
    const auto stride = static_cast<std::ptrdiff_t>(f.grid.stride(a));

    FieldSample d{f.name, f.grid, std::vector<double>(f.values.size(), kNaN)};
    for (std::size_t p = 0; p < f.values.size(); ++p) {
        const int i = static_cast<int>(p / f.grid.stride(a)) % ax.points;
        const auto v = [&](int k) { return f.values[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + k * stride)]; };
        if (stencil == Stencil::Forward) {
            if (i + 1 >= ax.points) continue;
            d.values[p] = (v(1) - v(0)) / h;
            continue;
        }
        if (i - hw < 0 || i + hw >= ax.points) continue;
        switch (order) {
            case 1: d.values[p] = (v(1) - v(-1)) / (2 * h); break;
            case 2: d.values[p] = (v(1) - 2 * v(0) + v(-1)) / (h * h); break;
            case 3: d.values[p] = (v(2) - 2 * v(1) + 2 * v(-1) - v(-2)) / (2 * h * h * h); break;
            case 4: d.values[p] = (v(2) - 4 * v(1) + 6 * v(0) - 4 * v(-1) + v(-2)) / (h * h * h * h); break;
        }
    }
    return d;
}

std::string mode_name(ResidualMode m)
{
    return m == ResidualMode::Analytic ? "analytic" : "fd";
}

const EquationResidual& ResidualReport::at(const std::string& name) const
{
    for (const auto& e : per_equation) {
        if (e.name == name) return e;
    }
    throw VerificationError("no residual named " + name);
}

double ResidualReport::max_residual() const
{
    double m = 0;
    for (const auto& e : per_equation) m = std::max(m, e.max);
    return m;
}

std::string ResidualReport::to_json() const
{
    using nlohmann::ordered_json;
    ordered_json j;
    j["system"] = system;
    j["mode"] = mode_name(mode);
    ordered_json axes = ordered_json::array();
    for (const auto& a : grid.axes()) {
        axes.push_back({{"symbol", a.symbol}, {"min", a.lo}, {"max", a.hi}, {"points", a.points}});
    }
    j["grid"] = std::move(axes);
    ordered_json eqs = ordered_json::array();
    for (const auto& e : per_equation) {
        eqs.push_back({{"name", e.name}, {"max", e.max}, {"l2", e.l2}, {"points", e.points}, {"excluded", e.excluded}});
    }
    j["per_equation"] = std::move(eqs);
    j["excluded_points"] = excluded_points;
    ordered_json orders_json = ordered_json::object();
    for (const auto& o : orders) {
        if (o.exact) {
            orders_json[o.name] = "exact";
        } else {
            orders_json[o.name] = o.order;
        }
    }
    j["orders"] = std::move(orders_json);
    j["notes"] = notes;
    return j.dump(2) + "\n";
}

std::vector<NamedExpression> system_equations(const PdeSystem& sys)
{
    std::vector<NamedExpression> out;
    const auto add = [&](const std::vector<Equation>& list, const char* prefix) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            out.push_back({list[i].label.empty() ? prefix + std::to_string(i) : list[i].label, list[i].expr});
        }
    };
    add(sys.equations, "eq");
    add(sys.over, "over");
    add(sys.relations, "rel");
    return out;
}

namespace {

Expression derivative_of(const Expression& closed_form, const MultiIndex& index)
{
    Expression d = closed_form;
    for (const auto& [coord, order] : index.entries()) {
        for (int k = 0; k < order; ++k) d = differentiate(d, coord);
    }
    return d;
}

// Where each input slot of a compiled equation gets its value from.
struct Source {
    enum class Kind { Axis, Fixed, Atom, Aux } kind;
    std::size_t index = 0;
    double value = 0;
};

std::vector<Source> resolve_inputs(const CompiledExpr& c, const Grid& g, const Binding& params,
                                   const std::map<DerivativeAtom, std::size_t>& atoms,
                                   const std::map<DerivativeAtom, std::size_t>& aux)
{
    std::vector<Source> out;
    for (const auto& in : c.inputs()) {
        if (in.kind == CompiledExpr::Input::Kind::Symbol) {
            if (const int a = g.axis_index(in.symbol); a >= 0) {
                out.push_back({Source::Kind::Axis, static_cast<std::size_t>(a)});
            } else if (const auto it = params.symbols.find(in.symbol); it != params.symbols.end()) {
                out.push_back({Source::Kind::Fixed, 0, it->second});
            } else {
                throw EvaluationError("unbound symbol " + in.symbol);
            }
        } else if (const auto it = atoms.find(in.atom); it != atoms.end()) {
            out.push_back({Source::Kind::Atom, it->second});
        } else if (const auto jt = aux.find(in.atom); jt != aux.end()) {
            out.push_back({Source::Kind::Aux, jt->second});
        } else {
            throw VerificationError("no values for " + in.atom.to_string());
        }
    }
    return out;
}

void gather(const std::vector<Source>& src, const std::vector<double>& coords, const std::vector<double>& atoms,
            const std::vector<double>& aux, std::vector<double>& in)
{
    in.resize(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        switch (src[i].kind) {
            case Source::Kind::Axis: in[i] = coords[src[i].index]; break;
            case Source::Kind::Fixed: in[i] = src[i].value; break;
            case Source::Kind::Atom: in[i] = atoms[src[i].index]; break;
            case Source::Kind::Aux: in[i] = aux[src[i].index]; break;
        }
    }
}

struct Accumulator {
    double max = 0;
    double sum_sq = 0;
    std::size_t points = 0;
    std::size_t excluded = 0;
};

}  // namespace

ResidualReport residual(const PdeSystem& sys, const std::vector<NamedExpression>& exprs,
                        const std::map<std::string, Expression>& fields, const Grid& g, const Binding& params,
                        const ResidualOptions& opt)
{
    ResidualReport report;
    report.system = sys.name;
    report.mode = opt.mode;
    report.grid = g;

    std::vector<Expression> expanded;
    for (const auto& e : exprs) expanded.push_back(sys.expand(e.expr));

    // Auxiliary fields without a closed form are solved pointwise.
    std::set<std::string> missing_aux;
    for (const auto& e : expanded) {
        for (const auto& a : collect_atoms(e)) {
            if (fields.count(a.field)) continue;
            const auto* f = sys.field(a.field);
            if (f == nullptr || f->role != FieldRole::Auxiliary) {
                throw VerificationError("missing closed form for field " + a.field);
            }
            if (!a.index.empty()) {
                throw VerificationError("auxiliary field " + a.field + " is differentiated and has no closed form");
            }
            missing_aux.insert(a.field);
        }
    }
    std::vector<DerivativeAtom> aux_atoms;
    for (const auto& name : missing_aux) aux_atoms.push_back(DerivativeAtom{name, {}});
    std::map<DerivativeAtom, std::size_t> aux_index;
    for (std::size_t i = 0; i < aux_atoms.size(); ++i) aux_index[aux_atoms[i]] = i;

    std::vector<Expression> aux_coefficients;  // row-major, rows x aux
    std::vector<Expression> aux_rest;
    if (!aux_atoms.empty()) {
        for (const auto& rel : sys.relations) {
            if (!opt.aux_relations.empty() &&
                std::find(opt.aux_relations.begin(), opt.aux_relations.end(), rel.label) == opt.aux_relations.end()) {
                continue;
            }
            const Expression e = sys.expand(rel.expr);
            bool uses = false;
            for (const auto& a : collect_atoms(e)) uses = uses || aux_index.count(a) > 0;
            if (!uses) continue;
            const auto form = affine_decompose(e, aux_atoms);
            aux_coefficients.insert(aux_coefficients.end(), form.coefficients.begin(), form.coefficients.end());
            aux_rest.push_back(form.rest);
        }
        if (aux_rest.empty()) throw VerificationError("no relation determines the auxiliary fields");
        report.notes.push_back("auxiliary fields solved pointwise by minimum-norm least squares");
    }

    // Field atoms whose values are needed.
    std::set<DerivativeAtom> needed;
    const auto scan = [&](const Expression& e) {
        for (const auto& a : collect_atoms(e)) {
            if (fields.count(a.field)) needed.insert(a);
        }
    };
    for (const auto& e : expanded) scan(e);
    for (const auto& e : aux_coefficients) scan(e);
    for (const auto& e : aux_rest) scan(e);
    std::vector<DerivativeAtom> atom_list(needed.begin(), needed.end());
    std::map<DerivativeAtom, std::size_t> atom_index;
    for (std::size_t i = 0; i < atom_list.size(); ++i) atom_index[atom_list[i]] = i;

    // Atom values: compiled closed-form derivatives or finite-difference arrays.
    std::optional<CompiledExpr> analytic;
    std::optional<SymbolSlots> analytic_slots;
    std::vector<FieldSample> fd_values;
    if (opt.mode == ResidualMode::Analytic) {
        std::vector<Expression> outs;
        for (const auto& a : atom_list) outs.push_back(derivative_of(fields.at(a.field), a.index));
        analytic.emplace(outs);
        analytic_slots = bind_symbols(*analytic, g, params);
    } else {
        std::map<std::string, FieldSample> base;
        std::map<DerivativeAtom, FieldSample> memo;
        for (const auto& a : atom_list) {
            auto bit = base.find(a.field);
            if (bit == base.end()) bit = base.emplace(a.field, sample(fields.at(a.field), g, params, a.field)).first;
            FieldSample cur = bit->second;
            for (const auto& [coord, order] : a.index.entries()) cur = fd_derivative(cur, coord, order, opt.stencil);
            fd_values.push_back(std::move(cur));
        }
    }

    std::vector<CompiledExpr> programs;
    std::vector<std::vector<Source>> sources;
    for (const auto& e : expanded) {
        programs.emplace_back(std::vector<Expression>{e});
        sources.push_back(resolve_inputs(programs.back(), g, params, atom_index, aux_index));
    }
    std::optional<CompiledExpr> aux_program;
    std::vector<Source> aux_sources;
    if (!aux_atoms.empty()) {
        std::vector<Expression> outs = aux_coefficients;
        outs.insert(outs.end(), aux_rest.begin(), aux_rest.end());
        aux_program.emplace(outs);
        aux_sources = resolve_inputs(*aux_program, g, params, atom_index, {});
    }
    std::vector<bool> uses_aux;
    for (const auto& e : expanded) {
        bool u = false;
        for (const auto& a : collect_atoms(e)) u = u || aux_index.count(a) > 0;
        uses_aux.push_back(u);
    }

    std::vector<Accumulator> acc(expanded.size());
    std::vector<double> atom_vals(atom_list.size());
    std::vector<double> aux_vals(aux_atoms.size());
    std::vector<double> in;
    std::vector<double> out;
    std::vector<double> tmp;
    const std::size_t n_aux = aux_atoms.size();

    for (std::size_t p = 0; p < g.size(); ++p) {
        const auto coords = g.point(p);
        if (opt.mode == ResidualMode::Analytic) {
            std::vector<double> ain(analytic->inputs().size());
            fill_symbols(*analytic_slots, coords, ain);
            analytic->run(ain, atom_vals);
        } else {
            bool ok = true;
            for (std::size_t i = 0; i < fd_values.size() && ok; ++i) {
                atom_vals[i] = fd_values[i].values[p];
                ok = !std::isnan(atom_vals[i]);
            }
            if (!ok) continue;  // stencil band, not part of the interior
        }

        bool aux_ok = true;
        if (aux_program) {
            gather(aux_sources, coords, atom_vals, aux_vals, in);
            double den = 0;
            aux_program->run(in, tmp, &den);
            const std::size_t rows = aux_rest.size();
            Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n_aux));
            Eigen::VectorXd rhs(static_cast<Eigen::Index>(rows));
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < n_aux; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = tmp[r * n_aux + c];
                rhs(static_cast<Eigen::Index>(r)) = -tmp[rows * n_aux + r];
            }
            aux_ok = den >= opt.denominator_floor && m.allFinite() && rhs.allFinite();
            if (aux_ok) {
                Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
                const auto& sv = svd.singularValues();
                const double smax = sv.size() > 0 ? sv(0) : 0.0;
                if (smax > 0) {
                    svd.setThreshold(1e-12);
                    double smin = smax;
                    for (Eigen::Index i = 0; i < sv.size(); ++i) {
                        if (sv(i) > 1e-12 * smax) smin = sv(i);
                    }
                    aux_ok = smax / smin <= opt.condition_limit;
                    const Eigen::VectorXd sol = svd.solve(rhs);
                    for (std::size_t c = 0; c < n_aux; ++c) aux_vals[c] = sol(static_cast<Eigen::Index>(c));
                } else {
                    std::fill(aux_vals.begin(), aux_vals.end(), 0.0);
                }
            }
        }

        bool point_excluded = false;
        for (std::size_t k = 0; k < programs.size(); ++k) {
            if (uses_aux[k] && !aux_ok) {
                ++acc[k].excluded;
                point_excluded = true;
                continue;
            }
            gather(sources[k], coords, atom_vals, aux_vals, in);
            double den = 0;
            programs[k].run(in, out, &den);
            const double r = out[0];
            if (den < opt.denominator_floor || !std::isfinite(r)) {
                ++acc[k].excluded;
                point_excluded = true;
                continue;
            }
            acc[k].max = std::max(acc[k].max, std::abs(r));
            acc[k].sum_sq += r * r;
            ++acc[k].points;
        }
        if (point_excluded) ++report.excluded_points;
    }

    for (std::size_t k = 0; k < exprs.size(); ++k) {
        if (acc[k].points == 0) throw VerificationError("no interior points left for " + exprs[k].name);
        report.per_equation.push_back({exprs[k].name, acc[k].max,
                                       std::sqrt(acc[k].sum_sq / static_cast<double>(acc[k].points)), acc[k].points,
                                       acc[k].excluded});
    }
    return report;
}

std::vector<ConvergenceOrder> convergence_order(const ResidualReport& coarse, const ResidualReport& fine)
{
    constexpr double kFloor = 1e-12;
    std::vector<ConvergenceOrder> out;
    for (const auto& c : coarse.per_equation) {
        const auto& f = fine.at(c.name);
        ConvergenceOrder o{c.name};
        if (c.max <= kFloor && f.max <= kFloor) {
            o.exact = true;
        } else if (f.max == 0) {
            o.order = std::numeric_limits<double>::infinity();
        } else {
            o.order = std::log2(c.max / f.max);
        }
        out.push_back(o);
    }
    return out;
}

std::string Trajectory::to_csv() const
{
    std::ostringstream out;
    out.precision(17);
    out << "t";
    for (const auto& n : names) out << "," << n;
    out << "\n";
    for (std::size_t i = 0; i < times.size(); ++i) {
        out << times[i];
        for (double v : states[i]) out << "," << v;
        out << "\n";
    }
    return out.str();
}

Trajectory integrate_ode(const OdeSystem& ode, const std::vector<double>& initial, const Binding& params, double t0,
                         double t1, double dt)
{
    const std::size_t n = ode.state.size();
    if (initial.size() != n || ode.rates.size() != n) throw VerificationError("state and rate counts differ");
    if (!(dt > 0)) throw VerificationError("step must be positive");

    const CompiledExpr c(ode.rates);
    std::vector<int> state_slot(n, -1);
    for (std::size_t i = 0; i < n; ++i) state_slot[i] = c.slot_of(ode.state[i]);
    const int time_slot = c.slot_of(ode.time);
    std::vector<double> in(c.inputs().size(), 0.0);
    for (std::size_t i = 0; i < c.inputs().size(); ++i) {
        const auto& input = c.inputs()[i];
        if (input.kind == CompiledExpr::Input::Kind::Atom) {
            if (std::find(ode.state.begin(), ode.state.end(), input.atom) == ode.state.end()) {
                throw VerificationError("rate depends on non-state atom " + input.atom.to_string());
            }
        } else if (static_cast<int>(i) != time_slot) {
            const auto it = params.symbols.find(input.symbol);
            if (it == params.symbols.end()) throw EvaluationError("unbound symbol " + input.symbol);
            in[i] = it->second;
        }
    }

    const auto rates = [&](double t, const std::vector<double>& y, std::vector<double>& dy) {
        if (time_slot >= 0) in[static_cast<std::size_t>(time_slot)] = t;
        for (std::size_t i = 0; i < n; ++i) {
            if (state_slot[i] >= 0) in[static_cast<std::size_t>(state_slot[i])] = y[i];
        }
        double den = 0;
        c.run(in, dy, &den);
        if (den == 0) throw EvaluationError("zero denominator at t=" + format_double(t));
    };

    Trajectory tr;
    for (const auto& a : ode.state) tr.names.push_back(a.to_string());
    const auto steps = static_cast<long>(std::llround((t1 - t0) / dt));
    std::vector<double> y = initial;
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    tr.times.push_back(t0);
    tr.states.push_back(y);
    for (long s = 0; s < steps; ++s) {
        const double t = t0 + static_cast<double>(s) * dt;
        rates(t, y, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
        rates(t + 0.5 * dt, tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
        rates(t + 0.5 * dt, tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
        rates(t + dt, tmp, k4);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] += dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
            if (!std::isfinite(y[i])) {
                throw EvaluationError("non-finite state " + tr.names[i] + " at t=" + format_double(t + dt));
            }
        }
        tr.times.push_back(t0 + static_cast<double>(s + 1) * dt);
        tr.states.push_back(y);
    }
    return tr;
}

OdeSystem cauchy_ode(const PdeSystem& sys, const CauchyForm& cf, const std::map<std::string, Rational>& point)
{
    const std::string& t = sys.frame.time;
    const int p = static_cast<int>(cf.targets.size());
    std::map<std::string, Expression> values;
    for (const auto& [name, v] : point) values.emplace(name, Expression::constant(v));

    OdeSystem ode;
    ode.time = t;
    for (int j = 0; j < p; ++j) {
        for (const auto& target : cf.targets) {
            ode.state.push_back(DerivativeAtom{target.field, MultiIndex(j > 0 ? std::vector<MultiIndex::Entry>{{t, j}}
                                                                               : std::vector<MultiIndex::Entry>{})});
        }
    }
    for (int j = 0; j < p; ++j) {
        for (const auto& target : cf.targets) {
            if (j + 1 < p) {
                ode.rates.push_back(Expression::atom(DerivativeAtom{target.field, MultiIndex({{t, j + 1}})}));
                continue;
            }
            const Expression q = normalize(substitute_symbols(cf.rhs.at(target), values));
            for (const auto& a : collect_atoms(q)) {
                if (a.index.total() != a.index.order(t) || a.index.order(t) >= p) {
                    throw VerificationError("right-hand side for " + target.to_string() + " keeps " + a.to_string() +
                                            " after freezing");
                }
            }
            ode.rates.push_back(q);
        }
    }
    return ode;
}

std::vector<std::vector<double>> numeric_jacobian(const std::vector<Expression>& rows,
                                                  const std::vector<DerivativeAtom>& atoms, const Binding& b)
{
    std::vector<std::vector<double>> out;
    for (const auto& r : rows) {
        std::vector<double> row;
        for (const auto& a : atoms) {
            Binding lo = b;
            const double v = lo.atoms.emplace(a, 0.0).first->second;
            Binding hi = lo;
            hi.atoms[a] = v + 1.0;
            row.push_back(evaluate(r, hi) - evaluate(r, lo));
        }
        out.push_back(std::move(row));
    }
    return out;
}

namespace {

std::string rational_text(const Rational& q)
{
    return "(" + q.get_str() + ")";
}

// Largest real part and modulus of the eigenvalues of the Cauchy ODE.
std::pair<double, double> spectrum_bounds(const OdeSystem& ode)
{
    const auto n = static_cast<Eigen::Index>(ode.state.size());
    Binding b;
    for (const auto& a : ode.state) b.atoms[a] = 0.0;
    b.symbols[ode.time] = 0.0;
    const auto jac = numeric_jacobian(ode.rates, ode.state, b);
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = jac[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    const Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    double re = -std::numeric_limits<double>::infinity();
    double mod = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        re = std::max(re, es.eigenvalues()(i).real());
        mod = std::max(mod, std::abs(es.eigenvalues()(i)));
    }
    return {re, mod};
}

}  // namespace

ManufacturedSystem manufactured_overdetermined(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const auto small_rational = [&](int range) {
        return Rational(pick(-range, range), pick(2, 3));
    };

    for (int attempt = 0; attempt < 1000; ++attempt) {
        Rational k = small_rational(3);
        Rational w = small_rational(2);
        k.canonicalize();
        w.canonicalize();
        const Rational s[2] = {Rational(pick(1, 3) * (pick(0, 1) ? 1 : -1)), Rational(pick(1, 3) * (pick(0, 1) ? 1 : -1))};

        // Rows: coefficients of dx(S_v), dt(S_v), S_v.
        Rational c[3][2], d[3][2], e[3][2];
        for (int i = 0; i < 3; ++i) {
            for (int v = 0; v < 2; ++v) {
                c[i][v] = pick(-3, 3);
                d[i][v] = pick(-3, 3);
            }
            e[i][0] = pick(-3, 3);
            const Rational partial = (c[i][0] * k + d[i][0] * w + e[i][0]) * s[0] + (c[i][1] * k + d[i][1] * w) * s[1];
            e[i][1] = -partial / s[1];
            e[i][1].canonicalize();
        }
        if (c[0][0] * c[1][1] - c[0][1] * c[1][0] == 0) continue;
        if (c[2][0] == 0 && c[2][1] == 0) continue;

        Matrix rows(3);
        for (int i = 0; i < 3; ++i) {
            for (int v = 0; v < 2; ++v) {
                rows[i].push_back(Expression::constant(c[i][v]));
                rows[i].push_back(Expression::constant(d[i][v]));
                rows[i].push_back(Expression::constant(e[i][v]));
            }
        }
        if (rational_rank(rows) != 3) continue;

        const char* names[2] = {"U", "V"};
        std::string src = "name manufactured_" + std::to_string(seed) + "\n";
        src += "title Manufactured linear system with an exponential solution\n";
        src += "coords t, x\ntime t\nnormal x\nfield U(t, x)\nfield V(t, x)\n";
        for (int i = 0; i < 3; ++i) {
            src += i < 2 ? "eq " : "over ";
            for (int v = 0; v < 2; ++v) {
                if (v > 0) src += " + ";
                src += rational_text(c[i][v]) + "*dx(" + names[v] + ") + " + rational_text(d[i][v]) + "*dt(" +
                       names[v] + ") + " + rational_text(e[i][v]) + "*" + names[v];
            }
            src += "\n";
        }

        ManufacturedSystem m;
        m.system = parse_system(src);
        m.k = k;
        m.w = w;
        m.seed = seed;
        m.redraws = attempt;
        const Expression phase = Expression::apply(
            Func::Exp, Expression::constant(k) * Expression::coordinate("x") + Expression::constant(w) * Expression::coordinate("t"));
        for (int v = 0; v < 2; ++v) m.exact.emplace(names[v], Expression::constant(s[v]) * phase);

        const NormalForm nf = solve_normal_form(m.system);
        const ReductionChain chain = build_chain(m.system, nf, 0);
        bool trivial_link = false;
        for (const auto& g : chain.links) trivial_link = trivial_link || g.is_zero();
        if (trivial_link) continue;
        const LeadingMatrix lm = leading_matrix(m.system, nf, chain);
        if (lm.determinant.is_zero()) continue;
        const CauchyForm cf = cauchy_form(m.system, chain);
        const auto [re, mod] = spectrum_bounds(cauchy_ode(m.system, cf, {{"x", Rational(0)}}));
        if (re > 1.5 || mod > 6) continue;
        return m;
    }
    throw VerificationError("no admissible manufactured system for seed " + std::to_string(seed));
}

}  // namespace overdet
