#include "overdet/evaluate.hpp"

#include "overdet/errors.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

namespace overdet {

namespace {

class Evaluator {
public:
    explicit Evaluator(const Binding& b) : b_(b) {}

    double operator()(const Expression& e)
    {
        if (const auto it = memo_.find(e.node()); it != memo_.end()) return it->second;
        const double v = compute(e);
        memo_.emplace(e.node(), v);
        return v;
    }

private:
    double compute(const Expression& e)
    {
        switch (e.kind()) {
            case ExprKind::Constant: return e.value().get_d();
            case ExprKind::Coordinate:
            case ExprKind::Parameter: {
                const auto it = b_.symbols.find(e.name());
                if (it == b_.symbols.end()) throw EvaluationError("unbound symbol " + e.name());
                return it->second;
            }
            case ExprKind::Derivative: {
                const auto it = b_.atoms.find(e.derivative());
                if (it == b_.atoms.end()) throw EvaluationError("unbound atom " + e.derivative().to_string());
                return it->second;
            }
            case ExprKind::Sum: {
                double s = 0;
                for (const auto& c : e.children()) s += (*this)(c);
                return s;
            }
            case ExprKind::Product: {
                double p = 1;
                for (const auto& c : e.children()) p *= (*this)(c);
                return p;
            }
            case ExprKind::Quotient: {
                const double d = (*this)(e.children()[1]);
                if (d == 0) throw EvaluationError("division by zero in " + e.children()[1].to_string());
                return (*this)(e.children()[0]) / d;
            }
            case ExprKind::Power: {
                const double b = (*this)(e.children().front());
                if (b == 0 && e.exponent() < 0) {
                    throw EvaluationError("division by zero in " + e.children().front().to_string());
                }
                return std::pow(b, e.exponent());
            }
            case ExprKind::Function: {
                const double a = (*this)(e.children().front());
                switch (e.func()) {
                    case Func::Sin: return std::sin(a);
                    case Func::Cos: return std::cos(a);
                    case Func::Exp: return std::exp(a);
                    case Func::Ln:
                        if (a <= 0) throw EvaluationError("ln of nonpositive value in " + e.to_string());
                        return std::log(a);
                }
            }
        }
        return 0;
    }

    const Binding& b_;
    std::unordered_map<const Node*, double> memo_;
};

}  // namespace

double evaluate(const Expression& e, const Binding& b) { return Evaluator(b)(e); }

// ---------------------------------------------------------------------------
// CompiledExpr

CompiledExpr::CompiledExpr(const std::vector<Expression>& outputs)
{
    std::map<const Node*, int> memo;
    std::vector<Expression> keep;
    for (const auto& e : outputs) outputs_.push_back(emit(e, memo, keep));
}

int CompiledExpr::slot_of(const std::string& symbol) const
{
    for (std::size_t i = 0; i < inputs_.size(); ++i) {
        if (inputs_[i].kind == Input::Kind::Symbol && inputs_[i].symbol == symbol) return static_cast<int>(i);
    }
    return -1;
}

int CompiledExpr::slot_of(const DerivativeAtom& atom) const
{
    for (std::size_t i = 0; i < inputs_.size(); ++i) {
        if (inputs_[i].kind == Input::Kind::Atom && inputs_[i].atom == atom) return static_cast<int>(i);
    }
    return -1;
}

int CompiledExpr::input_slot(const Input& in)
{
    const int existing = in.kind == Input::Kind::Symbol ? slot_of(in.symbol) : slot_of(in.atom);
    if (existing >= 0) return existing;
    inputs_.push_back(in);
    return static_cast<int>(inputs_.size()) - 1;
}

int CompiledExpr::emit(const Expression& e, std::map<const Node*, int>& memo, std::vector<Expression>& keep)
{
    if (const auto it = memo.find(e.node()); it != memo.end()) return it->second;
    Instr ins{};
    switch (e.kind()) {
        case ExprKind::Constant:
            ins.op = Op::Const;
            ins.value = e.value().get_d();
            break;
        case ExprKind::Coordinate:
        case ExprKind::Parameter:
            ins.op = Op::Input;
            ins.a = input_slot(Input{Input::Kind::Symbol, e.name(), {}});
            break;
        case ExprKind::Derivative:
            ins.op = Op::Input;
            ins.a = input_slot(Input{Input::Kind::Atom, {}, e.derivative()});
            break;
        case ExprKind::Sum:
        case ExprKind::Product:
            ins.op = e.kind() == ExprKind::Sum ? Op::Sum : Op::Product;
            for (const auto& c : e.children()) ins.args.push_back(emit(c, memo, keep));
            break;
        case ExprKind::Quotient:
            ins.op = Op::Quotient;
            ins.a = emit(e.children()[0], memo, keep);
            ins.b = emit(e.children()[1], memo, keep);
            break;
        case ExprKind::Power:
            ins.op = Op::Power;
            ins.a = emit(e.children().front(), memo, keep);
            ins.exponent = e.exponent();
            break;
        case ExprKind::Function:
            switch (e.func()) {
                case Func::Sin: ins.op = Op::Sin; break;
                case Func::Cos: ins.op = Op::Cos; break;
                case Func::Exp: ins.op = Op::Exp; break;
                case Func::Ln: ins.op = Op::Ln; break;
            }
            ins.a = emit(e.children().front(), memo, keep);
            break;
    }
    code_.push_back(std::move(ins));
    const int id = static_cast<int>(code_.size()) - 1;
    memo.emplace(e.node(), id);
    keep.push_back(e);
    return id;
}

void CompiledExpr::run(const std::vector<double>& in, std::vector<double>& out, double* min_abs_den) const
{
    std::vector<double> r(code_.size());
    double min_den = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < code_.size(); ++i) {
        const Instr& ins = code_[i];
        double v = 0;
        switch (ins.op) {
            case Op::Const: v = ins.value; break;
            case Op::Input: v = in[static_cast<std::size_t>(ins.a)]; break;
            case Op::Sum:
                for (int k : ins.args) v += r[static_cast<std::size_t>(k)];
                break;
            case Op::Product:
                v = 1;
                for (int k : ins.args) v *= r[static_cast<std::size_t>(k)];
                break;
            case Op::Quotient: {
                const double d = r[static_cast<std::size_t>(ins.b)];
                min_den = std::min(min_den, std::abs(d));
                v = r[static_cast<std::size_t>(ins.a)] / d;
                break;
            }
            case Op::Power: {
                const double b = r[static_cast<std::size_t>(ins.a)];
                if (ins.exponent < 0) min_den = std::min(min_den, std::abs(b));
                v = std::pow(b, ins.exponent);
                break;
            }
            case Op::Sin: v = std::sin(r[static_cast<std::size_t>(ins.a)]); break;
            case Op::Cos: v = std::cos(r[static_cast<std::size_t>(ins.a)]); break;
            case Op::Exp: v = std::exp(r[static_cast<std::size_t>(ins.a)]); break;
            case Op::Ln: v = std::log(r[static_cast<std::size_t>(ins.a)]); break;
        }
        r[i] = v;
    }
    out.resize(outputs_.size());
    for (std::size_t i = 0; i < outputs_.size(); ++i) out[i] = r[static_cast<std::size_t>(outputs_[i])];
    if (min_abs_den) *min_abs_den = min_den;
}

}  // namespace overdet
