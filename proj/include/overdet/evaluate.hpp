// Floating-point evaluation of expressions.
#pragma once

#include "overdet/expr.hpp"

#include <map>
#include <string>
#include <vector>

namespace overdet {

struct Binding {
    std::map<std::string, double> symbols;
    std::map<DerivativeAtom, double> atoms;

    Binding& set(const std::string& name, double v)
    {
        symbols[name] = v;
        return *this;
    }
    Binding& set(const DerivativeAtom& a, double v)
    {
        atoms[a] = v;
        return *this;
    }
};

/// Throws EvaluationError on an unbound symbol or a zero denominator (the
/// message names the offending subterm).
[[nodiscard]] double evaluate(const Expression& e, const Binding& b);

/// Straight-line program for repeated evaluation. Shared DAG nodes are
/// evaluated once. Inputs are addressed by slot.
class CompiledExpr {
public:
    struct Input {
        enum class Kind { Symbol, Atom } kind;
        std::string symbol;
        DerivativeAtom atom;
    };

    explicit CompiledExpr(const std::vector<Expression>& outputs);

    [[nodiscard]] const std::vector<Input>& inputs() const { return inputs_; }
    [[nodiscard]] int slot_of(const std::string& symbol) const;  // -1 if absent
    [[nodiscard]] int slot_of(const DerivativeAtom& atom) const;

    /// Evaluates all outputs. `min_abs_den` receives the smallest magnitude
    /// of any denominator encountered (infinity when there is none).
    /// Division by exact zero yields a non-finite result rather than
    /// throwing.
    void run(const std::vector<double>& in, std::vector<double>& out, double* min_abs_den = nullptr) const;

private:
    enum class Op : std::uint8_t { Const, Input, Sum, Product, Quotient, Power, Sin, Cos, Exp, Ln };
    struct Instr {
        Op op;
        int a = -1;  // Input slot, or Quotient numerator / unary argument
        int b = -1;  // Quotient denominator
        int exponent = 0;
        double value = 0;
        std::vector<int> args;  // Sum / Product operands
    };

    int emit(const Expression& e, std::map<const Node*, int>& memo, std::vector<Expression>& keep);
    int input_slot(const Input& in);

    std::vector<Input> inputs_;
    std::vector<Instr> code_;
    std::vector<int> outputs_;
};

}  // namespace overdet
