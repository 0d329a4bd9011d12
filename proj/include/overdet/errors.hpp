#pragma once

#include <stdexcept>
#include <string>

namespace overdet {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ill-formed symbolic construction: zero denominators, self-referential
/// substitution, unknown differentiation variables.
class SymbolicError : public Error {
public:
    using Error::Error;
};

/// An expression depends non-affinely on a designated unknown.
class NonAffineError : public Error {
public:
    using Error::Error;
};

/// A linear system whose determinant normalizes to the zero polynomial.
class SingularSystemError : public Error {
public:
    using Error::Error;
};

/// Numeric evaluation failure: unbound symbol, division by zero.
class EvaluationError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, int line, int column)
        : Error(format(message, line, column)), line_(line), column_(column), detail_(message)
    {
    }

    [[nodiscard]] int line() const { return line_; }
    [[nodiscard]] int column() const { return column_; }
    [[nodiscard]] const std::string& detail() const { return detail_; }

private:
    static std::string format(const std::string& m, int line, int column)
    {
        return std::to_string(line) + ":" + std::to_string(column) + ": " + m;
    }

    int line_;
    int column_;
    std::string detail_;
};

/// Reduction produced an inconsistent state (e.g. residual normal
/// derivatives, disagreeing leading-matrix computations).
class ReductionError : public Error {
public:
    using Error::Error;
};

/// A frozen point hits a vanishing denominator.
class SingularPointError : public Error {
public:
    SingularPointError(const std::string& message, std::string denominator)
        : Error(message), denominator_(std::move(denominator))
    {
    }

    [[nodiscard]] const std::string& denominator() const { return denominator_; }

private:
    std::string denominator_;
};

class VerificationError : public Error {
public:
    using Error::Error;
};

}  // namespace overdet
