// The `overdet` command line: reduce, verify, closure and catalog.
#pragma once

#include "overdet/expr.hpp"
#include "overdet/reduction.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace overdet {

namespace exit_code {
constexpr int ok = 0;
constexpr int usage = 2;  // also parse errors and unknown catalog entries
constexpr int normal_form = 3;
constexpr int determinant_zero = 4;
constexpr int verification = 5;
constexpr int singular_point = 6;
}  // namespace exit_code

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "x=2,nu=1/100,y=0.25" -> exact values. Throws ParseError.
[[nodiscard]] std::map<std::string, Rational> parse_binding(const std::string& text);

/// Exact value of "3", "-1/2" or "0.125". Throws ParseError.
[[nodiscard]] Rational parse_rational(const std::string& text);

[[nodiscard]] std::string closure_json(const PdeSystem& sys, const ClosureReport& rep);

}  // namespace overdet
