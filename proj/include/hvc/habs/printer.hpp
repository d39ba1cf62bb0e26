#pragma once

#include <string>

#include "hvc/habs/ast.hpp"

namespace hvc::habs {

std::string print_expr(const Expr& e);
std::string print_guard(const Guard& g);
std::string print_program(const Program& p);

/// Exact decimal rendering when the denominator allows it, else p/q.
std::string decimal_string(const Rational& r);

}  // namespace hvc::habs
