#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "hvc/habs/ast.hpp"

namespace hvc::habs {

/// Lexical, syntactic or declaration error; what() is "line:col: message".
struct SyntaxError : std::runtime_error {
  Loc loc;
  std::string message;
  SyntaxError(Loc l, std::string msg);
};

Program parse_program(std::string_view source);
Expr parse_expression(std::string_view source);

/// Reserved names that may not be declared as fields, parameters or locals.
bool is_reserved(std::string_view name);

}  // namespace hvc::habs
