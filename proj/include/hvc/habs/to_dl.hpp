#pragma once

// Translation of HABS expressions into dL terms and formulas.

#include <functional>
#include <string>

#include "hvc/dl/ast.hpp"
#include "hvc/habs/ast.hpp"

namespace hvc::habs {

/// Maps a Var/FieldRef expression to its dL variable name.
using Namer = std::function<std::string(const Expr&)>;

std::string plain_name(const Expr& e);

dl::Term to_term(const Expr& e, const Namer& namer = plain_name);
dl::Formula to_formula(const Expr& e, const Namer& namer = plain_name);

/// trans(g): the guard expression for diff guards, true otherwise.
dl::Formula guard_formula(const Guard& g, const Namer& namer = plain_name);

}  // namespace hvc::habs
