#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "hvc/habs/ast.hpp"

namespace hvc::habs {

struct NameError : std::runtime_error {
  Loc loc;
  std::string message;
  NameError(Loc l, std::string msg);
};

/// Makes every method suspension-leading, numbers await points 1..n in
/// textual order, inherits interface contracts and resolves names.
Program normalize(Program p);

struct Diagnostic {
  Loc loc;
  std::string message;
};

std::vector<Diagnostic> check_types(const Program& p);

/// `file:line:col: message`
std::string format_diagnostic(const std::string& file, const Diagnostic& d);

/// Declared type of a resolved variable inside `member` of class `cls`
/// (member may be "init"; cls may be null for main). Empty name if unknown.
Type type_of_name(const Program& p, const ClassDecl* cls, const std::string& member,
                  const std::string& name);

/// Class that receives a call on `recv` inside `member` of `cls`, or null.
const ClassDecl* receiver_class(const Program& p, const ClassDecl* cls, const std::string& member,
                                const Expr& recv);

}  // namespace hvc::habs
