#pragma once

// Abstract syntax for the HABS subset: classes with physical blocks,
// methods with contracts, and the cooperative statement language.

#include <optional>
#include <string>
#include <vector>

#include "hvc/rational.hpp"

namespace hvc::habs {

/// Source location. Compares equal to every other location so that ASTs
/// parsed from differently formatted text can be compared with ==.
struct Loc {
  int line = 0;
  int col = 0;
  friend bool operator==(const Loc&, const Loc&) { return true; }
};

enum class Scope { Unresolved, Local, Param, Field, Physical, Result };

struct Expr {
  enum class Kind { Num, Bool, Null, Unit, Var, FieldRef, Unary, Binary };

  Kind kind = Kind::Num;
  Rational num;
  bool boolean = false;
  std::string name;  // Var, FieldRef
  std::string op;    // Unary: "-", "!"; Binary: + - * / <= >= < > == & |
  std::vector<Expr> args;
  Scope scope = Scope::Unresolved;
  Loc loc;

  friend bool operator==(const Expr&, const Expr&) = default;

  static Expr number(Rational v, Loc l = {});
  static Expr boolean_lit(bool b, Loc l = {});
  static Expr variable(std::string n, Loc l = {});
  static Expr field(std::string n, Loc l = {});
  static Expr unary(std::string op, Expr a, Loc l = {});
  static Expr binary(std::string op, Expr a, Expr b, Loc l = {});
};

struct Type {
  std::string name;  // Real, Int, Bool, Unit, Fut, or a class/interface name
  std::vector<Type> args;
  friend bool operator==(const Type&, const Type&) = default;

  bool is_numeric() const { return name == "Real" || name == "Int"; }
  bool is_future() const { return name == "Fut"; }
};

struct Guard {
  enum class Kind { Poll, Duration, Diff };
  Kind kind = Kind::Diff;
  Expr expr;
  friend bool operator==(const Guard&, const Guard&) = default;
};

struct Rhs {
  enum class Kind { Pure, New, Get, Call };
  Kind kind = Kind::Pure;
  Expr expr;    // Pure value, Get future, Call receiver
  std::string name;  // New: class, Call: method
  std::vector<Expr> args;
  friend bool operator==(const Rhs&, const Rhs&) = default;

  bool is_self_call() const {
    return kind == Kind::Call && expr.kind == Expr::Kind::Var && expr.name == "this";
  }
};

struct Stmt;
using Block = std::vector<Stmt>;

struct Stmt {
  enum class Kind { Assign, Await, Duration, If, While, Return, Skip };

  Kind kind = Kind::Skip;
  // Assign: optional declared type, target (empty for a bare call statement)
  std::optional<Type> decl_type;
  std::string target;
  bool target_is_field = false;  // written as `this.f = ...`
  Scope target_scope = Scope::Unresolved;
  Rhs rhs;
  // Await
  int point = 0;
  Guard guard;
  // Duration, If/While condition, Return value
  Expr expr;
  Block then_block;
  std::optional<Block> else_block;
  Loc loc;

  friend bool operator==(const Stmt&, const Stmt&) = default;
};

struct Param {
  Type type;
  std::string name;
  friend bool operator==(const Param&, const Param&) = default;
};

struct Contract {
  std::optional<Expr> requires_;
  std::optional<Expr> ensures;
  std::optional<std::string> tactic;
  friend bool operator==(const Contract&, const Contract&) = default;
};

struct MethodDecl {
  Type ret;
  std::string name;
  std::vector<Param> params;
  Block body;
  Contract contract;
  // Locals declared anywhere in the body (name, type), filled by normalize.
  std::vector<Param> locals;
  Loc loc;
  friend bool operator==(const MethodDecl&, const MethodDecl&) = default;
};

struct MethodSig {
  Type ret;
  std::string name;
  std::vector<Param> params;
  Contract contract;
  Loc loc;
  friend bool operator==(const MethodSig&, const MethodSig&) = default;
};

struct InterfaceDecl {
  std::string name;
  std::vector<MethodSig> methods;
  Loc loc;
  friend bool operator==(const InterfaceDecl&, const InterfaceDecl&) = default;
};

struct PhysDecl {
  Type type{"Real", {}};
  std::string name;
  Expr init;
  Expr deriv;
  Loc loc;
  friend bool operator==(const PhysDecl&, const PhysDecl&) = default;
};

struct FieldDecl {
  Type type;
  std::string name;
  std::optional<Expr> init;
  Loc loc;
  friend bool operator==(const FieldDecl&, const FieldDecl&) = default;
};

struct ClassDecl {
  std::string name;
  std::vector<Param> params;
  std::vector<std::string> implements;
  std::vector<PhysDecl> physical;
  std::vector<FieldDecl> fields;
  std::optional<Block> init_block;
  std::vector<MethodDecl> methods;
  std::optional<Expr> creation_condition;
  std::optional<Expr> object_invariant;
  std::vector<Param> init_locals;  // filled by normalize
  Loc loc;
  friend bool operator==(const ClassDecl&, const ClassDecl&) = default;

  const MethodDecl* method(const std::string& n) const;
  MethodDecl* method(const std::string& n);
  bool is_physical(const std::string& f) const;
  bool is_field(const std::string& f) const;  // params, plain fields and physical fields
  /// Field names in declaration order: params, physical, plain.
  std::vector<std::string> field_names() const;
  std::vector<std::string> physical_names() const;
};

struct Program {
  std::vector<InterfaceDecl> interfaces;
  std::vector<ClassDecl> classes;
  Block main_block;
  std::vector<Param> main_locals;  // filled by normalize
  friend bool operator==(const Program&, const Program&) = default;

  const ClassDecl* find_class(const std::string& n) const;
  const InterfaceDecl* find_interface(const std::string& n) const;
  /// The class to dispatch calls on a receiver of declared type `n`: the
  /// class itself, or the first class implementing interface `n`.
  const ClassDecl* resolve_type(const std::string& n) const;
};

/// Where an await point lives.
struct PointInfo {
  int point = 0;
  std::string cls;     // empty for main
  std::string member;  // method name, "init" or "main"
  Guard guard;
  bool leading = false;
};

std::vector<PointInfo> await_points(const Program& p);

/// Visits every statement of a block, including nested ones, in textual order.
template <typename F>
void for_each_stmt(const Block& b, F&& f) {
  for (const auto& s : b) {
    f(s);
    for_each_stmt(s.then_block, f);
    if (s.else_block) for_each_stmt(*s.else_block, f);
  }
}

template <typename F>
void for_each_stmt_mut(Block& b, F&& f) {
  for (auto& s : b) {
    f(s);
    for_each_stmt_mut(s.then_block, f);
    if (s.else_block) for_each_stmt_mut(*s.else_block, f);
  }
}

}  // namespace hvc::habs
