#pragma once

// Abstract syntax of differential dynamic logic: terms, formulas and hybrid
// programs. Nodes are immutable and shared; the handle classes below have
// value semantics and compare structurally.

#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hvc/rational.hpp"

namespace hvc::dl {

enum class ArithOp { Add, Sub, Mul, Div };
enum class Rel { Le, Ge, Eq, Lt, Gt };

std::string_view to_string(ArithOp op);
std::string_view to_string(Rel rel);

struct TermNode;
struct FormulaNode;
struct ProgramNode;

class Term {
 public:
  Term() = default;
  explicit Term(std::shared_ptr<const TermNode> node) : node_(std::move(node)) {}

  const TermNode& node() const { return *node_; }
  bool valid() const { return node_ != nullptr; }

  friend bool operator==(const Term& a, const Term& b);

 private:
  std::shared_ptr<const TermNode> node_;
};

class Formula {
 public:
  Formula() = default;
  explicit Formula(std::shared_ptr<const FormulaNode> node) : node_(std::move(node)) {}

  const FormulaNode& node() const { return *node_; }
  bool valid() const { return node_ != nullptr; }

  friend bool operator==(const Formula& a, const Formula& b);

 private:
  std::shared_ptr<const FormulaNode> node_;
};

class Program {
 public:
  Program() = default;
  explicit Program(std::shared_ptr<const ProgramNode> node) : node_(std::move(node)) {}

  const ProgramNode& node() const { return *node_; }
  bool valid() const { return node_ != nullptr; }

  friend bool operator==(const Program& a, const Program& b);

 private:
  std::shared_ptr<const ProgramNode> node_;
};

// ---- terms

struct Var {
  std::string name;
  friend bool operator==(const Var&, const Var&) = default;
};
struct Lit {
  Rational value;
  friend bool operator==(const Lit&, const Lit&) = default;
};
struct Neg {
  Term arg;
  friend bool operator==(const Neg&, const Neg&) = default;
};
struct Arith {
  ArithOp op;
  Term lhs;
  Term rhs;
  friend bool operator==(const Arith&, const Arith&) = default;
};

struct TermNode {
  std::variant<Var, Lit, Neg, Arith> v;
};

// ---- formulas

struct True {
  friend bool operator==(const True&, const True&) = default;
};
struct False {
  friend bool operator==(const False&, const False&) = default;
};
struct Cmp {
  Rel rel;
  Term lhs;
  Term rhs;
  friend bool operator==(const Cmp&, const Cmp&) = default;
};
struct Not {
  Formula arg;
  friend bool operator==(const Not&, const Not&) = default;
};
struct And {
  Formula lhs;
  Formula rhs;
  friend bool operator==(const And&, const And&) = default;
};
struct Or {
  Formula lhs;
  Formula rhs;
  friend bool operator==(const Or&, const Or&) = default;
};
struct Implies {
  Formula lhs;
  Formula rhs;
  friend bool operator==(const Implies&, const Implies&) = default;
};
struct Exists {
  std::string var;
  Formula body;
  friend bool operator==(const Exists&, const Exists&) = default;
};
struct Box {
  Program prog;
  Formula post;
  friend bool operator==(const Box&, const Box&) = default;
};

struct FormulaNode {
  std::variant<True, False, Cmp, Not, And, Or, Implies, Exists, Box> v;
};

// ---- hybrid programs

struct Assign {
  std::string var;
  Term value;
  friend bool operator==(const Assign&, const Assign&) = default;
};
struct Havoc {
  std::string var;
  friend bool operator==(const Havoc&, const Havoc&) = default;
};
struct Test {
  Formula cond;
  friend bool operator==(const Test&, const Test&) = default;
};
struct Choice {
  Program lhs;
  Program rhs;
  friend bool operator==(const Choice&, const Choice&) = default;
};
struct Seq {
  Program first;
  Program second;
  friend bool operator==(const Seq&, const Seq&) = default;
};
struct Loop {
  Program body;
  friend bool operator==(const Loop&, const Loop&) = default;
};

using OdeEquation = std::pair<std::string, Term>;

struct Ode {
  std::vector<OdeEquation> equations;
  Formula domain;
  friend bool operator==(const Ode&, const Ode&) = default;
};

struct ProgramNode {
  std::variant<Assign, Havoc, Test, Choice, Seq, Loop, Ode> v;
};

// ---- construction

Term var(std::string name);
Term num(Rational value);
Term num(std::int64_t value);
Term neg(Term arg);
Term arith(ArithOp op, Term lhs, Term rhs);
Term add(Term lhs, Term rhs);
Term sub(Term lhs, Term rhs);
Term mul(Term lhs, Term rhs);
/// Throws std::invalid_argument when `rhs` is the literal zero.
Term div(Term lhs, Term rhs);

Formula tru();
Formula fls();
Formula cmp(Rel rel, Term lhs, Term rhs);
Formula le(Term lhs, Term rhs);
Formula ge(Term lhs, Term rhs);
Formula eq(Term lhs, Term rhs);
Formula lt(Term lhs, Term rhs);
Formula gt(Term lhs, Term rhs);
Formula lnot(Formula arg);
Formula land(Formula lhs, Formula rhs);
Formula lor(Formula lhs, Formula rhs);
Formula implies(Formula lhs, Formula rhs);
Formula exists(std::string var, Formula body);
Formula box(Program prog, Formula post);

/// Right-nested conjunction; empty list is `true`, a single element is returned as is.
Formula conj(const std::vector<Formula>& parts);
/// Right-nested disjunction; empty list is `false`.
Formula disj(const std::vector<Formula>& parts);

Program assign(std::string var, Term value);
Program havoc(std::string var);
Program test(Formula cond);
Program choice(Program lhs, Program rhs);
Program seq(Program first, Program second);
/// Right-nested sequence. An empty list yields `?true` (skip).
Program seq(const std::vector<Program>& parts);
Program loop(Program body);
/// Throws std::invalid_argument on duplicate left-hand sides.
Program ode(std::vector<OdeEquation> equations, Formula domain);
Program skip();

// ---- inspection helpers

template <typename T>
const T* as(const Term& t) {
  return std::get_if<T>(&t.node().v);
}
template <typename T>
const T* as(const Formula& f) {
  return std::get_if<T>(&f.node().v);
}
template <typename T>
const T* as(const Program& p) {
  return std::get_if<T>(&p.node().v);
}

bool is_true(const Formula& f);
bool is_false(const Formula& f);

}  // namespace hvc::dl
