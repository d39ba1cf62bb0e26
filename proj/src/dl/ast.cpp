#include "hvc/dl/ast.hpp"

#include <set>
#include <stdexcept>

namespace hvc::dl {

std::string_view to_string(ArithOp op) {
  switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "*";
    case ArithOp::Div: return "/";
  }
  return "?";
}

std::string_view to_string(Rel rel) {
  switch (rel) {
    case Rel::Le: return "<=";
    case Rel::Ge: return ">=";
    case Rel::Eq: return "=";
    case Rel::Lt: return "<";
    case Rel::Gt: return ">";
  }
  return "?";
}

bool operator==(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  return a.node_->v == b.node_->v;
}

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  return a.node_->v == b.node_->v;
}

bool operator==(const Program& a, const Program& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  return a.node_->v == b.node_->v;
}

namespace {

template <typename N, typename H, typename V>
H wrap(V&& v) {
  return H(std::make_shared<const N>(N{std::forward<V>(v)}));
}

Term mk(auto v) { return wrap<TermNode, Term>(std::move(v)); }
Formula mkf(auto v) { return wrap<FormulaNode, Formula>(std::move(v)); }
Program mkp(auto v) { return wrap<ProgramNode, Program>(std::move(v)); }

void check_name(const std::string& name) {
  if (name.empty()) throw std::invalid_argument("empty identifier");
}

template <typename H>
void check_valid(const H& h, const char* what) {
  if (!h.valid()) throw std::invalid_argument(std::string("null ") + what);
}

}  // namespace

Term var(std::string name) {
  check_name(name);
  return mk(Var{std::move(name)});
}
Term num(Rational value) { return mk(Lit{value}); }
Term num(std::int64_t value) { return mk(Lit{Rational(value)}); }
Term neg(Term arg) {
  check_valid(arg, "term");
  return mk(Neg{std::move(arg)});
}
Term arith(ArithOp op, Term lhs, Term rhs) {
  check_valid(lhs, "term");
  check_valid(rhs, "term");
  if (op == ArithOp::Div) {
    if (auto* l = as<Lit>(rhs); l && l->value.is_zero())
      throw std::invalid_argument("division by literal zero");
  }
  return mk(Arith{op, std::move(lhs), std::move(rhs)});
}
Term add(Term lhs, Term rhs) { return arith(ArithOp::Add, std::move(lhs), std::move(rhs)); }
Term sub(Term lhs, Term rhs) { return arith(ArithOp::Sub, std::move(lhs), std::move(rhs)); }
Term mul(Term lhs, Term rhs) { return arith(ArithOp::Mul, std::move(lhs), std::move(rhs)); }
Term div(Term lhs, Term rhs) { return arith(ArithOp::Div, std::move(lhs), std::move(rhs)); }

Formula tru() {
  static const Formula t = mkf(True{});
  return t;
}
Formula fls() {
  static const Formula f = mkf(False{});
  return f;
}
Formula cmp(Rel rel, Term lhs, Term rhs) {
  check_valid(lhs, "term");
  check_valid(rhs, "term");
  return mkf(Cmp{rel, std::move(lhs), std::move(rhs)});
}
Formula le(Term lhs, Term rhs) { return cmp(Rel::Le, std::move(lhs), std::move(rhs)); }
Formula ge(Term lhs, Term rhs) { return cmp(Rel::Ge, std::move(lhs), std::move(rhs)); }
Formula eq(Term lhs, Term rhs) { return cmp(Rel::Eq, std::move(lhs), std::move(rhs)); }
Formula lt(Term lhs, Term rhs) { return cmp(Rel::Lt, std::move(lhs), std::move(rhs)); }
Formula gt(Term lhs, Term rhs) { return cmp(Rel::Gt, std::move(lhs), std::move(rhs)); }
Formula lnot(Formula arg) {
  check_valid(arg, "formula");
  return mkf(Not{std::move(arg)});
}
Formula land(Formula lhs, Formula rhs) {
  check_valid(lhs, "formula");
  check_valid(rhs, "formula");
  return mkf(And{std::move(lhs), std::move(rhs)});
}
Formula lor(Formula lhs, Formula rhs) {
  check_valid(lhs, "formula");
  check_valid(rhs, "formula");
  return mkf(Or{std::move(lhs), std::move(rhs)});
}
Formula implies(Formula lhs, Formula rhs) {
  check_valid(lhs, "formula");
  check_valid(rhs, "formula");
  return mkf(Implies{std::move(lhs), std::move(rhs)});
}
Formula exists(std::string v, Formula body) {
  check_name(v);
  check_valid(body, "formula");
  return mkf(Exists{std::move(v), std::move(body)});
}
Formula box(Program prog, Formula post) {
  check_valid(prog, "program");
  check_valid(post, "formula");
  return mkf(Box{std::move(prog), std::move(post)});
}

Formula conj(const std::vector<Formula>& parts) {
  if (parts.empty()) return tru();
  Formula acc = parts.back();
  for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it) acc = land(*it, acc);
  return acc;
}

Formula disj(const std::vector<Formula>& parts) {
  if (parts.empty()) return fls();
  Formula acc = parts.back();
  for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it) acc = lor(*it, acc);
  return acc;
}

Program assign(std::string v, Term value) {
  check_name(v);
  check_valid(value, "term");
  return mkp(Assign{std::move(v), std::move(value)});
}
Program havoc(std::string v) {
  check_name(v);
  return mkp(Havoc{std::move(v)});
}
Program test(Formula cond) {
  check_valid(cond, "formula");
  return mkp(Test{std::move(cond)});
}
Program choice(Program lhs, Program rhs) {
  check_valid(lhs, "program");
  check_valid(rhs, "program");
  return mkp(Choice{std::move(lhs), std::move(rhs)});
}
Program seq(Program first, Program second) {
  check_valid(first, "program");
  check_valid(second, "program");
  return mkp(Seq{std::move(first), std::move(second)});
}
Program seq(const std::vector<Program>& parts) {
  if (parts.empty()) return skip();
  Program acc = parts.back();
  for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it) acc = seq(*it, acc);
  return acc;
}
Program loop(Program body) {
  check_valid(body, "program");
  return mkp(Loop{std::move(body)});
}
Program ode(std::vector<OdeEquation> equations, Formula domain) {
  check_valid(domain, "formula");
  std::set<std::string> seen;
  for (const auto& [x, rhs] : equations) {
    check_name(x);
    check_valid(rhs, "term");
    if (!seen.insert(x).second) throw std::invalid_argument("duplicate ODE variable " + x);
  }
  return mkp(Ode{std::move(equations), std::move(domain)});
}
Program skip() { return test(tru()); }

bool is_true(const Formula& f) { return as<True>(f) != nullptr; }
bool is_false(const Formula& f) { return as<False>(f) != nullptr; }

}  // namespace hvc::dl
