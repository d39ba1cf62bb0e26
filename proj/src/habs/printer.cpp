#include "hvc/habs/printer.hpp"

#include <sstream>

namespace hvc::habs {

std::string decimal_string(const Rational& r) {
  std::int64_t den = r.den();
  int twos = 0, fives = 0;
  while (den % 2 == 0) den /= 2, ++twos;
  while (den % 5 == 0) den /= 5, ++fives;
  if (den != 1) return r.to_string();
  int digits = std::max(twos, fives);
  if (digits == 0) return r.to_string();
  // scale numerator so that the denominator becomes 10^digits
  __int128 scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  __int128 n = static_cast<__int128>(r.num()) * (scale / r.den());
  bool neg = n < 0;
  if (neg) n = -n;
  std::string s;
  __int128 whole = n / scale, frac = n % scale;
  s = std::to_string(static_cast<long long>(whole));
  std::string f = std::to_string(static_cast<long long>(frac));
  f.insert(0, digits - f.size(), '0');
  return (neg ? "-" : "") + s + "." + f;
}

namespace {

int prec(const Expr& e) {
  if (e.kind == Expr::Kind::Binary) {
    const std::string& o = e.op;
    if (o == "|") return 1;
    if (o == "&") return 2;
    if (o == "+" || o == "-") return 4;
    if (o == "*" || o == "/") return 5;
    return 3;
  }
  if (e.kind == Expr::Kind::Unary) return 6;
  return 7;
}

void expr_to(std::ostringstream& os, const Expr& e);

void operand(std::ostringstream& os, const Expr& e, bool paren) {
  if (paren) os << '(';
  expr_to(os, e);
  if (paren) os << ')';
}

void expr_to(std::ostringstream& os, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Num: os << decimal_string(e.num); return;
    case Expr::Kind::Bool: os << (e.boolean ? "true" : "false"); return;
    case Expr::Kind::Null: os << "null"; return;
    case Expr::Kind::Unit: os << "unit"; return;
    case Expr::Kind::Var: os << e.name; return;
    case Expr::Kind::FieldRef: os << "this." << e.name; return;
    case Expr::Kind::Unary:
      os << e.op;
      operand(os, e.args[0], prec(e.args[0]) < 6);
      return;
    case Expr::Kind::Binary: {
      int p = prec(e);
      // comparisons are not associative, so both sides bind tighter
      operand(os, e.args[0], p == 3 ? prec(e.args[0]) <= 3 : prec(e.args[0]) < p);
      os << ' ' << e.op << ' ';
      operand(os, e.args[1], prec(e.args[1]) <= p);
      return;
    }
  }
}

std::string type_str(const Type& t) {
  std::string s = t.name;
  if (!t.args.empty()) {
    s += '<';
    for (size_t i = 0; i < t.args.size(); ++i) s += (i ? ", " : "") + type_str(t.args[i]);
    s += '>';
  }
  return s;
}

std::string params_str(const std::vector<Param>& ps) {
  std::string s = "(";
  for (size_t i = 0; i < ps.size(); ++i) s += (i ? ", " : "") + type_str(ps[i].type) + " " + ps[i].name;
  return s + ")";
}

std::string args_str(const std::vector<Expr>& as) {
  std::string s = "(";
  for (size_t i = 0; i < as.size(); ++i) s += (i ? ", " : "") + print_expr(as[i]);
  return s + ")";
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

void contract_to(std::ostringstream& os, const Contract& c, const std::string& ind) {
  if (c.requires_) os << ind << "[HybridSpec: Requires(" << print_expr(*c.requires_) << ")]\n";
  if (c.ensures) os << ind << "[HybridSpec: Ensures(" << print_expr(*c.ensures) << ")]\n";
  if (c.tactic) os << ind << "[HybridSpec: Tactic(" << quote(*c.tactic) << ")]\n";
}

std::string rhs_str(const Rhs& r) {
  switch (r.kind) {
    case Rhs::Kind::Pure: return print_expr(r.expr);
    case Rhs::Kind::New: return "new " + r.name + args_str(r.args);
    case Rhs::Kind::Get: return print_expr(r.expr) + ".get";
    case Rhs::Kind::Call: return print_expr(r.expr) + "!" + r.name + args_str(r.args);
  }
  return "";
}

void block_to(std::ostringstream& os, const Block& b, const std::string& ind);

void stmt_to(std::ostringstream& os, const Stmt& s, const std::string& ind) {
  os << ind;
  switch (s.kind) {
    case Stmt::Kind::Assign:
      if (s.decl_type) os << type_str(*s.decl_type) << ' ';
      if (!s.target.empty()) os << (s.target_is_field ? "this." : "") << s.target << " = ";
      os << rhs_str(s.rhs) << ";\n";
      return;
    case Stmt::Kind::Await: os << "await " << print_guard(s.guard) << ";\n"; return;
    case Stmt::Kind::Duration: os << "duration(" << print_expr(s.expr) << ");\n"; return;
    case Stmt::Kind::Return: os << "return " << print_expr(s.expr) << ";\n"; return;
    case Stmt::Kind::Skip: os << "skip;\n"; return;
    case Stmt::Kind::If:
      os << "if (" << print_expr(s.expr) << ") {\n";
      block_to(os, s.then_block, ind + "  ");
      os << ind << "}";
      if (s.else_block) {
        os << " else {\n";
        block_to(os, *s.else_block, ind + "  ");
        os << ind << "}";
      }
      os << "\n";
      return;
    case Stmt::Kind::While:
      os << "while (" << print_expr(s.expr) << ") {\n";
      block_to(os, s.then_block, ind + "  ");
      os << ind << "}\n";
      return;
  }
}

void block_to(std::ostringstream& os, const Block& b, const std::string& ind) {
  for (const auto& s : b) stmt_to(os, s, ind);
}

}  // namespace

std::string print_expr(const Expr& e) {
  std::ostringstream os;
  expr_to(os, e);
  return os.str();
}

std::string print_guard(const Guard& g) {
  switch (g.kind) {
    case Guard::Kind::Poll: return print_expr(g.expr) + "?";
    case Guard::Kind::Duration: return "duration(" + print_expr(g.expr) + ")";
    case Guard::Kind::Diff: return "diff " + print_expr(g.expr);
  }
  return "";
}

std::string print_program(const Program& p) {
  std::ostringstream os;
  for (const auto& i : p.interfaces) {
    os << "interface " << i.name << " {\n";
    for (const auto& m : i.methods) {
      contract_to(os, m.contract, "  ");
      os << "  " << type_str(m.ret) << ' ' << m.name << params_str(m.params) << ";\n";
    }
    os << "}\n\n";
  }
  for (const auto& c : p.classes) {
    if (c.creation_condition) os << "[HybridSpec: Requires(" << print_expr(*c.creation_condition) << ")]\n";
    os << "class " << c.name;
    if (!c.params.empty()) os << params_str(c.params);
    if (!c.implements.empty()) {
      os << " implements ";
      for (size_t i = 0; i < c.implements.size(); ++i) os << (i ? ", " : "") << c.implements[i];
    }
    os << " {\n";
    if (c.object_invariant) os << "  [HybridSpec: ObjInv(" << print_expr(*c.object_invariant) << ")]\n";
    for (const auto& f : c.fields) {
      os << "  " << type_str(f.type) << ' ' << f.name;
      if (f.init) os << " = " << print_expr(*f.init);
      os << ";\n";
    }
    if (!c.physical.empty()) {
      os << "  physical {\n";
      for (const auto& d : c.physical)
        os << "    " << type_str(d.type) << ' ' << d.name << " = " << print_expr(d.init) << " : " << d.name
           << "' = " << print_expr(d.deriv) << ";\n";
      os << "  }\n";
    }
    if (c.init_block) {
      os << "  {\n";
      block_to(os, *c.init_block, "    ");
      os << "  }\n";
    }
    for (const auto& m : c.methods) {
      contract_to(os, m.contract, "  ");
      os << "  " << type_str(m.ret) << ' ' << m.name << params_str(m.params) << " {\n";
      block_to(os, m.body, "    ");
      os << "  }\n";
    }
    os << "}\n\n";
  }
  os << "{\n";
  block_to(os, p.main_block, "  ");
  os << "}\n";
  return os.str();
}

}  // namespace hvc::habs
