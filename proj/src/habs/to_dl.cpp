#include "hvc/habs/to_dl.hpp"

#include <stdexcept>

#include "hvc/habs/printer.hpp"

namespace hvc::habs {

std::string plain_name(const Expr& e) { return e.name; }

namespace {
[[noreturn]] void bad(const Expr& e, const char* what) {
  throw std::invalid_argument(std::string("cannot translate '") + print_expr(e) + "' as a " + what);
}
}  // namespace

dl::Term to_term(const Expr& e, const Namer& namer) {
  switch (e.kind) {
    case Expr::Kind::Num: return dl::num(e.num);
    case Expr::Kind::Var:
      if (e.name == "this") bad(e, "term");
      return dl::var(namer(e));
    case Expr::Kind::FieldRef: return dl::var(namer(e));
    case Expr::Kind::Unary:
      if (e.op == "-") return dl::neg(to_term(e.args[0], namer));
      bad(e, "term");
    case Expr::Kind::Binary: {
      const std::string& o = e.op;
      if (o == "+") return dl::add(to_term(e.args[0], namer), to_term(e.args[1], namer));
      if (o == "-") return dl::sub(to_term(e.args[0], namer), to_term(e.args[1], namer));
      if (o == "*") return dl::mul(to_term(e.args[0], namer), to_term(e.args[1], namer));
      if (o == "/") return dl::div(to_term(e.args[0], namer), to_term(e.args[1], namer));
      bad(e, "term");
    }
    default: bad(e, "term");
  }
}

dl::Formula to_formula(const Expr& e, const Namer& namer) {
  switch (e.kind) {
    case Expr::Kind::Bool: return e.boolean ? dl::tru() : dl::fls();
    case Expr::Kind::Unary:
      if (e.op == "!") return dl::lnot(to_formula(e.args[0], namer));
      bad(e, "formula");
    case Expr::Kind::Binary: {
      const std::string& o = e.op;
      if (o == "&" || o == "|") {
        // HABS connectives associate to the left; dL output is right-nested
        std::vector<dl::Formula> parts;
        std::function<void(const Expr&)> flatten = [&](const Expr& x) {
          if (x.kind == Expr::Kind::Binary && x.op == o) {
            flatten(x.args[0]);
            flatten(x.args[1]);
          } else {
            parts.push_back(to_formula(x, namer));
          }
        };
        flatten(e);
        return o == "&" ? dl::conj(parts) : dl::disj(parts);
      }
      dl::Rel r;
      if (o == "<=") r = dl::Rel::Le;
      else if (o == ">=") r = dl::Rel::Ge;
      else if (o == "<") r = dl::Rel::Lt;
      else if (o == ">") r = dl::Rel::Gt;
      else if (o == "==") r = dl::Rel::Eq;
      else bad(e, "formula");
      return dl::cmp(r, to_term(e.args[0], namer), to_term(e.args[1], namer));
    }
    default: bad(e, "formula");
  }
}

dl::Formula guard_formula(const Guard& g, const Namer& namer) {
  if (g.kind == Guard::Kind::Diff) return to_formula(g.expr, namer);
  return dl::tru();
}

}  // namespace hvc::habs
