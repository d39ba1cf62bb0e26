#include "hvc/habs/parser.hpp"

#include <cctype>
#include <sstream>

namespace hvc::habs {

SyntaxError::SyntaxError(Loc l, std::string msg)
    : std::runtime_error(std::to_string(l.line) + ":" + std::to_string(l.col) + ": " + msg),
      loc(l),
      message(std::move(msg)) {}

bool is_reserved(std::string_view name) { return name == "t" || name == "cll" || name == "result"; }

Expr Expr::number(Rational v, Loc l) {
  Expr e;
  e.kind = Kind::Num;
  e.num = v;
  e.loc = l;
  return e;
}
Expr Expr::boolean_lit(bool b, Loc l) {
  Expr e;
  e.kind = Kind::Bool;
  e.boolean = b;
  e.loc = l;
  return e;
}
Expr Expr::variable(std::string n, Loc l) {
  Expr e;
  e.kind = Kind::Var;
  e.name = std::move(n);
  e.loc = l;
  return e;
}
Expr Expr::field(std::string n, Loc l) {
  Expr e;
  e.kind = Kind::FieldRef;
  e.name = std::move(n);
  e.loc = l;
  return e;
}
Expr Expr::unary(std::string op, Expr a, Loc l) {
  Expr e;
  e.kind = Kind::Unary;
  e.op = std::move(op);
  e.args = {std::move(a)};
  e.loc = l;
  return e;
}
Expr Expr::binary(std::string op, Expr a, Expr b, Loc l) {
  Expr e;
  e.kind = Kind::Binary;
  e.op = std::move(op);
  e.args = {std::move(a), std::move(b)};
  e.loc = l;
  return e;
}

namespace {

enum class Tok { Ident, Number, String, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  Loc loc;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (src.substr(i, 2) == "//") {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (src.substr(i, 2) == "/*") {
      Loc start{line, col};
      size_t end = src.find("*/", i + 2);
      if (end == std::string_view::npos) throw SyntaxError(start, "unterminated comment");
      advance(end + 2 - i);
      continue;
    }
    Loc loc{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), loc});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j + 1 < src.size() && src[j] == '.' && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      out.push_back({Tok::Number, std::string(src.substr(i, j - i)), loc});
      advance(j - i);
      continue;
    }
    if (c == '"') {
      std::string text;
      size_t j = i + 1;
      while (j < src.size() && src[j] != '"') {
        if (src[j] == '\\' && j + 1 < src.size()) ++j;
        text += src[j++];
      }
      if (j >= src.size()) throw SyntaxError(loc, "unterminated string");
      out.push_back({Tok::String, text, loc});
      advance(j + 1 - i);
      continue;
    }
    static const char* two[] = {"<=", ">=", "==", "!=", "&&", "||"};
    bool matched = false;
    for (auto t : two) {
      if (src.substr(i, 2) == t) {
        out.push_back({Tok::Punct, t, loc});
        advance(2);
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("{}()[];,:.!?'=<>+-*/&|").find(c) != std::string_view::npos) {
      out.push_back({Tok::Punct, std::string(1, c), loc});
      advance(1);
      continue;
    }
    throw SyntaxError(loc, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::End, "", {line, col}});
  return out;
}

struct Annotation {
  std::string name;
  std::optional<Expr> expr;
  std::string text;
  Loc loc;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(lex(src)) {}

  Program program() {
    Program p;
    std::vector<Annotation> pending;
    while (true) {
      if (is("[")) {
        pending.push_back(annotation());
      } else if (is_kw("interface")) {
        if (!pending.empty()) throw SyntaxError(pending.front().loc, "annotation not allowed on interface");
        p.interfaces.push_back(interface_decl());
      } else if (is_kw("class")) {
        p.classes.push_back(class_decl(pending));
        pending.clear();
      } else {
        break;
      }
    }
    if (!pending.empty()) throw SyntaxError(pending.front().loc, "annotation without declaration");
    if (is("{")) p.main_block = block();
    if (peek().kind != Tok::End) fail("expected class, interface or main block");
    return p;
  }

  Expr expression_only() {
    Expr e = expr();
    if (peek().kind != Tok::End) fail("trailing input after expression");
    return e;
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;

  const Token& peek(size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool is(std::string_view p, size_t k = 0) const {
    return peek(k).kind == Tok::Punct && peek(k).text == p;
  }
  bool is_kw(std::string_view w, size_t k = 0) const {
    return peek(k).kind == Tok::Ident && peek(k).text == w;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    std::string near = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(t.loc, msg + " near " + near);
  }
  Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  void expect(std::string_view p) {
    if (!is(p)) fail("expected '" + std::string(p) + "'");
    ++pos_;
  }
  bool accept(std::string_view p) {
    if (is(p)) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect_kw(std::string_view w) {
    if (!is_kw(w)) fail("expected '" + std::string(w) + "'");
    ++pos_;
  }
  std::string ident(const char* what = "identifier") {
    if (peek().kind != Tok::Ident) fail(std::string("expected ") + what);
    return take().text;
  }
  std::string declared_name(const char* what) {
    Loc l = peek().loc;
    std::string n = ident(what);
    if (is_reserved(n)) throw SyntaxError(l, "reserved identifier '" + n + "' cannot be declared");
    return n;
  }

  // ---- annotations

  Annotation annotation() {
    Annotation a;
    a.loc = peek().loc;
    expect("[");
    expect_kw("HybridSpec");
    expect(":");
    a.loc = peek().loc;
    a.name = ident("annotation name");
    if (a.name != "Requires" && a.name != "Ensures" && a.name != "ObjInv" && a.name != "Tactic")
      throw SyntaxError(a.loc, "unknown annotation '" + a.name + "'");
    expect("(");
    if (peek().kind == Tok::String) {
      Token s = take();
      a.text = s.text;
      if (a.name != "Tactic") {
        try {
          a.expr = Parser(s.text).expression_only();
        } catch (const SyntaxError& e) {
          Loc l = s.loc;
          l.col += e.loc.col;
          throw SyntaxError(l, e.message);
        }
      }
    } else {
      if (a.name == "Tactic") fail("Tactic expects a string");
      a.expr = expr();
    }
    expect(")");
    expect("]");
    return a;
  }

  void apply_method_annotations(const std::vector<Annotation>& anns, Contract& c) {
    for (const auto& a : anns) {
      if (a.name == "Requires") c.requires_ = a.expr;
      else if (a.name == "Ensures") c.ensures = a.expr;
      else if (a.name == "Tactic") c.tactic = a.text;
      else throw SyntaxError(a.loc, "ObjInv is not allowed on a method");
    }
  }

  // ---- declarations

  Type type() {
    Type t;
    t.name = ident("type");
    if (accept("<")) {
      t.args.push_back(type());
      while (accept(",")) t.args.push_back(type());
      expect(">");
    }
    return t;
  }

  /// True if the tokens at the cursor form `Type Ident`.
  bool looks_like_decl() {
    if (peek().kind != Tok::Ident) return false;
    size_t save = pos_;
    bool ok = false;
    try {
      type();
      ok = peek().kind == Tok::Ident;
    } catch (const SyntaxError&) {
    }
    pos_ = save;
    return ok;
  }

  std::vector<Param> params() {
    std::vector<Param> ps;
    expect("(");
    if (!is(")")) {
      do {
        Param p;
        p.type = type();
        p.name = declared_name("parameter name");
        ps.push_back(std::move(p));
      } while (accept(","));
    }
    expect(")");
    return ps;
  }

  InterfaceDecl interface_decl() {
    InterfaceDecl d;
    d.loc = peek().loc;
    expect_kw("interface");
    d.name = ident("interface name");
    expect("{");
    std::vector<Annotation> pending;
    while (!accept("}")) {
      if (is("[")) {
        pending.push_back(annotation());
        continue;
      }
      MethodSig m;
      m.loc = peek().loc;
      m.ret = type();
      m.name = ident("method name");
      m.params = params();
      expect(";");
      apply_method_annotations(pending, m.contract);
      pending.clear();
      d.methods.push_back(std::move(m));
    }
    return d;
  }

  ClassDecl class_decl(const std::vector<Annotation>& outer) {
    ClassDecl c;
    for (const auto& a : outer) {
      if (a.name == "Requires") c.creation_condition = a.expr;
      else if (a.name == "ObjInv") c.object_invariant = a.expr;
      else throw SyntaxError(a.loc, a.name + " is not allowed on a class");
    }
    c.loc = peek().loc;
    expect_kw("class");
    c.name = ident("class name");
    if (is("(")) c.params = params();
    if (is_kw("implements")) {
      ++pos_;
      c.implements.push_back(ident("interface name"));
      while (accept(",")) c.implements.push_back(ident("interface name"));
    }
    expect("{");
    std::vector<Annotation> pending;
    while (!accept("}")) {
      if (is("[")) {
        Annotation a = annotation();
        if (a.name == "ObjInv") c.object_invariant = a.expr;
        else pending.push_back(std::move(a));
        continue;
      }
      if (is_kw("physical") && is("{", 1)) {
        if (!pending.empty()) throw SyntaxError(pending.front().loc, "annotation not allowed here");
        pos_ += 2;
        while (!accept("}")) c.physical.push_back(phys_decl());
        continue;
      }
      if (is("{")) {
        if (!pending.empty()) throw SyntaxError(pending.front().loc, "annotation not allowed here");
        if (c.init_block) fail("duplicate init block");
        c.init_block = block();
        continue;
      }
      Loc loc = peek().loc;
      Type t = type();
      if (is("(", 1)) {
        MethodDecl m;
        m.loc = loc;
        m.ret = t;
        m.name = ident("method name");
        m.params = params();
        m.body = block();
        apply_method_annotations(pending, m.contract);
        pending.clear();
        c.methods.push_back(std::move(m));
        continue;
      }
      if (!pending.empty()) throw SyntaxError(pending.front().loc, "annotation not allowed on a field");
      FieldDecl f;
      f.loc = loc;
      f.type = t;
      f.name = declared_name("field name");
      if (accept("=")) f.init = expr();
      expect(";");
      c.fields.push_back(std::move(f));
    }
    if (!pending.empty()) throw SyntaxError(pending.front().loc, "annotation without declaration");
    return c;
  }

  PhysDecl phys_decl() {
    PhysDecl d;
    d.loc = peek().loc;
    d.type = type();
    d.name = declared_name("physical field name");
    expect("=");
    d.init = expr();
    if (!accept(":")) expect(";");
    Loc l = peek().loc;
    std::string lhs = ident("derivative");
    if (lhs != d.name) throw SyntaxError(l, "derivative of '" + lhs + "' where '" + d.name + "' expected");
    expect("'");
    expect("=");
    d.deriv = expr();
    expect(";");
    return d;
  }

  // ---- statements

  Block block() {
    expect("{");
    Block b;
    while (!accept("}")) statement(b);
    return b;
  }

  Block body() {
    if (is("{")) return block();
    Block b;
    statement(b);
    return b;
  }

  static void reject_strict(const Expr& e) {
    if (e.kind == Expr::Kind::Binary && (e.op == "<" || e.op == ">"))
      throw SyntaxError(e.loc, "strict inequality '" + e.op + "' in guard");
    for (const auto& a : e.args) reject_strict(a);
  }

  Expr duration_args() {
    expect("(");
    Expr e = expr();
    // duration(a, b): the upper bound is dropped
    if (accept(",")) expr();
    expect(")");
    return e;
  }

  Guard guard() {
    Guard g;
    if (is_kw("diff")) {
      ++pos_;
      g.kind = Guard::Kind::Diff;
      g.expr = expr();
      reject_strict(g.expr);
    } else if (is_kw("duration") && is("(", 1)) {
      ++pos_;
      g.kind = Guard::Kind::Duration;
      g.expr = duration_args();
    } else {
      g.expr = expr();
      if (accept("?")) {
        g.kind = Guard::Kind::Poll;
      } else {
        g.kind = Guard::Kind::Diff;
        reject_strict(g.expr);
      }
    }
    return g;
  }

  void statement(Block& out) {
    Stmt s;
    s.loc = peek().loc;
    if (is("{")) {
      for (auto& x : block()) out.push_back(std::move(x));
      return;
    }
    if (is_kw("await")) {
      ++pos_;
      s.kind = Stmt::Kind::Await;
      s.guard = guard();
      expect(";");
    } else if (is_kw("duration") && is("(", 1)) {
      ++pos_;
      s.kind = Stmt::Kind::Duration;
      s.expr = duration_args();
      expect(";");
    } else if (is_kw("if") && is("(", 1)) {
      ++pos_;
      s.kind = Stmt::Kind::If;
      expect("(");
      s.expr = expr();
      expect(")");
      s.then_block = body();
      if (is_kw("else")) {
        ++pos_;
        s.else_block = body();
      }
    } else if (is_kw("while") && is("(", 1)) {
      ++pos_;
      s.kind = Stmt::Kind::While;
      expect("(");
      s.expr = expr();
      expect(")");
      s.then_block = body();
    } else if (is_kw("return")) {
      ++pos_;
      s.kind = Stmt::Kind::Return;
      s.expr = expr();
      expect(";");
    } else if (is_kw("skip") && is(";", 1)) {
      pos_ += 2;
      s.kind = Stmt::Kind::Skip;
    } else if (looks_like_decl()) {
      s.kind = Stmt::Kind::Assign;
      s.decl_type = type();
      s.target = declared_name("variable name");
      expect("=");
      s.rhs = rhs();
      expect(";");
    } else if (is_kw("this") && is(".", 1) && peek(2).kind == Tok::Ident && is("=", 3)) {
      pos_ += 2;
      s.kind = Stmt::Kind::Assign;
      s.target = ident();
      s.target_is_field = true;
      expect("=");
      s.rhs = rhs();
      expect(";");
    } else if (peek().kind == Tok::Ident && is("=", 1)) {
      s.kind = Stmt::Kind::Assign;
      s.target = ident();
      ++pos_;
      s.rhs = rhs();
      expect(";");
    } else {
      s.kind = Stmt::Kind::Assign;
      s.rhs = rhs();
      if (s.rhs.kind == Rhs::Kind::Pure) throw SyntaxError(s.loc, "expression statement must be a call");
      expect(";");
    }
    out.push_back(std::move(s));
  }

  std::vector<Expr> args() {
    std::vector<Expr> as;
    expect("(");
    if (!is(")")) {
      do as.push_back(expr());
      while (accept(","));
    }
    expect(")");
    return as;
  }

  Rhs rhs() {
    Rhs r;
    if (is_kw("new")) {
      ++pos_;
      r.kind = Rhs::Kind::New;
      r.name = ident("class name");
      r.args = args();
      return r;
    }
    r.expr = expr();
    if (is(".") && is_kw("get", 1)) {
      pos_ += 2;
      r.kind = Rhs::Kind::Get;
    } else if ((is("!") || is(".")) && peek(1).kind == Tok::Ident && is("(", 2)) {
      // `e.m(..)` is treated like `e!m(..)`
      ++pos_;
      r.kind = Rhs::Kind::Call;
      r.name = ident();
      r.args = args();
    }
    return r;
  }

  // ---- expressions

  Expr expr() { return disjunction(); }

  Expr disjunction() {
    Expr l = conjunction();
    while (is("|") || is("||")) {
      Loc loc = take().loc;
      l = Expr::binary("|", std::move(l), conjunction(), loc);
    }
    return l;
  }

  Expr conjunction() {
    Expr l = comparison();
    while (is("&") || is("&&")) {
      Loc loc = take().loc;
      l = Expr::binary("&", std::move(l), comparison(), loc);
    }
    return l;
  }

  bool at_relop() const {
    return is("<=") || is(">=") || is("<") || is(">") || is("==") || is("!=");
  }

  Expr comparison() {
    Expr l = additive();
    if (!at_relop()) return l;
    std::vector<Expr> chain;
    while (at_relop()) {
      Token op = take();
      if (op.text == "!=") throw SyntaxError(op.loc, "'!=' is not supported");
      Expr r = additive();
      chain.push_back(Expr::binary(op.text, l, r, op.loc));
      l = std::move(r);
    }
    Expr out = chain[0];
    for (size_t i = 1; i < chain.size(); ++i) out = Expr::binary("&", std::move(out), chain[i], chain[i].loc);
    return out;
  }

  Expr additive() {
    Expr l = multiplicative();
    while (is("+") || is("-")) {
      Token op = take();
      l = Expr::binary(op.text, std::move(l), multiplicative(), op.loc);
    }
    return l;
  }

  Expr multiplicative() {
    Expr l = unary();
    while (is("*") || is("/")) {
      Token op = take();
      l = Expr::binary(op.text, std::move(l), unary(), op.loc);
    }
    return l;
  }

  Expr unary() {
    if (is("-") || is("!")) {
      Token op = take();
      return Expr::unary(op.text, unary(), op.loc);
    }
    return primary();
  }

  Expr primary() {
    const Token& t = peek();
    Loc loc = t.loc;
    if (t.kind == Tok::Number) {
      std::string text = take().text;
      return Expr::number(Rational::parse_decimal(text), loc);
    }
    if (accept("(")) {
      Expr e = expr();
      expect(")");
      return e;
    }
    if (t.kind != Tok::Ident) fail("expected expression");
    std::string w = take().text;
    if (w == "true" || w == "false") return Expr::boolean_lit(w == "true", loc);
    if (w == "null" || w == "unit") {
      Expr e;
      e.kind = w == "null" ? Expr::Kind::Null : Expr::Kind::Unit;
      e.loc = loc;
      return e;
    }
    if (w == "this" && is(".") && peek(1).kind == Tok::Ident && !is("(", 2) && !is_kw("get", 1)) {
      ++pos_;
      return Expr::field(take().text, loc);
    }
    return Expr::variable(w, loc);
  }
};

}  // namespace

Program parse_program(std::string_view source) { return Parser(source).program(); }

Expr parse_expression(std::string_view source) { return Parser(source).expression_only(); }

}  // namespace hvc::habs
