#include "hvc/dl/kyx.hpp"

#include <cctype>
#include <sstream>

#include "hvc/dl/ops.hpp"

namespace hvc::dl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// ---------------------------------------------------------------- rendering

int term_prec(const Term& t) {
  if (auto* a = as<Arith>(t)) return (a->op == ArithOp::Add || a->op == ArithOp::Sub) ? 1 : 2;
  if (as<Neg>(t)) return 3;
  if (auto* l = as<Lit>(t)) {
    if (l->value.is_negative()) return 3;
    if (!l->value.is_integer()) return 2;
  }
  return 4;
}

void render_term(const Term& t, std::ostream& os);

void render_operand(const Term& t, bool parens, std::ostream& os) {
  if (parens) os << '(';
  render_term(t, os);
  if (parens) os << ')';
}

void render_term(const Term& t, std::ostream& os) {
  std::visit(overloaded{
                 [&](const Var& v) { os << v.name; },
                 [&](const Lit& l) { os << l.value.to_string(); },
                 [&](const Neg& n) {
                   os << '-';
                   render_operand(n.arg, term_prec(n.arg) < 4, os);
                 },
                 [&](const Arith& a) {
                   int p = term_prec(t);
                   // unary operands are always bracketed inside binary terms
                   int lp = term_prec(a.lhs);
                   int rp = term_prec(a.rhs);
                   render_operand(a.lhs, lp == 3 || lp < p, os);
                   os << ' ' << to_string(a.op) << ' ';
                   render_operand(a.rhs, rp == 3 || rp <= p, os);
                 },
             },
             t.node().v);
}

int formula_prec(const Formula& f) {
  if (as<Implies>(f)) return 1;
  if (as<Or>(f)) return 2;
  if (as<And>(f)) return 3;
  if (as<Cmp>(f)) return 5;
  return 4;  // unary and constants
}

void render_formula(const Formula& f, std::ostream& os);
void render_program(const Program& p, std::ostream& os);

void render_sub(const Formula& f, bool parens, std::ostream& os) {
  if (parens) os << '(';
  render_formula(f, os);
  if (parens) os << ')';
}

// Body of !, [a] and \exists: constants, negations and modalities go bare.
void render_unary_body(const Formula& f, std::ostream& os) {
  bool bare = as<True>(f) || as<False>(f) || as<Not>(f) || as<Box>(f);
  render_sub(f, !bare, os);
}

void render_formula(const Formula& f, std::ostream& os) {
  std::visit(overloaded{
                 [&](const True&) { os << "true"; },
                 [&](const False&) { os << "false"; },
                 [&](const Cmp& c) {
                   render_term(c.lhs, os);
                   os << ' ' << to_string(c.rel) << ' ';
                   render_term(c.rhs, os);
                 },
                 [&](const Not& n) {
                   os << '!';
                   render_unary_body(n.arg, os);
                 },
                 [&](const And& a) {
                   render_sub(a.lhs, formula_prec(a.lhs) <= 3, os);
                   os << " & ";
                   render_sub(a.rhs, formula_prec(a.rhs) < 3, os);
                 },
                 [&](const Or& a) {
                   render_sub(a.lhs, formula_prec(a.lhs) <= 2, os);
                   os << " | ";
                   render_sub(a.rhs, formula_prec(a.rhs) < 2, os);
                 },
                 [&](const Implies& a) {
                   render_sub(a.lhs, formula_prec(a.lhs) <= 1, os);
                   os << " -> ";
                   render_sub(a.rhs, false, os);
                 },
                 [&](const Exists& e) {
                   os << "\\exists " << e.var << " ";
                   render_sub(e.body, true, os);
                 },
                 [&](const Box& b) {
                   os << '[';
                   render_program(b.prog, os);
                   os << ']';
                   render_unary_body(b.post, os);
                 },
             },
             f.node().v);
}

void render_program(const Program& p, std::ostream& os) {
  std::visit(overloaded{
                 [&](const Assign& a) {
                   os << a.var << " := ";
                   render_term(a.value, os);
                   os << ';';
                 },
                 [&](const Havoc& h) { os << h.var << " := *;"; },
                 [&](const Test& t) {
                   os << '?';
                   render_formula(t.cond, os);
                   os << ';';
                 },
                 [&](const Choice& c) {
                   os << '{';
                   render_program(c.lhs, os);
                   os << " ++ ";
                   render_program(c.rhs, os);
                   os << '}';
                 },
                 [&](const Seq& s) {
                   bool group = as<Seq>(s.first) != nullptr;
                   if (group) os << '{';
                   render_program(s.first, os);
                   if (group) os << '}';
                   os << ' ';
                   render_program(s.second, os);
                 },
                 [&](const Loop& l) {
                   os << '{';
                   render_program(l.body, os);
                   os << "}*";
                 },
                 [&](const Ode& o) {
                   os << '{';
                   bool first = true;
                   for (const auto& [x, rhs] : o.equations) {
                     if (!first) os << ", ";
                     first = false;
                     os << x << "'=";
                     render_term(rhs, os);
                   }
                   os << " & ";
                   render_formula(o.domain, os);
                   os << '}';
                 },
             },
             p.node().v);
}

// ---------------------------------------------------------------- lexing

enum class Tok {
  Ident,
  Number,
  String,
  Sym,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t offset;
};

std::vector<Token> lex(std::string_view src) {
  static const char* const multi[] = {":=", "<=", ">=", "->", "++", "!=", "&&", "||"};
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      auto end = src.find("*/", i + 2);
      if (end == std::string_view::npos) throw ParseError("unterminated comment", i);
      i = end + 2;
      continue;
    }
    std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '\\') {
      ++i;
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_'))
        ++i;
      out.push_back({Tok::Ident, std::string(src.substr(start, i - start)), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      if (i + 1 < src.size() && src[i] == '.' && std::isdigit(static_cast<unsigned char>(src[i + 1]))) {
        ++i;
        while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      }
      out.push_back({Tok::Number, std::string(src.substr(start, i - start)), start});
      continue;
    }
    if (c == '"') {
      ++i;
      while (i < src.size() && src[i] != '"') ++i;
      if (i >= src.size()) throw ParseError("unterminated string", start);
      out.push_back({Tok::String, std::string(src.substr(start + 1, i - start - 1)), start});
      ++i;
      continue;
    }
    bool matched = false;
    for (const char* m : multi) {
      if (src.substr(i, 2) == m) {
        out.push_back({Tok::Sym, m, start});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    out.push_back({Tok::Sym, std::string(1, c), start});
    ++i;
  }
  out.push_back({Tok::End, "", src.size()});
  return out;
}

// ---------------------------------------------------------------- parsing

class Parser {
 public:
  Parser(std::string_view src, ReadOptions opts) : toks_(lex(src)), opts_(opts) {}

  bool at_end() const { return peek().kind == Tok::End; }
  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  bool is_sym(std::string_view s, std::size_t k = 0) const {
    return peek(k).kind == Tok::Sym && peek(k).text == s;
  }
  bool is_ident(std::string_view s, std::size_t k = 0) const {
    return peek(k).kind == Tok::Ident && peek(k).text == s;
  }
  bool accept_sym(std::string_view s) {
    if (!is_sym(s)) return false;
    ++pos_;
    return true;
  }
  void expect_sym(std::string_view s) {
    if (!accept_sym(s)) fail("expected '" + std::string(s) + "'");
  }
  void expect_ident(std::string_view s) {
    if (!is_ident(s)) fail("expected '" + std::string(s) + "'");
    ++pos_;
  }
  std::string ident() {
    if (peek().kind != Tok::Ident || peek().text[0] == '\\') fail("expected identifier");
    return toks_[pos_++].text;
  }
  std::string string_lit() {
    if (peek().kind != Tok::String) fail("expected string");
    return toks_[pos_++].text;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    std::string got = peek().kind == Tok::End ? "end of input" : "'" + peek().text + "'";
    throw ParseError(msg + ", got " + got, peek().offset);
  }

  // terms
  Term term() {
    Term acc = product();
    while (is_sym("+") || is_sym("-")) {
      ArithOp op = is_sym("+") ? ArithOp::Add : ArithOp::Sub;
      ++pos_;
      acc = arith(op, acc, product());
    }
    return acc;
  }
  Term product() {
    Term acc = unary_term();
    while (is_sym("*") || is_sym("/")) {
      ArithOp op = is_sym("*") ? ArithOp::Mul : ArithOp::Div;
      ++pos_;
      Term rhs = unary_term();
      if (op == ArithOp::Div) {
        if (auto* l = as<Lit>(rhs); l && l->value.is_zero()) fail("division by literal zero");
      }
      acc = arith(op, acc, rhs);
    }
    return acc;
  }
  Term unary_term() {
    if (accept_sym("-")) return neg(unary_term());
    return primary_term();
  }
  Term primary_term() {
    if (peek().kind == Tok::Number) return num(Rational::parse_decimal(toks_[pos_++].text));
    if (accept_sym("(")) {
      Term t = term();
      expect_sym(")");
      return t;
    }
    if (peek().kind == Tok::Ident && peek().text[0] != '\\' && !is_keyword(peek().text))
      return var(ident());
    fail("expected term");
  }

  static bool is_keyword(const std::string& s) { return s == "true" || s == "false"; }

  // formulas
  Formula formula() {
    Formula lhs = disjunction();
    if (accept_sym("->")) return implies(lhs, formula());
    return lhs;
  }
  Formula disjunction() {
    Formula lhs = conjunction();
    if (accept_sym("|") || accept_sym("||")) return lor(lhs, disjunction());
    return lhs;
  }
  Formula conjunction() {
    Formula lhs = unary_formula();
    if (accept_sym("&") || accept_sym("&&")) return land(lhs, conjunction());
    return lhs;
  }
  Formula unary_formula() {
    if (accept_sym("!")) return lnot(unary_formula());
    if (accept_sym("[")) {
      Program p = program();
      expect_sym("]");
      return box(p, unary_formula());
    }
    if (is_ident("\\exists")) {
      ++pos_;
      std::string v = ident();
      return exists(v, unary_formula());
    }
    if (is_ident("true")) {
      ++pos_;
      return tru();
    }
    if (is_ident("false")) {
      ++pos_;
      return fls();
    }
    if (is_sym("(")) {
      // either a parenthesised formula or a comparison starting with a
      // parenthesised term; try the comparison first
      std::size_t save = pos_;
      try {
        return comparison();
      } catch (const ParseError&) {
        pos_ = save;
      }
      expect_sym("(");
      Formula f = formula();
      expect_sym(")");
      return f;
    }
    return comparison();
  }
  Formula comparison() {
    Term l = term();
    Rel rel;
    if (accept_sym("<="))
      rel = Rel::Le;
    else if (accept_sym(">="))
      rel = Rel::Ge;
    else if (accept_sym("="))
      rel = Rel::Eq;
    else if (accept_sym("<"))
      rel = Rel::Lt;
    else if (accept_sym(">"))
      rel = Rel::Gt;
    else
      fail("expected comparison operator");
    return cmp(rel, l, term());
  }

  // programs
  Program program() {
    Program lhs = sequence();
    if (accept_sym("++")) return choice(lhs, program());
    return lhs;
  }
  bool starts_atomic() const {
    if (is_sym("?") || is_sym("{")) return true;
    return peek().kind == Tok::Ident && peek().text[0] != '\\' &&
           (is_sym(":=", 1) || (opts_.eq_assign && is_sym("=", 1)));
  }
  Program sequence() {
    std::vector<Program> parts;
    parts.push_back(atomic());
    while (starts_atomic()) parts.push_back(atomic());
    // keep explicit grouping: fold from the right
    return seq(parts);
  }
  Program atomic() {
    if (accept_sym("?")) {
      Formula f = formula();
      expect_sym(";");
      return test(f);
    }
    if (accept_sym("{")) {
      Program body;
      if (peek().kind == Tok::Ident && is_sym("'", 1)) {
        body = ode_body();
        expect_sym("}");
        accept_sym(";");
        return body;
      }
      body = program();
      expect_sym("}");
      if (accept_sym("*")) body = loop(body);
      accept_sym(";");
      return body;
    }
    std::string v = ident();
    if (!accept_sym(":=")) {
      if (!(opts_.eq_assign && accept_sym("="))) fail("expected ':='");
    }
    if (accept_sym("*")) {
      expect_sym(";");
      return havoc(v);
    }
    Term t = term();
    expect_sym(";");
    return assign(v, t);
  }
  Program ode_body() {
    std::vector<OdeEquation> eqs;
    do {
      std::string x = ident();
      expect_sym("'");
      expect_sym("=");
      for (const auto& e : eqs)
        if (e.first == x) fail("duplicate ODE variable " + x);
      eqs.emplace_back(x, term());
    } while (accept_sym(","));
    Formula dom = tru();
    if (accept_sym("&")) dom = formula();
    return ode(std::move(eqs), dom);
  }

  // archives
  std::vector<ArchiveEntry> archive() {
    std::vector<ArchiveEntry> out;
    while (!at_end()) {
      if (!is_ident("ArchiveEntry") && !is_ident("Theorem") && !is_ident("Lemma"))
        fail("expected ArchiveEntry");
      ++pos_;
      ArchiveEntry e;
      e.name = string_lit();
      if (is_ident("ProgramVariables")) {
        ++pos_;
        while (!is_ident("End")) {
          expect_ident("Real");
          e.variables.push_back(ident());
          while (accept_sym(",")) e.variables.push_back(ident());
          expect_sym(";");
        }
        end_block();
      }
      expect_ident("Problem");
      e.problem = formula();
      end_block();
      end_block();
      out.push_back(std::move(e));
    }
    return out;
  }
  void end_block() {
    expect_ident("End");
    expect_sym(".");
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  ReadOptions opts_;
};

template <typename R, typename F>
R parse_all(std::string_view text, ReadOptions opts, F f) {
  Parser p(text, opts);
  R r = f(p);
  if (!p.at_end()) p.fail("trailing input");
  return r;
}

}  // namespace

std::string render(const Term& t) {
  std::ostringstream os;
  render_term(t, os);
  return os.str();
}

std::string render(const Formula& f) {
  std::ostringstream os;
  render_formula(f, os);
  return os.str();
}

std::string render(const Program& p) {
  std::ostringstream os;
  render_program(p, os);
  return os.str();
}

Term parse_term(std::string_view text) {
  return parse_all<Term>(text, {}, [](Parser& p) { return p.term(); });
}

Formula parse_formula(std::string_view text, ReadOptions opts) {
  return parse_all<Formula>(text, opts, [](Parser& p) { return p.formula(); });
}

Program parse_program(std::string_view text, ReadOptions opts) {
  return parse_all<Program>(text, opts, [](Parser& p) { return p.program(); });
}

std::string render_keymaerax(const std::string& name, const Formula& assumptions,
                             const Formula& goal, const std::set<std::string>& declared) {
  for (const Formula* f : {&assumptions, &goal}) {
    for (const auto& v : free_variables(*f))
      if (!declared.count(v)) throw std::invalid_argument("undeclared variable " + v + " in " + name);
  }
  std::ostringstream os;
  os << "ArchiveEntry \"" << name << "\"\n\n";
  os << "ProgramVariables\n";
  for (const auto& v : declared) os << "  Real " << v << ";\n";
  os << "End.\n\n";
  os << "Problem\n";
  os << "  " << render(implies(assumptions, goal)) << "\n";
  os << "End.\n\n";
  os << "End.\n";
  return os.str();
}

std::vector<ArchiveEntry> parse_archive(std::string_view text) {
  Parser p(text, {});
  return p.archive();
}

}  // namespace hvc::dl
