#include <cmath>

#include "../support/gen_dl.hpp"
#include "doctest.h"
#include "hvc/dl/kyx.hpp"
#include "hvc/dl/ops.hpp"

using namespace hvc;
using namespace hvc::dl;

namespace {
Formula F(std::string_view s) { return parse_formula(s); }
bool same(const Formula& a, const Formula& b) { return normalize(a) == normalize(b); }
}  // namespace

TEST_CASE("rational arithmetic") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(1, -2).to_string() == "-1/2");
  CHECK(Rational::parse_decimal("3.25") == Rational(13, 4));
  CHECK(Rational::parse_decimal("-0.5") == Rational(-1, 2));
  CHECK((Rational(1, 3) + Rational(1, 6)) == Rational(1, 2));
  CHECK(Rational(1, 3) < Rational(1, 2));
  CHECK_THROWS(Rational(1, 0));
  CHECK_THROWS(Rational::parse_decimal("1.2.3"));
}

TEST_CASE("construction invariants") {
  CHECK_THROWS_AS(div(var("x"), num(0)), std::invalid_argument);
  CHECK_THROWS_AS(var(""), std::invalid_argument);
  CHECK_THROWS_AS(ode({{"x", num(1)}, {"x", num(2)}}, tru()), std::invalid_argument);
  CHECK(conj({}) == tru());
  CHECK(conj({F("x <= 1")}) == F("x <= 1"));
  CHECK(conj({F("x <= 1"), F("y <= 1"), F("z <= 1")}) == F("x <= 1 & y <= 1 & z <= 1"));
}

TEST_CASE("weak negation examples") {
  CHECK(weak_negate(F("level <= 3")) == F("level >= 3"));
  CHECK(weak_negate(tru()) == fls());
  CHECK(weak_negate(F("level <= 3 & drain <= 0")) == F("level >= 3 | drain >= 0"));
  CHECK(weak_negate(F("x = 2")) == F("x = 2"));
  CHECK(weak_negate(F("!(x <= 2)")) == F("x <= 2"));
  CHECK_THROWS(weak_negate(F("x < 2")));
  CHECK_THROWS(weak_negate(F("[x := 1;](x <= 2)")));
  CHECK_THROWS(weak_negate(F("\\exists x (x <= 2)")));
}

TEST_CASE("weak negation is an involution") {
  testing::DlGen gen(7);
  for (int i = 0; i < 1000; ++i) {
    Formula f = gen.weak_formula(5);
    CHECK(normalize(weak_negate(weak_negate(f))) == normalize(f));
  }
}

TEST_CASE("atom and its weak negation meet exactly on the boundary") {
  testing::DlGen gen(11);
  for (int i = 0; i < 200; ++i) {
    Term l = gen.term(2), r = gen.term(2);
    Formula a = le(l, r);
    Formula both = land(a, weak_negate(a));
    for (int k = 0; k < 20; ++k) {
      Valuation v;
      for (auto n : {"x", "y", "level", "drain", "v", "rate"}) v[n] = gen.real(-5, 5);
      double lv, rv;
      try {
        lv = evaluate(l, v);
        rv = evaluate(r, v);
      } catch (const std::domain_error&) {
        continue;
      }
      CHECK(evaluate(both, v) == (lv == rv));
    }
  }
}

TEST_CASE("pr construction") {
  Formula inv = F("3 <= x & x <= 10");
  Program o = ode({{"x", var("v")}, {"v", num(0)}}, tru());
  Formula pr = build_pr(F("t <= 1/2"), inv, o);
  CHECK(same(pr, F("3 <= x & x <= 10 & [t := 0; {x'=v, v'=0, t'=1 & t <= 1/2}](3 <= x & x <= 10)")));
  CHECK(same(build_pr(fls(), inv, o),
             F("3 <= x & x <= 10 & [t := 0; {x'=v, v'=0, t'=1 & false}](3 <= x & x <= 10)")));
  CHECK(same(build_pr(tru(), inv, o, PrClock::WhenNeeded),
             F("3 <= x & x <= 10 & [{x'=v, v'=0 & true}](3 <= x & x <= 10)")));
  CHECK(same(build_pr(F("x <= 1"), inv, ode({}, tru()), PrClock::WhenNeeded),
             F("3 <= x & x <= 10 & [?x <= 1;](3 <= x & x <= 10)")));
  CHECK_THROWS(build_pr(tru(), inv, assign("x", num(1))));
  CHECK_THROWS(build_pr(tru(), inv, ode({{"t", num(1)}}, tru())));
}

TEST_CASE("free variables") {
  CHECK(free_variables(F("x <= 3 & y >= 0")) == std::set<std::string>{"x", "y"});
  CHECK(free_variables(F("[x := 5;](x >= 0)")) == std::set<std::string>{"x"});
  CHECK(free_variables(parse_program("{x'=v & v >= 0}")) == std::set<std::string>{"x", "v"});
  CHECK(free_variables(F("\\exists y (x <= y)")) == std::set<std::string>{"x"});
}

TEST_CASE("rendering") {
  CHECK(render(F("a <= 0 -> b <= 1 -> c <= 2")) == "a <= 0 -> b <= 1 -> c <= 2");
  CHECK(render(F("(x <= 1 | y <= 1) & z <= 1")) == "(x <= 1 | y <= 1) & z <= 1");
  CHECK(render(num(Rational(1, 2))) == "1/2");
  CHECK(render(parse_term("x - (y - z)")) == "x - (y - z)");
  CHECK(render(parse_term("(x - y) - z")) == "x - y - z");
  CHECK(render(parse_program("x := 1; {y := 2; ++ y := *;} {z' = y & true}")) ==
        "x := 1; {y := 2; ++ y := *;} {z'=y & true}");
}

TEST_CASE("keymaera archive entry") {
  Formula inv = F("3 <= level");
  Formula goal = F("[drain := 1;](cll = 0 & 3 <= level)");
  std::string text = render_keymaerax("Tank.up", inv, goal, {"level", "drain", "t", "cll"});
  for (auto v : {"level", "drain", "t", "cll"})
    CHECK(text.find(std::string("Real ") + v + ";") != std::string::npos);
  auto entries = parse_archive(text);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].name == "Tank.up");
  CHECK(entries[0].problem == implies(inv, goal));
  CHECK_THROWS_AS(render_keymaerax("m", F("x >= 0"), F("x >= 0"), {}), std::invalid_argument);
}

TEST_CASE("render then parse round trip on random formulas") {
  testing::DlGen gen(2024);
  for (int i = 0; i < 1000; ++i) {
    Formula f = gen.formula(6);
    std::string text = render(f);
    Formula back;
    REQUIRE_NOTHROW(back = parse_formula(text));
    CHECK_MESSAGE(fold_literals(back) == fold_literals(f), text, "\n", render(back));
  }
}

TEST_CASE("normalisation") {
  CHECK(normalize(F("x > 1")) == normalize(F("1 < x")));
  CHECK(normalize(F("b <= 1 & (a <= 1 & true)")) == normalize(F("a <= 1 & b <= 1")));
  CHECK(normalize(F("a <= 1 & a <= 1")) == normalize(F("a <= 1")));
  Program p1 = parse_program("rate := inR; bnd := inB; v := inV;");
  Program p2 = parse_program("bnd := inB; rate := inR; v := inV;");
  CHECK(normalize(p1) == normalize(p2));
  // dependent assignments keep their order
  CHECK(normalize(parse_program("y := x; x := 1;")) != normalize(parse_program("x := 1; y := x;")));
}

TEST_CASE("truth-table equivalence") {
  CHECK(propositionally_equivalent(F("a <= 1 & b >= 2"), F("2 <= b & a <= 1")));
  CHECK(propositionally_equivalent(F("a <= 1 | (b <= 1 & c <= 1)"),
                                   F("(a <= 1 | b <= 1) & (a <= 1 | c <= 1)")));
  CHECK_FALSE(propositionally_equivalent(F("a <= 1"), F("a >= 1")));
}

TEST_CASE("evaluation slack") {
  Valuation v{{"x", 1.0 + 1e-10}};
  CHECK_FALSE(evaluate(F("x <= 1"), v));
  CHECK(evaluate(F("x <= 1"), v, 1e-9));
}
