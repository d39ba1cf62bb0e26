#include <cmath>

#include "doctest.h"
#include "hvc/conc/conc.hpp"
#include "hvc/dl/kyx.hpp"
#include "../support/corpus.hpp"

using namespace hvc;
using namespace hvc::conc;

namespace {

ConcurrentProgram tank() { return parse_concurrent(testing::read_file("corpus/tank.conc")); }

dl::Formula inv() { return dl::parse_formula("3 <= level & level <= 10"); }

}  // namespace

TEST_CASE("parse the tank") {
  auto p = tank();
  REQUIRE(p.procedures.size() == 2);
  CHECK(p.procedures[0].name == "up");
  CHECK(p.procedures[1].body == dl::parse_program("drain := 1;"));
  CHECK(p.init.at("level") == 5);
  CHECK(p.init.at("drain") == -1);
  REQUIRE(p.inv);
  CHECK(*p.inv == inv());

  CHECK_THROWS_AS(parse_concurrent("prcd a: ?x >= 1 { x := 0 }"), std::invalid_argument);
  CHECK_THROWS_AS(parse_concurrent("dyn { x' = 1 }\nprcd a: ?x > 1 { x := 0 }"), std::invalid_argument);
  CHECK_THROWS_AS(parse_concurrent("dyn { x' = 1 }\nprcd a: ?x >= 1 { {x' = 2} }"), std::invalid_argument);
  CHECK_THROWS_AS(parse_concurrent("dyn { x' = 1 & x <= 2 }"), std::invalid_argument);
}

TEST_CASE("urgent then execute") {
  auto p = tank();
  ConcurrentSimulator sim(p, {});
  ConcurrentState s{0, {{"level", 4}, {"drain", -1}}};
  auto a = sim.step(s);
  REQUIRE(a);
  CHECK(a->rule == "urgent");
  CHECK(a->after.clock == doctest::Approx(1).epsilon(1e-9));
  CHECK(a->after.val.at("level") == doctest::Approx(3).epsilon(1e-9));
  auto b = sim.step(a->after);
  REQUIRE(b);
  CHECK(b->rule == "execute");
  CHECK(b->procedure == "down");
  CHECK(b->after.clock == a->after.clock);
  CHECK(b->after.val.at("drain") == 1);
  // the guard still holds but running the body again changes nothing
  auto c = sim.step(b->after);
  REQUIRE(c);
  CHECK(c->rule == "urgent");
  CHECK(c->after.clock == doctest::Approx(8).epsilon(1e-9));
  CHECK(c->after.val.at("level") == doctest::Approx(10).epsilon(1e-9));
}

TEST_CASE("final when no guard is reached") {
  auto p = parse_concurrent("dyn { x' = 1 }\nprcd a: ?x <= -1 { x := 0 }");
  ConcOptions o;
  o.horizon = 5;
  ConcurrentSimulator sim(p, o);
  auto r = sim.run({{"x", 0}});
  CHECK(r.final);
  CHECK(r.steps.empty());
}

TEST_CASE("failing bodies") {
  auto p = parse_concurrent("dyn { x' = 1 }\nprcd a: ?x >= 0 { ?x <= -1; x := 2 }");
  ConcurrentSimulator sim(p, {});
  CHECK_THROWS_AS(sim.step({0, {{"x", 0}}}), std::runtime_error);
}

TEST_CASE("choice and loops in bodies") {
  auto p = parse_concurrent("dyn { x' = 1 }\nprcd a: ?x >= 1 { {?x <= 0; x := 5; ++ x := 0;} }");
  ConcurrentSimulator sim(p, {});
  auto s = sim.step({0, {{"x", 1}}});
  REQUIRE(s);
  CHECK(s->rule == "execute");
  CHECK(s->after.val.at("x") == 0);

  auto q = parse_concurrent("dyn { x' = 1 }\nprcd a: ?x >= 1 { {x := x - 1;}* }");
  ConcOptions o;
  o.policy = Policy::Random;
  o.seed = 3;
  ConcurrentSimulator rs(q, o);
  int executed = 0;
  for (int i = 0; i < 20; ++i) {
    auto st = rs.step({0, {{"x", 4}}});
    if (!st) continue;  // zero iterations stutter and nothing else is enabled
    ++executed;
    CHECK(st->rule == "execute");
    double x = st->after.val.at("x");
    CHECK(x >= 1);
    CHECK(x < 4);
  }
  CHECK(executed > 0);
  CHECK(!ConcurrentSimulator(q, {}).step({0, {{"x", 4}}}));
}

TEST_CASE("reachable states of the tank stay in the band") {
  auto p = tank();
  auto samples = reachable_sample(p, p.init, 50, 1e-2);
  CHECK(samples.size() > 4000);
  double lo = 1e9, hi = -1e9;
  for (const auto& v : samples) {
    lo = std::min(lo, v.at("level"));
    hi = std::max(hi, v.at("level"));
  }
  CHECK(lo >= 3 - 1e-6);
  CHECK(hi <= 10 + 1e-6);
  CHECK(lo == doctest::Approx(3).epsilon(1e-6));
  CHECK(hi == doctest::Approx(10).epsilon(1e-6));
}

TEST_CASE("obligation schemes") {
  auto p = tank();
  auto post = obligations(p, p.init, inv(), Scheme::Postcond);
  REQUIRE(post.size() == 3);
  CHECK(post[0].name == "init");
  CHECK(dl::normalize(post[0].formula) ==
        dl::normalize(dl::parse_formula("level = 5 & drain = -1 -> 3 <= level & level <= 10")));
  CHECK(dl::normalize(post[1].formula) ==
        dl::normalize(dl::parse_formula("3 <= level & level <= 10 -> [?level >= 10; drain := -1;]"
                                        "(3 <= level & level <= 10)")));

  auto basic = obligations(p, p.init, inv(), Scheme::Basic);
  auto shown = dl::parse_formula(
      "3 <= level & level <= 10 -> [?level >= 10; drain := -1;](3 <= level & level <= 10 & "
      "[{level'=drain & true}](3 <= level & level <= 10))");
  CHECK(dl::normalize(basic[1].formula) == dl::normalize(shown));

  // precise differs from basic only in the evolution domain
  auto precise = obligations(p, p.init, inv(), Scheme::Precise);
  auto with_domain = dl::parse_formula(
      "3 <= level & level <= 10 -> [?level >= 10; drain := -1;](3 <= level & level <= 10 & "
      "[{level'=drain & level <= 10 & level >= 3}](3 <= level & level <= 10))");
  CHECK(dl::normalize(precise[1].formula) == dl::normalize(with_domain));

  auto q = parse_concurrent(testing::read_file("corpus/tank_drain.conc"));
  CHECK(dl::normalize(post_region(q)) ==
        dl::normalize(dl::parse_formula("(level >= 3 | drain >= 0) & (level <= 10 | drain <= 0)")));
  auto pq = obligations(q, q.init, inv(), Scheme::Precise);
  auto want = dl::parse_formula(
      "3 <= level & level <= 10 -> [?level <= 3 & drain <= 0; drain := 1;](3 <= level & level <= 10 & "
      "[{level'=drain & (level >= 3 | drain >= 0) & (level <= 10 | drain <= 0)}](3 <= level & level <= 10))");
  CHECK(dl::normalize(pq[2].formula) == dl::normalize(want));
}

TEST_CASE("init literals are exact") {
  auto p = parse_concurrent("dyn { x' = 1 }\nprcd a: ?x >= 1 { x := 0 }");
  auto ob = obligations(p, {{"x", 0.25}}, dl::parse_formula("x >= 0"), Scheme::Postcond);
  CHECK(dl::normalize(ob[0].formula) == dl::normalize(dl::parse_formula("x = 0.25 -> x >= 0")));
  CHECK_THROWS_AS(obligations(p, {}, dl::parse_formula("[x := 1;]x >= 0"), Scheme::Basic), std::invalid_argument);
}
