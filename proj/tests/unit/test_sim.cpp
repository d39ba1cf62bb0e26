#include <cmath>
#include <random>

#include "doctest.h"
#include "hvc/analysis/analysis.hpp"
#include "hvc/dl/kyx.hpp"
#include "hvc/habs/parser.hpp"
#include "hvc/sim/sim.hpp"
#include "hvc/vcg/vcg.hpp"
#include "../support/corpus.hpp"

using namespace hvc;
using namespace hvc::sim;
using hvc::testing::load;

namespace {

habs::PhysDecl phys(const std::string& name, const std::string& deriv) {
  habs::PhysDecl p;
  p.name = name;
  p.deriv = habs::parse_expression(deriv);
  return p;
}

Store store(std::initializer_list<std::pair<const char*, double>> kv) {
  Store s;
  for (const auto& [k, v] : kv) s[k] = Value::number(v);
  return s;
}

SimOptions opts(double horizon) {
  SimOptions o;
  o.horizon = horizon;
  return o;
}

habs::Program program(const std::string& src) { return habs::normalize(habs::parse_program(src)); }

int object_of(const Configuration& c, const std::string& cls) {
  for (const auto& o : c.objects)
    if (o.class_name() == cls) return o.id;
  return -1;
}

// Clock 1, level 4, drain -1, up and down queued: the starting point of the
// worked semantics example.
Configuration example_start(Simulator& s) {
  Configuration c = s.initial();
  while (s.step_discrete(c)) {
  }
  Object& tank = c.objects[static_cast<std::size_t>(object_of(c, "Tank"))];
  c.clock = 1;
  tank.rho["level"] = Value::number(4);
  s.resolve(tank);
  return c;
}

}  // namespace

TEST_CASE("expressions read physical fields through the dynamics") {
  auto dyn = solve_ode({phys("level", "drain"), phys("drain", "0")}, store({{"level", 4}, {"drain", -1}}));
  CHECK(eval_expr(habs::parse_expression("level"), dyn.initial(), dyn, 1).real() == doctest::Approx(3));
  CHECK(eval_expr(habs::parse_expression("drain"), dyn.initial(), dyn, 7.5).real() == -1);
  auto d5 = solve_ode({phys("level", "drain"), phys("drain", "0")}, store({{"level", 5}, {"drain", -1}}));
  CHECK(eval_expr(habs::parse_expression("2*level - drain"), d5.initial(), d5, 0).real() == 11);
  CHECK_THROWS_AS(eval_expr(habs::parse_expression("level / 0"), d5.initial(), d5, 0), SimError);
  CHECK_THROWS_AS(eval_expr(habs::parse_expression("nope + 1"), d5.initial(), d5, 0), SimError);
}

TEST_CASE("maximal time elapse of guards") {
  auto dyn = solve_ode({phys("level", "drain"), phys("drain", "0")}, store({{"level", 4}, {"drain", -1}}));
  auto diff = [](const std::string& e) { return habs::Guard{habs::Guard::Kind::Diff, habs::parse_expression(e)}; };
  MteOptions o;
  o.horizon = 100;
  CHECK(std::fabs(mte_guard(diff("level <= 3"), dyn.initial(), {}, dyn, o) - 1) < 1e-9);
  CHECK(mte_guard(diff("true"), dyn.initial(), {}, dyn, o) == 0);
  CHECK(mte_guard(diff("level >= 10"), dyn.initial(), {}, dyn, o) == kInfinity);
  habs::Guard dur{habs::Guard::Kind::Duration, habs::parse_expression("1/2")};
  CHECK(mte_guard(dur, dyn.initial(), {}, dyn, o) == 0.5);
}

TEST_CASE("closed-form solutions") {
  auto tank = solve_ode({phys("level", "drain"), phys("drain", "0")}, store({{"level", 5}, {"drain", -1}}));
  CHECK(tank.closed_form());
  CHECK(tank.value("level", 2.5) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(tank.value("drain", 2.5) == -1);
  auto ball = solve_ode({phys("x", "v"), phys("v", "a"), phys("a", "0")}, store({{"x", 5}, {"v", 0}, {"a", 9.81}}));
  for (double t : {0.0, 0.5, 1.0, 3.25}) CHECK(std::fabs(ball.value("x", t) - (5 + 4.905 * t * t)) < 1e-12);
  // not nilpotent: v' = rate * (bnd - v) with constant rate and bound
  auto growth = solve_ode({phys("v", "rate * (bnd - v)"), phys("rate", "0"), phys("bnd", "0")},
                          store({{"v", 1}, {"rate", 0.5}, {"bnd", 4}}));
  CHECK(growth.closed_form());
  for (double t : {0.1, 1.0, 4.0, 9.0}) CHECK(std::fabs(growth.value("v", t) - (4 - 3 * std::exp(-0.5 * t))) < 1e-12);
}

TEST_CASE("property: integrator agrees with closed form on linear systems") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int sys = 0; sys < 20; ++sys) {
    // x' = a*x + b*y + c, y' = d*x + e*y with small coefficients
    double a = u(rng) / 2, b = u(rng) / 2, c = u(rng), d = u(rng) / 2, e = u(rng) / 2;
    auto num = [](double v) { return "(" + format_number(v) + ")"; };
    std::vector<habs::PhysDecl> ode{phys("x", num(a) + "*x + " + num(b) + "*y + " + num(c)),
                                    phys("y", num(d) + "*x + " + num(e) + "*y")};
    Store init = store({{"x", u(rng)}, {"y", u(rng)}});
    auto closed = solve_ode(ode, init);
    auto numeric = solve_ode(ode, init, SolverOptions{1e-3, true});
    REQUIRE(closed.closed_form());
    REQUIRE_FALSE(numeric.closed_form());
    double worst = 0;
    for (int k = 0; k < 1000; ++k) {
      double t = 0.003 * k + 0.0007;
      worst = std::max(worst, std::fabs(closed.value("x", t) - numeric.value("x", t)));
      worst = std::max(worst, std::fabs(closed.value("y", t) - numeric.value("y", t)));
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("property: Lotka-Volterra first integral is conserved") {
  const double alpha = 1.1, beta = 0.04, delta = 0.01, gamma = 0.4;
  std::vector<habs::PhysDecl> ode{phys("x", "alpha*x - beta*x*y"), phys("y", "delta*y*x - gamma*y")};
  Store init = store({{"x", 100}, {"y", 10}, {"alpha", alpha}, {"beta", beta}, {"delta", delta}, {"gamma", gamma}});
  auto dyn = solve_ode(ode, init);
  CHECK_FALSE(dyn.closed_form());
  auto integral = [&](double x, double y) {
    return delta * x - gamma * std::log(x) + beta * y - alpha * std::log(y);
  };
  double v0 = integral(100, 10), worst = 0;
  for (int k = 0; k <= 1000; ++k) {
    double t = 0.01 * k;
    worst = std::max(worst, std::fabs(integral(dyn.value("x", t), dyn.value("y", t)) - v0));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("worked semantics example: (ii), (3), (7)") {
  auto p = load("tank.habs");
  Simulator s(p, SimOptions{});
  Configuration c = example_start(s);
  int tank = object_of(c, "Tank");
  REQUIRE(c.objects[static_cast<std::size_t>(tank)].queue.size() == 2);
  CHECK_FALSE(s.step_discrete(c));
  auto t1 = s.step_timed(c);
  REQUIRE(t1);
  CHECK(t1->rule == "ii");
  CHECK(c.clock == doctest::Approx(2).epsilon(1e-9));
  CHECK(c.objects[static_cast<std::size_t>(tank)].rho["level"].num == doctest::Approx(3).epsilon(1e-9));
  auto t2 = s.step_discrete(c);
  REQUIRE(t2);
  CHECK(t2->rule == "3");
  CHECK(t2->member == "down");
  CHECK(t2->nontrivial);
  auto t3 = s.step_discrete(c);
  REQUIRE(t3);
  CHECK(t3->rule == "7");
  REQUIRE(c.messages.size() == 1);
  CHECK(c.messages[0].method == "triggered");
  CHECK(c.messages[0].callee == object_of(c, "Log"));

  // trace of the prefix: level(t) = 4 - (t - 1) on [1, 2]
  Run r = s.run_from(example_start(s));
  Trace tr = extract_trace(r, tank);
  CHECK(tr.at(1.5).at("level").num == doctest::Approx(3.5));
}

TEST_CASE("tank run: band [3,10], events every 7 time units") {
  auto p = load("tank.habs");
  SimOptions o;
  o.horizon = 100;
  Simulator s(p, o);
  Run r = s.run();
  CHECK(r.status == Run::Status::Horizon);
  std::vector<double> events;
  for (const auto& st : r.steps)
    if (st.rule == "3" && (st.member == "up" || st.member == "down")) events.push_back(st.clock);
  REQUIRE(events.size() == 15);
  for (std::size_t k = 0; k < events.size(); ++k) CHECK(std::fabs(events[k] - (2 + 7.0 * k)) < 1e-6);
  int tank = object_of(r.configs.back(), "Tank");
  Trace tr = extract_trace(r, tank);
  double lo = 1e9, hi = -1e9;
  for (int k = 0; k <= 100000; ++k) {
    double v = tr.at(k * 1e-3).at("level").num;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= 3 - 1e-6);
  CHECK(hi <= 10 + 1e-6);
  CHECK(lo < 3 + 1e-3);
  CHECK(hi > 10 - 1e-3);
}

TEST_CASE("runs are deterministic under a fixed policy and seed") {
  auto p = load("tank.habs");
  SimOptions o;
  o.horizon = 30;
  CHECK(Simulator(p, o).run().log() == Simulator(p, o).run().log());
  o.policy = PolicyKind::Random;
  o.seed = 7;
  std::string a = Simulator(p, o).run().log();
  CHECK(a == Simulator(p, o).run().log());
  // random schedules still keep the tank in its band
  Run r = Simulator(p, o).run();
  Trace tr = extract_trace(r, object_of(r.configs.back(), "Tank"));
  for (int k = 0; k <= 3000; ++k) {
    double v = tr.at(k * 1e-2).at("level").num;
    CHECK((v >= 3 - 1e-6 && v <= 10 + 1e-6));
  }
}

TEST_CASE("run invariants: clock monotone, one active process, futures resolved once") {
  for (const char* f : {"tank.habs", "tank_tick.habs", "billard.habs", "patches.habs"}) {
    auto p = load(f);
    SimOptions o;
    o.horizon = 20;
    Run r = Simulator(p, o).run();
    CAPTURE(f);
    CHECK(r.status == Run::Status::Horizon);
    std::set<int> resolved;
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
      CHECK(r.configs[i + 1].clock >= r.configs[i].clock);
      if (r.steps[i].rule == "ii") {
        CHECK(r.configs[i + 1].clock > r.configs[i].clock);
      } else {
        CHECK(r.configs[i + 1].clock == r.configs[i].clock);
      }
      if (r.steps[i].rule == "5") {
        int fid = std::stoi(r.steps[i].detail.substr(4));
        CHECK(resolved.insert(fid).second);
      }
    }
  }
}

TEST_CASE("empty main and trivial runs") {
  auto p = program("{ }");
  Run r = Simulator(p, SimOptions{}).run();
  CHECK(r.steps.size() == 1);
  CHECK(r.steps[0].rule == "5");
  CHECK(r.status == Run::Status::Final);
}

TEST_CASE("timed tank advances by exactly one half") {
  auto p = load("tank_tick.habs");
  SimOptions o;
  o.horizon = 5;
  Run r = Simulator(p, o).run();
  std::vector<double> clocks;
  for (const auto& st : r.steps)
    if (st.rule == "ii") clocks.push_back(st.clock);
  REQUIRE(clocks.size() == 10);
  for (std::size_t k = 0; k < clocks.size(); ++k) CHECK(clocks[k] == doctest::Approx(0.5 * (k + 1)).epsilon(1e-12));
}

TEST_CASE("blocking duration, late creation and deadlock") {
  auto p = program(R"(
    class A { Real x = 1; Unit m() { await diff false; } }
    { duration(5); A a = new A(); }
  )");
  Run r = Simulator(p, opts(10)).run();
  CHECK(r.status == Run::Status::Final);
  int a = object_of(r.configs.back(), "A");
  Trace tr = extract_trace(r, a);
  CHECK(tr.created == doctest::Approx(5));
  CHECK(tr.at(0).at("x").num == 1);
  CHECK(tr.length() == doctest::Approx(5));

  auto q = program(R"(
    class A { Unit m() { await diff false; } }
    { A a = new A(); Fut<Unit> f = a!m(); Unit u = f.get; }
  )");
  Run d = Simulator(q, opts(10)).run();
  CHECK(d.status == Run::Status::Deadlock);
}

TEST_CASE("zeno guard") {
  auto p = program(R"(
    class Z { Unit init() { skip; } { this!loop(); } Unit loop() { await diff true; this!loop(); } }
    { Z z = new Z(); }
  )");
  SimOptions o;
  o.instant_cap = 500;
  Run r = Simulator(p, o).run();
  CHECK(r.status == Run::Status::StepCap);
  CHECK(r.message.find("Zeno") != std::string::npos);
}

TEST_CASE("scenario scripts") {
  auto calls = parse_script("# c\n\nat 2.5 call b.push(0.5, -0.25)\nat 7 call b.leap()\n");
  REQUIRE(calls.size() == 2);
  CHECK(calls[0].time == 2.5);
  CHECK(calls[0].args.size() == 2);
  CHECK(calls[0].args[1].num == -0.25);
  CHECK(calls[1].args.empty());
  CHECK_THROWS_AS(parse_script("at x call b.m()"), std::invalid_argument);
  CHECK_THROWS_AS(parse_script("at 1 call b.m(1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_script("at 1 call b.m(zz)"), std::invalid_argument);

  auto p = load("billard.habs");
  SimOptions o;
  o.horizon = 30;
  o.script = parse_script(hvc::testing::read_file("corpus/billard.script"));
  Run r = Simulator(p, o).run();
  CHECK(r.status == Run::Status::Horizon);
  std::vector<double> injected;
  for (const auto& st : r.steps)
    if (st.rule == "script") injected.push_back(st.clock);
  CHECK(injected == std::vector<double>{2.5, 7, 11.25, 13, 17.5, 21, 24});
  CHECK(r.log().find("rule=script object=o1 class=Billard member=push") != std::string::npos);
}

TEST_CASE("suspension-subtraces") {
  auto p = load("tank.habs");
  SimOptions o;
  o.horizon = 30;
  Run r = Simulator(p, o).run();
  int tank = object_of(r.configs.back(), "Tank");
  Trace tr = extract_trace(r, tank);
  auto downs = suspension_subtraces(tr, r, {"Tank", "down", 0});
  REQUIRE(downs.size() >= 2);
  // the down process terminating at level 3 is followed by 7 units of rising
  CHECK(downs[0].start == doctest::Approx(2).epsilon(1e-9));
  CHECK(downs[0].duration() == doctest::Approx(7).epsilon(1e-9));
  CHECK(tr.at(downs[0].start).at("level").num == doctest::Approx(3).epsilon(1e-9));
  CHECK(tr.at_left(downs[0].end).at("level").num == doctest::Approx(10).epsilon(1e-9));
  for (const auto& s : suspension_subtraces(tr, r)) CHECK(s.duration() > 0);
  auto all = suspension_subtraces(tr, r);
  CHECK(all.back().open);

  // m1 hands over to m2 without time passing: no subtraces for m1
  auto q = program(R"(
    class M {
      Real x = 0;
      physical { Real y = 0: y' = 1; }
      { this!m1(); }
      Unit m1() { this!m2(); x = 5; }
      Unit m2() { await diff x >= 5; }
    }
    { M m = new M(); }
  )");
  Run rq = Simulator(q, opts(5)).run();
  Trace tq = extract_trace(rq, object_of(rq.configs.back(), "M"));
  CHECK(suspension_subtraces(tq, rq, {"M", "m1", 0}).empty());
  auto m2 = suspension_subtraces(tq, rq, {"M", "m2", 0});
  REQUIRE(m2.size() == 1);
  CHECK(m2[0].open);
}

TEST_CASE("monitor: structural regions hold, a tightened invariant fails") {
  auto p = load("tank.habs");
  SimOptions o;
  o.horizon = 40;
  Run r = Simulator(p, o).run();
  const auto& cls = *p.find_class("Tank");
  auto g = analysis::generator_structural(p);
  auto rep = check_class(r, cls, g, vcg::class_invariant(cls));
  CHECK(rep.ok());
  CHECK(rep.items.size() > 5);

  auto weak = dl::parse_formula("level >= 3 & level <= 9");
  auto bad = check_class(r, cls, g, weak);
  CHECK_FALSE(bad.ok());
  const Counterexample* cx = bad.first();
  REQUIRE(cx);
  CHECK(cx->inv_failed);
  double lvl = cx->state.at("level").num;
  CHECK(lvl > 9);
  CHECK(lvl <= 10 + 1e-6);

  CHECK(monitor(extract_trace(r, 0), r, {}, dl::parse_formula("false"), dl::parse_formula("false")).ok());
}

TEST_CASE("trace export") {
  auto p = load("tank.habs");
  SimOptions o;
  o.horizon = 3;
  Run r = Simulator(p, o).run();
  Trace tr = extract_trace(r, object_of(r.configs.back(), "Tank"));
  std::string tsv = trace_tsv(tr, 0.5);
  CHECK(tsv.rfind("0\tdrain=-1\tlevel=5\n", 0) == 0);
  CHECK(tsv.find("\n1\tdrain=-1\tlevel=4\n") != std::string::npos);
  CHECK(tsv.find("\n2.5\tdrain=1\tlevel=3.5") != std::string::npos);
}

TEST_CASE("post-regions are sound on the corpus runs") {
  struct Case {
    const char* file;
    const char* cls;
    const char* script;
  };
  for (const Case& k : {Case{"tank.habs", "Tank", nullptr}, Case{"tank_tick.habs", "TankTick", nullptr},
                        Case{"billard.habs", "Billard", "corpus/billard.script"}}) {
    CAPTURE(k.file);
    auto p = load(k.file);
    SimOptions o;
    o.horizon = 30;
    if (k.script) o.script = parse_script(hvc::testing::read_file(k.script));
    Run r = Simulator(p, o).run();
    REQUIRE(r.status == Run::Status::Horizon);
    const auto& cls = *p.find_class(k.cls);
    for (auto kind : {analysis::GeneratorKind::Local, analysis::GeneratorKind::Structural}) {
      auto g = analysis::make_generator(p, {kind});
      auto rep = check_class(r, cls, g, vcg::class_invariant(cls));
      CAPTURE(analysis::to_string(kind));
      CHECK(rep.items.size() > 0);
      CHECK(rep.violations() == 0);
      if (const auto* cx = rep.first()) MESSAGE(analysis::to_string(cx->key) << " at " << cx->clock);
    }
  }
}
