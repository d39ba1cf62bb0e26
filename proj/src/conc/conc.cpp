#include "hvc/conc/conc.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "hvc/dl/kyx.hpp"
#include "hvc/sim/dynamics.hpp"

namespace hvc::conc {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

std::string trim(std::string_view s) {
  auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string_view::npos) return {};
  auto b = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(a, b - a + 1));
}

// Text between the brace at `open` and its partner; advances `pos` past it.
std::string braced(std::string_view text, std::size_t& pos) {
  if (pos >= text.size() || text[pos] != '{') fail("expected '{'");
  int depth = 0;
  for (std::size_t i = pos; i < text.size(); ++i) {
    if (text[i] == '{') ++depth;
    if (text[i] == '}' && --depth == 0) {
      std::string inner(text.substr(pos + 1, i - pos - 1));
      pos = i + 1;
      return inner;
    }
  }
  fail("unbalanced '{'");
}

void skip_space(std::string_view text, std::size_t& pos) {
  for (;;) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos < text.size() && text[pos] == '#') {
      while (pos < text.size() && text[pos] != '\n') ++pos;
      continue;
    }
    return;
  }
}

std::string word(std::string_view text, std::size_t& pos) {
  std::size_t start = pos;
  while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) ++pos;
  return std::string(text.substr(start, pos - start));
}

dl::Program program_text(const std::string& body) {
  std::string b = trim(body);
  if (b.empty()) return dl::skip();
  if (b.back() != ';' && b.back() != '}') b += ';';
  return dl::parse_program(b, dl::ReadOptions{true});
}

bool has_ode(const dl::Program& p) {
  return std::visit(
      [](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, dl::Ode>) return true;
        else if constexpr (std::is_same_v<T, dl::Choice>) return has_ode(n.lhs) || has_ode(n.rhs);
        else if constexpr (std::is_same_v<T, dl::Seq>) return has_ode(n.first) || has_ode(n.second);
        else if constexpr (std::is_same_v<T, dl::Loop>) return has_ode(n.body);
        else return false;
      },
      p.node().v);
}

void check_guard(const dl::Formula& g, const std::string& name) {
  for (const auto& c : dl::conjuncts(g)) {
    if (dl::is_true(c)) continue;
    const auto* cmp = dl::as<dl::Cmp>(c);
    if (!cmp || (cmp->rel != dl::Rel::Le && cmp->rel != dl::Rel::Ge))
      fail("guard of '" + name + "' must be a conjunction of weak inequalities");
  }
}

habs::Expr to_expr(const dl::Term& t) {
  return std::visit(
      [](const auto& n) -> habs::Expr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, dl::Var>) return habs::Expr::variable(n.name);
        else if constexpr (std::is_same_v<T, dl::Lit>) return habs::Expr::number(n.value);
        else if constexpr (std::is_same_v<T, dl::Neg>) return habs::Expr::unary("-", to_expr(n.arg));
        else {
          static const char* ops[] = {"+", "-", "*", "/"};
          return habs::Expr::binary(ops[static_cast<int>(n.op)], to_expr(n.lhs), to_expr(n.rhs));
        }
      },
      t.node().v);
}

Rational exact(double d) {
  char buf[128];
  auto r = std::to_chars(buf, buf + sizeof buf, d, std::chars_format::fixed);
  return Rational::parse_decimal(std::string_view(buf, static_cast<std::size_t>(r.ptr - buf)));
}

}  // namespace

ConcurrentProgram parse_concurrent(std::string_view text) {
  ConcurrentProgram p;
  bool have_dyn = false;
  std::size_t pos = 0;
  for (;;) {
    skip_space(text, pos);
    if (pos >= text.size()) break;
    std::string kw = word(text, pos);
    skip_space(text, pos);
    if (kw == "dyn") {
      if (have_dyn) fail("more than one dyn block");
      std::string inner = trim(braced(text, pos));
      dl::Program d = dl::parse_program("{" + inner + "}");
      const auto* o = dl::as<dl::Ode>(d);
      if (!o) fail("dyn must be an ODE");
      if (!dl::is_true(o->domain)) fail("dyn must not have an evolution domain");
      p.dyn = d;
      have_dyn = true;
    } else if (kw == "prcd") {
      Procedure pr;
      pr.name = word(text, pos);
      if (pr.name.empty()) fail("expected a procedure name");
      skip_space(text, pos);
      if (pos >= text.size() || text[pos] != ':') fail("expected ':' after procedure '" + pr.name + "'");
      ++pos;
      skip_space(text, pos);
      if (pos >= text.size() || text[pos] != '?') fail("expected '?' guard for procedure '" + pr.name + "'");
      std::size_t brace = text.find('{', pos);
      if (brace == std::string_view::npos) fail("expected body of procedure '" + pr.name + "'");
      pr.guard = dl::parse_formula(trim(text.substr(pos + 1, brace - pos - 1)));
      check_guard(pr.guard, pr.name);
      pos = brace;
      pr.body = program_text(braced(text, pos));
      if (has_ode(pr.body)) fail("body of '" + pr.name + "' contains an ODE");
      for (const auto& q : p.procedures)
        if (q.name == pr.name) fail("duplicate procedure '" + pr.name + "'");
      p.procedures.push_back(std::move(pr));
    } else if (kw == "init") {
      std::string inner = braced(text, pos);
      for (char& c : inner)
        if (c == ',') c = ';';
      dl::Program a = program_text(inner);
      // a sequence of constant assignments
      std::vector<dl::Program> todo{a};
      while (!todo.empty()) {
        dl::Program q = todo.back();
        todo.pop_back();
        if (const auto* s = dl::as<dl::Seq>(q)) {
          todo.push_back(s->second);
          todo.push_back(s->first);
        } else if (const auto* as = dl::as<dl::Assign>(q)) {
          p.init[as->var] = dl::evaluate(as->value, p.init);
        } else if (!dl::as<dl::Test>(q)) {
          fail("init must be a list of assignments");
        }
      }
    } else if (kw == "inv") {
      p.inv = dl::parse_formula(trim(braced(text, pos)));
    } else {
      fail("unexpected '" + (kw.empty() ? std::string(1, text[pos]) : kw) + "'");
    }
  }
  if (!have_dyn) fail("missing dyn block");
  return p;
}

// ---- semantics

ConcurrentSimulator::ConcurrentSimulator(const ConcurrentProgram& p, ConcOptions opts)
    : prog_(p), opts_(opts), rng_(opts.seed) {}

bool ConcurrentSimulator::holds(const dl::Formula& f, const dl::Valuation& v) const {
  return dl::evaluate(f, v, opts_.slack);
}

namespace {

sim::Dynamics solve(const dl::Program& dyn, const dl::Valuation& v, double step) {
  std::vector<habs::PhysDecl> decls;
  for (const auto& [x, rhs] : dl::as<dl::Ode>(dyn)->equations) {
    habs::PhysDecl d;
    d.name = x;
    d.deriv = to_expr(rhs);
    decls.push_back(std::move(d));
  }
  sim::Store s;
  for (const auto& [k, x] : v) s[k] = sim::Value::number(x);
  return sim::solve_ode(decls, s, sim::SolverOptions{step, false});
}

dl::Valuation at(const sim::Dynamics& d, dl::Valuation v, double t) {
  for (const auto& f : d.fields()) v[f] = d.value(f, t);
  return v;
}

}  // namespace

dl::Valuation ConcurrentSimulator::flow(const dl::Valuation& v, double dt) const {
  return at(solve(prog_.dyn, v, opts_.step), v, dt);
}

std::optional<dl::Valuation> ConcurrentSimulator::exec(const dl::Program& prog, dl::Valuation v) {
  return std::visit(
      [&](const auto& n) -> std::optional<dl::Valuation> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, dl::Assign>) {
          v[n.var] = dl::evaluate(n.value, v);
          return v;
        } else if constexpr (std::is_same_v<T, dl::Havoc>) {
          if (opts_.random_havoc) v[n.var] = std::normal_distribution<double>(v[n.var], 1.0)(rng_);
          return v;
        } else if constexpr (std::is_same_v<T, dl::Test>) {
          if (dl::evaluate(n.cond, v)) return v;
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, dl::Seq>) {
          auto a = exec(n.first, std::move(v));
          if (!a) return std::nullopt;
          return exec(n.second, std::move(*a));
        } else if constexpr (std::is_same_v<T, dl::Choice>) {
          bool left_first = opts_.policy == Policy::Deterministic || std::bernoulli_distribution(0.5)(rng_);
          const dl::Program& a = left_first ? n.lhs : n.rhs;
          const dl::Program& b = left_first ? n.rhs : n.lhs;
          if (auto r = exec(a, v)) return r;
          return exec(b, v);
        } else if constexpr (std::is_same_v<T, dl::Loop>) {
          int times = opts_.policy == Policy::Deterministic ? 0 : std::uniform_int_distribution<int>(0, 3)(rng_);
          for (int i = 0; i < times; ++i) {
            auto r = exec(n.body, v);
            if (!r) break;
            v = std::move(*r);
          }
          return v;
        } else {
          throw std::runtime_error("procedure bodies cannot contain ODEs");
        }
      },
      prog.node().v);
}

std::optional<ConcStep> ConcurrentSimulator::step(const ConcurrentState& s) {
  std::vector<std::size_t> order(prog_.procedures.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (opts_.policy == Policy::Random) std::shuffle(order.begin(), order.end(), rng_);
  // Procedures enabled now whose body leaves the state unchanged stutter.
  // They are left out of the urgent search below until the next step.
  std::vector<bool> stuck(prog_.procedures.size(), false);
  bool enabled = false, succeeded = false;
  for (std::size_t i : order) {
    const Procedure& pr = prog_.procedures[i];
    if (!holds(pr.guard, s.val)) continue;
    enabled = true;
    stuck[i] = true;
    auto next = exec(pr.body, s.val);
    if (!next) continue;
    succeeded = true;
    if (*next == s.val) continue;
    return ConcStep{"execute", pr.name, s, ConcurrentState{s.clock, std::move(*next)}};
  }
  if (enabled && !succeeded) throw std::runtime_error("every enabled procedure body fails at clock " + std::to_string(s.clock));

  auto dyn = solve(prog_.dyn, s.val, opts_.step);
  if (!dyn.evolves()) return std::nullopt;
  auto some_guard = [&](double t) {
    if (t <= 0) return false;
    dl::Valuation v = at(dyn, s.val, t);
    for (std::size_t i = 0; i < stuck.size(); ++i)
      if (!stuck[i] && holds(prog_.procedures[i].guard, v)) return true;
    return false;
  };
  double remaining = opts_.horizon - s.clock;
  if (remaining <= 0) return std::nullopt;
  auto t = sim::first_true(some_guard, opts_.step, remaining + opts_.step);
  if (!t || s.clock + *t > opts_.horizon) return std::nullopt;
  return ConcStep{"urgent", "", s, ConcurrentState{s.clock + *t, at(dyn, s.val, *t)}};
}

ConcurrentSimulator::Run ConcurrentSimulator::run(const dl::Valuation& sigma0) {
  Run r;
  ConcurrentState s{0, sigma0};
  std::size_t instant = 0;
  for (;;) {
    auto st = step(s);
    if (!st) {
      r.final = true;
      break;
    }
    instant = st->rule == "urgent" ? 0 : instant + 1;
    if (instant > opts_.instant_cap) {
      r.capped = true;
      break;
    }
    s = st->after;
    r.steps.push_back(std::move(*st));
  }
  r.last = s;
  return r;
}

std::vector<dl::Valuation> reachable_sample(const ConcurrentProgram& p, const dl::Valuation& sigma0, double horizon,
                                            double step, ConcOptions opts) {
  opts.horizon = horizon;
  ConcurrentSimulator sim(p, opts);
  auto r = sim.run(sigma0);
  std::vector<dl::Valuation> out{sigma0};
  auto between = [&](const ConcurrentState& from, double until) {
    auto dyn = solve(p.dyn, from.val, opts.step);
    for (std::size_t k = 1;; ++k) {
      double t = static_cast<double>(k) * step;
      if (from.clock + t >= until) break;
      out.push_back(at(dyn, from.val, t));
    }
  };
  for (const auto& st : r.steps) {
    if (st.rule == "urgent") between(st.before, st.after.clock);
    out.push_back(st.after.val);
  }
  if (r.final) {
    between(r.last, horizon);
    out.push_back(sim.flow(r.last.val, horizon - r.last.clock));
  }
  return out;
}

// ---- obligations

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Postcond: return "postcond";
    case Scheme::Basic: return "basic";
    case Scheme::Precise: return "precise";
  }
  return "?";
}

dl::Formula post_region(const ConcurrentProgram& p) {
  std::vector<dl::Formula> parts;
  for (const auto& pr : p.procedures) parts.push_back(dl::weak_negate(pr.guard));
  return dl::conj(parts);
}

std::vector<ConcObligation> obligations(const ConcurrentProgram& p, const dl::Valuation& sigma0,
                                        const dl::Formula& inv, Scheme scheme) {
  if (dl::contains_modality(inv)) throw std::invalid_argument("invariant must be modality-free");
  dl::Formula post = inv;
  if (scheme != Scheme::Postcond) {
    const auto* o = dl::as<dl::Ode>(p.dyn);
    dl::Formula domain = scheme == Scheme::Basic ? dl::tru() : post_region(p);
    post = dl::land(inv, dl::box(dl::ode(o->equations, domain), inv));
  }
  std::vector<dl::Formula> init;
  for (const auto& [x, v] : sigma0) init.push_back(dl::eq(dl::var(x), dl::num(exact(v))));
  std::vector<ConcObligation> out;
  out.push_back({"init", dl::implies(dl::conj(init), post)});
  for (const auto& pr : p.procedures)
    out.push_back({pr.name, dl::implies(inv, dl::box(dl::seq(dl::test(pr.guard), pr.body), post))});
  return out;
}

}  // namespace hvc::conc
