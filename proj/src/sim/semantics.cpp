#include "hvc/sim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hvc::sim {

using habs::Stmt;

const Stmt* Process::head_await() const {
  const Item* h = head();
  if (h && h->kind == Item::Kind::Stmt && h->stmt->kind == Stmt::Kind::Await) return h->stmt;
  return nullptr;
}

namespace {

void push_block(std::vector<Item>& rs, const habs::Block& b) {
  for (auto it = b.rbegin(); it != b.rend(); ++it) rs.push_back(Item{Item::Kind::Stmt, &*it, {}, 0});
}

Process make_process(const habs::Block& body, const std::vector<habs::Param>& locals, Store tau, int self, int fid,
                     std::string member) {
  for (const auto& l : locals) tau.emplace(l.name, default_value(l.type));
  tau["this"] = Value::object(self);
  Process p;
  p.tau = std::move(tau);
  p.fid = fid;
  p.member = std::move(member);
  push_block(p.rs, body);
  return p;
}

bool is_field_target(const Stmt& s) {
  return s.target_is_field || s.target_scope == habs::Scope::Field || s.target_scope == habs::Scope::Physical;
}

int rule_order(const std::string& r) {
  if (r == "dur" || r == "skip") return 10;
  return std::stoi(r);
}

}  // namespace

struct Simulator::Candidate {
  std::size_t obj = 0;
  std::string rule;
  std::size_t index = 0;  // queue entry for 3/4, message for 8
};

Simulator::Simulator(const habs::Program& p, SimOptions opts) : prog_(p), opts_(std::move(opts)), rng_(opts_.seed) {
  std::stable_sort(opts_.script.begin(), opts_.script.end(),
                   [](const ScriptCall& a, const ScriptCall& b) { return a.time < b.time; });
}

void Simulator::resolve(Object& o) const {
  if (!o.cls || o.cls->physical.empty()) {
    o.dyn = Dynamics();
    return;
  }
  o.dyn = solve_ode(o.cls->physical, o.rho, SolverOptions{opts_.step, opts_.numeric});
}

Configuration Simulator::initial() const {
  Configuration c;
  Object m;
  m.id = 0;
  m.active = make_process(prog_.main_block, prog_.main_locals, {}, 0, c.next_fid++, "main");
  c.objects.push_back(std::move(m));
  return c;
}

void Simulator::enqueue(Object& o, Process p) const {
  p.wait_left.reset();
  if (const Stmt* a = p.head_await(); a && a->guard.kind == habs::Guard::Kind::Duration)
    p.wait_left = eval_expr(a->guard.expr, o.rho, p.tau, nullptr, 0).real();
  o.queue.push_back(std::move(p));
}

bool Simulator::guard_holds(const Configuration& c, const Object& o, const Process& p) const {
  const Stmt* a = p.head_await();
  switch (a->guard.kind) {
    case habs::Guard::Kind::Duration: return p.wait_left.value_or(0) <= opts_.slack;
    case habs::Guard::Kind::Poll: {
      Value f = eval_expr(a->guard.expr, o.rho, p.tau, nullptr, 0);
      return f.kind == Value::Kind::Fut && c.futures.count(f.ref);
    }
    case habs::Guard::Kind::Diff: return eval_expr(a->guard.expr, o.rho, p.tau, nullptr, 0, opts_.slack).truth();
  }
  return false;
}

std::vector<Simulator::Candidate> Simulator::candidates(const Configuration& c, std::size_t i) const {
  std::vector<Candidate> out;
  const Object& o = c.objects[i];
  auto add = [&](std::string r, std::size_t idx = 0) { out.push_back(Candidate{i, std::move(r), idx}); };
  if (o.active) {
    const Process& p = *o.active;
    const Item* h = p.head();
    auto cond = [&](const habs::Expr& e) { return eval_expr(e, o.rho, p.tau, nullptr, 0).truth(); };
    if (!h) {
      add("5");
    } else {
      switch (h->kind) {
        case Item::Kind::Suspend: add("2"); break;
        case Item::Kind::Loop: add(cond(h->stmt->expr) ? "13" : "14"); break;
        case Item::Kind::Value: add(is_field_target(*h->stmt) ? "11" : "10"); break;
        case Item::Kind::Wait:
          if (h->left <= opts_.slack) add("dur");
          break;
        case Item::Kind::Stmt: {
          const Stmt& s = *h->stmt;
          switch (s.kind) {
            case Stmt::Kind::Await: add("1"); break;
            case Stmt::Kind::Return: add("5"); break;
            case Stmt::Kind::Skip: add("skip"); break;
            case Stmt::Kind::Duration: add("dur"); break;
            case Stmt::Kind::If: add(cond(s.expr) ? "13" : "14"); break;
            case Stmt::Kind::While: add("12"); break;
            case Stmt::Kind::Assign:
              switch (s.rhs.kind) {
                case habs::Rhs::Kind::Get: {
                  Value f = eval_expr(s.rhs.expr, o.rho, p.tau, nullptr, 0);
                  if (f.kind != Value::Kind::Fut) throw SimError("get on a non-future value " + to_string(f));
                  if (c.futures.count(f.ref)) add("6");
                  break;
                }
                case habs::Rhs::Kind::Call: add("7"); break;
                case habs::Rhs::Kind::New: add("9"); break;
                case habs::Rhs::Kind::Pure: add(is_field_target(s) ? "11" : "10"); break;
              }
              break;
          }
          break;
        }
      }
    }
  } else {
    for (std::size_t q = 0; q < o.queue.size(); ++q)
      if (o.queue[q].head_await() && guard_holds(c, o, o.queue[q])) add("3", q);
    for (std::size_t q = 0; q < o.queue.size(); ++q)
      if (!o.queue[q].head_await()) add("4", q);
  }
  for (std::size_t m = 0; m < c.messages.size(); ++m)
    if (c.messages[m].callee == static_cast<int>(i)) add("8", m);
  return out;
}

Transition Simulator::apply(Configuration& c, const Candidate& k) {
  Object& o = c.objects[k.obj];
  Transition tr;
  tr.clock = c.clock;
  tr.rule = k.rule;
  tr.object = o.id;
  const std::string& r = k.rule;

  auto assign = [&](Process& p, const Stmt& s, Value v) {
    if (s.target.empty()) return;
    if (is_field_target(s)) {
      o.rho[s.target] = v;
    } else {
      p.tau[s.target] = v;
      if (!o.cls && v.kind == Value::Kind::Obj) c.names[s.target] = v.ref;
    }
  };

  if (r == "3" || r == "4") {
    Process p = std::move(o.queue[k.index]);
    o.queue.erase(o.queue.begin() + static_cast<std::ptrdiff_t>(k.index));
    if (r == "3") p.rs.pop_back();
    p.wait_left.reset();
    tr.member = p.member;
    tr.nontrivial = !p.head_await();
    o.active = std::move(p);
    return tr;
  }
  if (r == "8") {
    Message m = std::move(c.messages[k.index]);
    c.messages.erase(c.messages.begin() + static_cast<std::ptrdiff_t>(k.index));
    const habs::MethodDecl* md = o.cls ? o.cls->method(m.method) : nullptr;
    if (!md) throw SimError("object o" + std::to_string(o.id) + " has no method '" + m.method + "'");
    if (md->params.size() != m.args.size()) throw SimError("wrong number of arguments for '" + m.method + "'");
    Store tau;
    for (std::size_t i = 0; i < m.args.size(); ++i) tau[md->params[i].name] = m.args[i];
    enqueue(o, make_process(md->body, md->locals, std::move(tau), o.id, m.fid, m.method));
    tr.member = m.method;
    tr.detail = "fid=" + std::to_string(m.fid);
    return tr;
  }

  Process& p = *o.active;
  tr.member = p.member;
  auto eval = [&](const habs::Expr& e) { return eval_expr(e, o.rho, p.tau, nullptr, 0); };

  if (r == "5") {
    Value v = Value::unit();
    if (!p.rs.empty()) v = eval(p.rs.back().stmt->expr);
    if (c.futures.count(p.fid)) throw SimError("future f" + std::to_string(p.fid) + " resolved twice");
    c.futures[p.fid] = v;
    tr.detail = "fid=" + std::to_string(p.fid) + " value=" + to_string(v);
    o.active.reset();
    resolve(o);
    return tr;
  }
  if (r == "1") {
    p.rs.push_back(Item{Item::Kind::Suspend, nullptr, {}, 0});
    return tr;
  }
  if (r == "2") {
    p.rs.pop_back();
    tr.point = p.head_await()->point;
    tr.detail = "point=" + std::to_string(tr.point);
    Process moved = std::move(p);
    o.active.reset();
    enqueue(o, std::move(moved));
    resolve(o);
    return tr;
  }

  Item h = p.rs.back();
  p.rs.pop_back();
  const Stmt* s = h.stmt;
  if (r == "6") {
    Value f = eval(s->rhs.expr);
    p.rs.push_back(Item{Item::Kind::Value, s, c.futures.at(f.ref), 0});
    tr.detail = "fid=" + std::to_string(f.ref);
  } else if (r == "7") {
    Value recv = eval(s->rhs.expr);
    if (recv.kind != Value::Kind::Obj) throw SimError("call on " + to_string(recv));
    Message m{recv.ref, s->rhs.name, {}, c.next_fid++};
    for (const auto& a : s->rhs.args) m.args.push_back(eval(a));
    tr.detail = "call o" + std::to_string(m.callee) + "." + m.method + " fid=" + std::to_string(m.fid);
    assign(p, *s, Value::future(m.fid));
    c.messages.push_back(std::move(m));
  } else if (r == "9") {
    const habs::ClassDecl* cls = prog_.find_class(s->rhs.name);
    if (!cls) throw SimError("unknown class '" + s->rhs.name + "'");
    std::vector<Value> args;
    for (const auto& a : s->rhs.args) args.push_back(eval(a));
    if (args.size() != cls->params.size()) throw SimError("wrong number of arguments for new " + cls->name);
    Object n;
    n.id = static_cast<int>(c.objects.size());
    n.cls = cls;
    n.created = c.clock;
    for (std::size_t i = 0; i < args.size(); ++i) n.rho[cls->params[i].name] = args[i];
    for (const auto& ph : cls->physical) n.rho[ph.name] = eval_expr(ph.init, n.rho, {}, nullptr, 0);
    for (const auto& f : cls->fields)
      n.rho[f.name] = f.init ? eval_expr(*f.init, n.rho, {}, nullptr, 0) : default_value(f.type);
    static const habs::Block kEmptyBlock;
    n.queue.push_back(make_process(cls->init_block ? *cls->init_block : kEmptyBlock, cls->init_locals, {}, n.id,
                                   c.next_fid++, "init"));
    resolve(n);
    tr.detail = "new " + cls->name + " o" + std::to_string(n.id);
    int id = n.id;
    c.objects.push_back(std::move(n));
    // the push_back may have moved `o`
    Object& self = c.objects[k.obj];
    Process& ap = *self.active;
    if (!s->target.empty()) {
      if (is_field_target(*s)) {
        self.rho[s->target] = Value::object(id);
      } else {
        ap.tau[s->target] = Value::object(id);
        if (!self.cls) c.names[s->target] = id;
      }
    }
  } else if (r == "10" || r == "11") {
    Value v = h.kind == Item::Kind::Value ? h.value : eval(s->rhs.expr);
    assign(p, *s, v);
    tr.detail = s->target + "=" + to_string(v);
  } else if (r == "12") {
    p.rs.push_back(Item{Item::Kind::Loop, s, {}, 0});
  } else if (r == "13") {
    if (h.kind == Item::Kind::Loop) p.rs.push_back(Item{Item::Kind::Stmt, s, {}, 0});
    push_block(p.rs, s->then_block);
  } else if (r == "14") {
    if (h.kind == Item::Kind::Stmt && s->else_block) push_block(p.rs, *s->else_block);
  } else if (r == "dur") {
    if (h.kind == Item::Kind::Stmt) {
      double left = eval(s->expr).real();
      if (left > opts_.slack) p.rs.push_back(Item{Item::Kind::Wait, s, {}, left});
      tr.detail = "duration=" + format_number(left);
    } else {
      tr.detail = "elapsed";
    }
  }
  return tr;
}

std::optional<Transition> Simulator::step_discrete(Configuration& c) {
  if (c.script_next < opts_.script.size() && opts_.script[c.script_next].time <= c.clock + 1e-12) {
    const ScriptCall& sc = opts_.script[c.script_next++];
    auto it = c.names.find(sc.object);
    if (it == c.names.end()) throw SimError("script: unknown object '" + sc.object + "'");
    Message m{it->second, sc.method, sc.args, c.next_fid++};
    Transition tr;
    tr.clock = c.clock;
    tr.rule = "script";
    tr.object = it->second;
    tr.member = sc.method;
    tr.detail = "call o" + std::to_string(m.callee) + "." + m.method + " fid=" + std::to_string(m.fid);
    c.messages.push_back(std::move(m));
    return tr;
  }
  if (opts_.policy == PolicyKind::Deterministic) {
    for (std::size_t i = 0; i < c.objects.size(); ++i) {
      auto cs = candidates(c, i);
      if (cs.empty()) continue;
      auto best = std::min_element(cs.begin(), cs.end(), [](const Candidate& a, const Candidate& b) {
        return rule_order(a.rule) < rule_order(b.rule);
      });
      return apply(c, *best);
    }
    return std::nullopt;
  }
  std::vector<Candidate> all;
  for (std::size_t i = 0; i < c.objects.size(); ++i) {
    auto cs = candidates(c, i);
    all.insert(all.end(), cs.begin(), cs.end());
  }
  if (all.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
  return apply(c, all[pick(rng_)]);
}

double Simulator::mte(const Configuration& c, bool* truncated) const {
  double best = kInfinity;
  if (truncated) *truncated = false;
  if (c.script_next < opts_.script.size()) best = std::max(0.0, opts_.script[c.script_next].time - c.clock);
  double bound = opts_.horizon - c.clock + opts_.step;
  for (const auto& o0 : c.objects) {
    const Object* o = &o0;
    Object fresh;
    if (o->active) {
      // a blocked process may have changed the store since the last solve
      fresh = *o;
      resolve(fresh);
      o = &fresh;
      const Item* h = o->active->head();
      if (h && h->kind == Item::Kind::Wait) best = std::min(best, h->left);
    }
    for (const auto& p : o->queue) {
      const Stmt* a = p.head_await();
      if (!a) continue;
      if (a->guard.kind == habs::Guard::Kind::Duration) {
        best = std::min(best, std::max(0.0, p.wait_left.value_or(0)));
      } else if (a->guard.kind == habs::Guard::Kind::Diff && o->dyn.evolves()) {
        MteOptions mo{opts_.step, std::min(bound, best), opts_.slack, 1e-9};
        double m = mte_guard(a->guard, o->rho, p.tau, o->dyn, mo);
        if (m == kInfinity && truncated) *truncated = true;
        best = std::min(best, m);
      }
    }
  }
  return best;
}

Transition Simulator::advance(Configuration& c, double dt) const {
  if (!(dt > 0)) throw SimError("time advance of " + format_number(dt) + " at clock " + format_number(c.clock));
  for (auto& o : c.objects) {
    if (o.active) resolve(o);
    for (const auto& f : o.dyn.fields()) o.rho[f] = Value::number(o.dyn.value(f, dt));
    resolve(o);
    for (auto& p : o.queue)
      if (p.wait_left) *p.wait_left -= dt;
    if (o.active && !o.active->rs.empty() && o.active->rs.back().kind == Item::Kind::Wait)
      o.active->rs.back().left -= dt;
  }
  c.clock += dt;
  Transition tr;
  tr.clock = c.clock;
  tr.rule = "ii";
  tr.detail = "elapse=" + format_number(dt);
  return tr;
}

std::optional<Transition> Simulator::step_timed(Configuration& c) {
  double m = mte(c);
  if (m == kInfinity) return std::nullopt;
  return advance(c, m);
}

Run Simulator::run() { return run_from(initial()); }

Run Simulator::run_from(Configuration c) {
  Run r;
  r.configs.push_back(c);
  std::size_t instant = 0;
  auto record = [&](Transition t) {
    r.steps.push_back(std::move(t));
    r.configs.push_back(c);
  };
  try {
    for (;;) {
      if (r.steps.size() >= opts_.step_cap) {
        r.status = Run::Status::StepCap;
        r.message = "step cap of " + std::to_string(opts_.step_cap) + " reached";
        break;
      }
      if (auto t = step_discrete(c)) {
        if (++instant > opts_.instant_cap) {
          r.status = Run::Status::StepCap;
          r.message = "more than " + std::to_string(opts_.instant_cap) + " steps at clock " + format_number(c.clock) +
                      " (possible Zeno behavior or livelock)";
          break;
        }
        record(std::move(*t));
        continue;
      }
      bool truncated = false;
      double m = mte(c, &truncated);
      if (m == kInfinity && truncated) {
        r.status = Run::Status::Horizon;
        break;
      }
      if (m == kInfinity) {
        bool blocked = std::any_of(c.objects.begin(), c.objects.end(), [](const Object& o) { return o.active; });
        r.status = blocked ? Run::Status::Deadlock : Run::Status::Final;
        if (blocked) r.message = "deadlock: active processes blocked and no time can pass";
        break;
      }
      if (c.clock + m > opts_.horizon) {
        r.status = Run::Status::Horizon;
        break;
      }
      instant = 0;
      record(advance(c, m));
    }
  } catch (const SimError& e) {
    r.status = Run::Status::Error;
    r.message = e.what();
  }
  bool trailing = r.status == Run::Status::Horizon || r.status == Run::Status::Final;
  r.end = trailing ? std::max(opts_.horizon, c.clock) : c.clock;
  return r;
}

std::string to_string(Run::Status s) {
  switch (s) {
    case Run::Status::Horizon: return "horizon";
    case Run::Status::Final: return "final";
    case Run::Status::StepCap: return "step-cap";
    case Run::Status::Deadlock: return "deadlock";
    case Run::Status::Error: return "error";
  }
  return "?";
}

std::string format_transition(const Transition& t, const Configuration& after) {
  std::ostringstream os;
  os << "clock=" << format_number(t.clock) << " rule=" << t.rule;
  if (t.object >= 0) {
    os << " object=o" << t.object;
    if (static_cast<std::size_t>(t.object) < after.objects.size())
      os << " class=" << after.objects[static_cast<std::size_t>(t.object)].class_name();
  }
  if (!t.member.empty()) os << " member=" << t.member;
  if (!t.detail.empty()) os << ' ' << t.detail;
  return os.str();
}

std::string Run::log() const {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) out += format_transition(steps[i], configs[i + 1]) + '\n';
  out += "end status=" + to_string(status) + " clock=" + format_number(configs.back().clock);
  if (!message.empty()) out += " message=\"" + message + '"';
  out += '\n';
  return out;
}

// ---- scripts

std::vector<ScriptCall> parse_script(std::string_view text) {
  std::vector<ScriptCall> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto fail = [&](const std::string& msg) {
      throw std::invalid_argument("line " + std::to_string(n) + ": " + msg);
    };
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string at, call, target;
    ScriptCall sc;
    if (!(ls >> at) || at != "at") fail("expected 'at <time> call <object>.<method>(...)'");
    if (!(ls >> sc.time) || sc.time < 0) fail("bad time");
    if (!(ls >> call) || call != "call") fail("expected 'call'");
    std::string rest;
    std::getline(ls, rest);
    auto dot = rest.find('.');
    auto open = rest.find('(');
    auto close = rest.rfind(')');
    if (dot == std::string::npos || open == std::string::npos || close == std::string::npos || dot > open ||
        close < open)
      fail("expected <object>.<method>(<literals>)");
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r");
      auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    sc.object = trim(rest.substr(0, dot));
    sc.method = trim(rest.substr(dot + 1, open - dot - 1));
    if (sc.object.empty() || sc.method.empty()) fail("missing object or method name");
    if (!trim(rest.substr(close + 1)).empty()) fail("trailing text after ')'");
    std::string args = rest.substr(open + 1, close - open - 1);
    if (!trim(args).empty()) {
      std::istringstream as(args);
      std::string a;
      while (std::getline(as, a, ',')) {
        a = trim(a);
        if (a == "true" || a == "false") {
          sc.args.push_back(Value::boolean(a == "true"));
          continue;
        }
        try {
          std::size_t used = 0;
          double v = std::stod(a, &used);
          if (used != a.size()) fail("bad literal '" + a + "'");
          sc.args.push_back(Value::number(v));
        } catch (const std::logic_error&) {
          fail("bad literal '" + a + "'");
        }
      }
    }
    out.push_back(std::move(sc));
  }
  return out;
}

}  // namespace hvc::sim
