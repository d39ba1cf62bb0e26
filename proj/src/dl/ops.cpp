#include "hvc/dl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hvc/dl/kyx.hpp"

namespace hvc::dl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

// ---------------------------------------------------------------- weak negation

Formula weak_negate(const Formula& f) {
  return std::visit(
      overloaded{
          [](const True&) { return fls(); },
          [](const False&) { return tru(); },
          [](const Cmp& c) -> Formula {
            switch (c.rel) {
              case Rel::Le: return ge(c.lhs, c.rhs);
              case Rel::Ge: return le(c.lhs, c.rhs);
              case Rel::Eq: return eq(c.lhs, c.rhs);
              default:
                throw std::invalid_argument("weak negation of strict comparison " +
                                            render(cmp(c.rel, c.lhs, c.rhs)));
            }
          },
          [](const Not& n) { return n.arg; },
          [](const And& a) { return lor(weak_negate(a.lhs), weak_negate(a.rhs)); },
          [](const Or& o) { return land(weak_negate(o.lhs), weak_negate(o.rhs)); },
          [](const Implies& i) { return land(i.lhs, weak_negate(i.rhs)); },
          [](const Exists&) -> Formula {
            throw std::invalid_argument("weak negation of a quantified formula");
          },
          [](const Box&) -> Formula {
            throw std::invalid_argument("weak negation of a modal formula");
          },
      },
      f.node().v);
}

// ---------------------------------------------------------------- pr

Formula build_pr(const Formula& psi, const Formula& inv, const Program& ode_prog,
                 PrClock clock) {
  const Ode* o = as<Ode>(ode_prog);
  if (!o) throw std::invalid_argument("pr expects an ODE, got " + render(ode_prog));
  for (const auto& [x, rhs] : o->equations)
    if (x == "t") throw std::invalid_argument("ODE already contains the clock t");

  bool keep_clock = clock == PrClock::Always || free_variables(psi).count("t") > 0;
  if (!keep_clock) {
    // without dynamics and clock nothing evolves: [{t'=1 & psi}]inv is psi -> inv
    if (o->equations.empty()) return land(inv, box(test(psi), inv));
    return land(inv, box(ode(o->equations, psi), inv));
  }

  auto eqs = o->equations;
  eqs.emplace_back("t", num(1));
  return land(inv, box(seq(assign("t", num(0)), ode(std::move(eqs), psi)), inv));
}

// ---------------------------------------------------------------- variables

namespace {

void collect(const Term& t, std::set<std::string>& out);
void collect(const Formula& f, std::set<std::string>& out);
void collect(const Program& p, std::set<std::string>& out);

void collect(const Term& t, std::set<std::string>& out) {
  std::visit(overloaded{
                 [&](const Var& v) { out.insert(v.name); },
                 [](const Lit&) {},
                 [&](const Neg& n) { collect(n.arg, out); },
                 [&](const Arith& a) {
                   collect(a.lhs, out);
                   collect(a.rhs, out);
                 },
             },
             t.node().v);
}

void collect(const Formula& f, std::set<std::string>& out) {
  std::visit(overloaded{
                 [](const True&) {},
                 [](const False&) {},
                 [&](const Cmp& c) {
                   collect(c.lhs, out);
                   collect(c.rhs, out);
                 },
                 [&](const Not& n) { collect(n.arg, out); },
                 [&](const And& a) {
                   collect(a.lhs, out);
                   collect(a.rhs, out);
                 },
                 [&](const Or& a) {
                   collect(a.lhs, out);
                   collect(a.rhs, out);
                 },
                 [&](const Implies& a) {
                   collect(a.lhs, out);
                   collect(a.rhs, out);
                 },
                 [&](const Exists& e) {
                   std::set<std::string> inner;
                   collect(e.body, inner);
                   inner.erase(e.var);
                   out.insert(inner.begin(), inner.end());
                 },
                 [&](const Box& b) {
                   collect(b.prog, out);
                   collect(b.post, out);
                 },
             },
             f.node().v);
}

void collect(const Program& p, std::set<std::string>& out) {
  std::visit(overloaded{
                 [&](const Assign& a) {
                   out.insert(a.var);
                   collect(a.value, out);
                 },
                 [&](const Havoc& h) { out.insert(h.var); },
                 [&](const Test& t) { collect(t.cond, out); },
                 [&](const Choice& c) {
                   collect(c.lhs, out);
                   collect(c.rhs, out);
                 },
                 [&](const Seq& s) {
                   collect(s.first, out);
                   collect(s.second, out);
                 },
                 [&](const Loop& l) { collect(l.body, out); },
                 [&](const Ode& o) {
                   for (const auto& [x, rhs] : o.equations) {
                     out.insert(x);
                     collect(rhs, out);
                   }
                   collect(o.domain, out);
                 },
             },
             p.node().v);
}

void collect_bound(const Program& p, std::set<std::string>& out) {
  std::visit(overloaded{
                 [&](const Assign& a) { out.insert(a.var); },
                 [&](const Havoc& h) { out.insert(h.var); },
                 [](const Test&) {},
                 [&](const Choice& c) {
                   collect_bound(c.lhs, out);
                   collect_bound(c.rhs, out);
                 },
                 [&](const Seq& s) {
                   collect_bound(s.first, out);
                   collect_bound(s.second, out);
                 },
                 [&](const Loop& l) { collect_bound(l.body, out); },
                 [&](const Ode& o) {
                   for (const auto& eq : o.equations) out.insert(eq.first);
                 },
             },
             p.node().v);
}

}  // namespace

std::set<std::string> free_variables(const Term& t) {
  std::set<std::string> out;
  collect(t, out);
  return out;
}
std::set<std::string> free_variables(const Formula& f) {
  std::set<std::string> out;
  collect(f, out);
  return out;
}
std::set<std::string> free_variables(const Program& p) {
  std::set<std::string> out;
  collect(p, out);
  return out;
}
std::set<std::string> bound_variables(const Program& p) {
  std::set<std::string> out;
  collect_bound(p, out);
  return out;
}

// ---------------------------------------------------------------- substitution

Term substitute(const Term& t, const Substitution& s) {
  return std::visit(overloaded{
                        [&](const Var& v) -> Term {
                          auto it = s.find(v.name);
                          return it == s.end() ? t : it->second;
                        },
                        [&](const Lit&) { return t; },
                        [&](const Neg& n) { return neg(substitute(n.arg, s)); },
                        [&](const Arith& a) {
                          return arith(a.op, substitute(a.lhs, s), substitute(a.rhs, s));
                        },
                    },
                    t.node().v);
}

Formula substitute(const Formula& f, const Substitution& s) {
  return std::visit(
      overloaded{
          [&](const True&) { return f; },
          [&](const False&) { return f; },
          [&](const Cmp& c) { return cmp(c.rel, substitute(c.lhs, s), substitute(c.rhs, s)); },
          [&](const Not& n) { return lnot(substitute(n.arg, s)); },
          [&](const And& a) { return land(substitute(a.lhs, s), substitute(a.rhs, s)); },
          [&](const Or& a) { return lor(substitute(a.lhs, s), substitute(a.rhs, s)); },
          [&](const Implies& a) { return implies(substitute(a.lhs, s), substitute(a.rhs, s)); },
          [&](const Exists& e) {
            Substitution inner = s;
            inner.erase(e.var);
            return exists(e.var, substitute(e.body, inner));
          },
          [&](const Box&) -> Formula {
            throw std::invalid_argument("substitution under a modality");
          },
      },
      f.node().v);
}

// ---------------------------------------------------------------- folding

Term fold_literals(const Term& t) {
  return std::visit(
      overloaded{
          [&](const Var&) { return t; },
          [&](const Lit&) { return t; },
          [&](const Neg& n) {
            Term a = fold_literals(n.arg);
            if (auto* l = as<Lit>(a)) return num(-l->value);
            return neg(a);
          },
          [&](const Arith& ar) {
            Term l = fold_literals(ar.lhs);
            Term r = fold_literals(ar.rhs);
            const Lit* ll = as<Lit>(l);
            const Lit* rl = as<Lit>(r);
            if (ll && rl) {
              switch (ar.op) {
                case ArithOp::Add: return num(ll->value + rl->value);
                case ArithOp::Sub: return num(ll->value - rl->value);
                case ArithOp::Mul: return num(ll->value * rl->value);
                case ArithOp::Div:
                  if (!rl->value.is_zero()) return num(ll->value / rl->value);
                  break;
              }
            }
            // a divisor that folds to zero stays unfolded
            if (ar.op == ArithOp::Div && rl && rl->value.is_zero()) return arith(ar.op, l, ar.rhs);
            return arith(ar.op, l, r);
          },
      },
      t.node().v);
}

Formula fold_literals(const Formula& f) {
  return std::visit(
      overloaded{
          [&](const True&) { return f; },
          [&](const False&) { return f; },
          [&](const Cmp& c) { return cmp(c.rel, fold_literals(c.lhs), fold_literals(c.rhs)); },
          [&](const Not& n) { return lnot(fold_literals(n.arg)); },
          [&](const And& a) { return land(fold_literals(a.lhs), fold_literals(a.rhs)); },
          [&](const Or& a) { return lor(fold_literals(a.lhs), fold_literals(a.rhs)); },
          [&](const Implies& a) { return implies(fold_literals(a.lhs), fold_literals(a.rhs)); },
          [&](const Exists& e) { return exists(e.var, fold_literals(e.body)); },
          [&](const Box& b) { return box(fold_literals(b.prog), fold_literals(b.post)); },
      },
      f.node().v);
}

Program fold_literals(const Program& p) {
  return std::visit(
      overloaded{
          [&](const Assign& a) { return assign(a.var, fold_literals(a.value)); },
          [&](const Havoc&) { return p; },
          [&](const Test& t) { return test(fold_literals(t.cond)); },
          [&](const Choice& c) { return choice(fold_literals(c.lhs), fold_literals(c.rhs)); },
          [&](const Seq& s) { return seq(fold_literals(s.first), fold_literals(s.second)); },
          [&](const Loop& l) { return loop(fold_literals(l.body)); },
          [&](const Ode& o) {
            std::vector<OdeEquation> eqs;
            for (const auto& [x, rhs] : o.equations) eqs.emplace_back(x, fold_literals(rhs));
            return ode(std::move(eqs), fold_literals(o.domain));
          },
      },
      p.node().v);
}

// ---------------------------------------------------------------- normal form

bool formula_less(const Formula& a, const Formula& b) { return render(a) < render(b); }

namespace {

Formula canonical_atom(const Cmp& c) {
  Term l = fold_literals(c.lhs);
  Term r = fold_literals(c.rhs);
  switch (c.rel) {
    case Rel::Gt: return lt(r, l);
    case Rel::Ge: return le(r, l);
    default: return cmp(c.rel, l, r);
  }
}

template <typename Node>
void flatten(const Formula& f, std::vector<Formula>& out) {
  if (auto* n = as<Node>(f)) {
    flatten<Node>(n->lhs, out);
    flatten<Node>(n->rhs, out);
  } else {
    out.push_back(f);
  }
}

Formula rebuild_junction(bool is_and, std::vector<Formula> parts) {
  std::vector<Formula> kept;
  for (auto& p : parts) {
    Formula n = normalize(p);
    // flatten again: normalisation of a child may expose the same connective
    std::vector<Formula> sub;
    if (is_and)
      flatten<And>(n, sub);
    else
      flatten<Or>(n, sub);
    for (auto& s : sub) {
      if (is_and && is_true(s)) continue;
      if (!is_and && is_false(s)) continue;
      if (is_and && is_false(s)) return fls();
      if (!is_and && is_true(s)) return tru();
      kept.push_back(s);
    }
  }
  std::vector<std::pair<std::string, Formula>> keyed;
  for (auto& k : kept) keyed.emplace_back(render(k), k);
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  keyed.erase(std::unique(keyed.begin(), keyed.end(),
                          [](const auto& a, const auto& b) { return a.first == b.first; }),
              keyed.end());
  std::vector<Formula> sorted;
  for (auto& [k, f] : keyed) sorted.push_back(f);
  return is_and ? conj(sorted) : disj(sorted);
}

void flatten_seq(const Program& p, std::vector<Program>& out) {
  if (auto* s = as<Seq>(p)) {
    flatten_seq(s->first, out);
    flatten_seq(s->second, out);
  } else {
    out.push_back(p);
  }
}

// Reorders runs of adjacent assignments that neither read nor write each
// other's targets, so that equivalent straight-line code compares equal.
void sort_independent_runs(std::vector<Program>& items) {
  std::size_t i = 0;
  while (i < items.size()) {
    if (!as<Assign>(items[i]) && !as<Havoc>(items[i])) {
      ++i;
      continue;
    }
    std::set<std::string> written;
    std::set<std::string> read;
    std::size_t j = i;
    for (; j < items.size(); ++j) {
      std::string target;
      std::set<std::string> reads;
      if (auto* a = as<Assign>(items[j])) {
        target = a->var;
        reads = free_variables(a->value);
      } else if (auto* h = as<Havoc>(items[j])) {
        target = h->var;
      } else {
        break;
      }
      bool clash = written.count(target) || read.count(target);
      for (const auto& r : reads) clash = clash || written.count(r);
      if (clash) break;
      written.insert(target);
      read.insert(reads.begin(), reads.end());
    }
    auto key = [](const Program& p) {
      if (auto* a = as<Assign>(p)) return a->var;
      return as<Havoc>(p)->var;
    };
    std::stable_sort(items.begin() + i, items.begin() + j,
                     [&](const Program& a, const Program& b) { return key(a) < key(b); });
    i = std::max(j, i + 1);
  }
}

}  // namespace

Formula normalize(const Formula& f) {
  return std::visit(
      overloaded{
          [&](const True&) { return f; },
          [&](const False&) { return f; },
          [&](const Cmp& c) { return canonical_atom(c); },
          [&](const Not& n) { return lnot(normalize(n.arg)); },
          [&](const And&) {
            std::vector<Formula> parts;
            flatten<And>(f, parts);
            return rebuild_junction(true, parts);
          },
          [&](const Or&) {
            std::vector<Formula> parts;
            flatten<Or>(f, parts);
            return rebuild_junction(false, parts);
          },
          [&](const Implies& i) { return implies(normalize(i.lhs), normalize(i.rhs)); },
          [&](const Exists& e) { return exists(e.var, normalize(e.body)); },
          [&](const Box& b) { return box(normalize(b.prog), normalize(b.post)); },
      },
      f.node().v);
}

Program normalize(const Program& p) {
  return std::visit(
      overloaded{
          [&](const Assign& a) { return assign(a.var, fold_literals(a.value)); },
          [&](const Havoc&) { return p; },
          [&](const Test& t) { return test(normalize(t.cond)); },
          [&](const Choice& c) { return choice(normalize(c.lhs), normalize(c.rhs)); },
          [&](const Seq&) {
            std::vector<Program> raw;
            flatten_seq(p, raw);
            std::vector<Program> items;
            for (auto& r : raw) flatten_seq(normalize(r), items);
            sort_independent_runs(items);
            return seq(items);
          },
          [&](const Loop& l) { return loop(normalize(l.body)); },
          [&](const Ode& o) {
            std::vector<OdeEquation> eqs;
            for (const auto& [x, rhs] : o.equations) eqs.emplace_back(x, fold_literals(rhs));
            return ode(std::move(eqs), normalize(o.domain));
          },
      },
      p.node().v);
}

// ---------------------------------------------------------------- evaluation

double evaluate(const Term& t, const Valuation& v) {
  return std::visit(overloaded{
                        [&](const Var& x) {
                          auto it = v.find(x.name);
                          if (it == v.end()) throw std::invalid_argument("unbound variable " + x.name);
                          return it->second;
                        },
                        [](const Lit& l) { return l.value.to_double(); },
                        [&](const Neg& n) { return -evaluate(n.arg, v); },
                        [&](const Arith& a) {
                          double l = evaluate(a.lhs, v);
                          double r = evaluate(a.rhs, v);
                          switch (a.op) {
                            case ArithOp::Add: return l + r;
                            case ArithOp::Sub: return l - r;
                            case ArithOp::Mul: return l * r;
                            case ArithOp::Div:
                              if (r == 0.0) throw std::domain_error("division by zero");
                              return l / r;
                          }
                          return 0.0;
                        },
                    },
                    t.node().v);
}

bool evaluate(const Formula& f, const Valuation& v, double eps) {
  return std::visit(
      overloaded{
          [](const True&) { return true; },
          [](const False&) { return false; },
          [&](const Cmp& c) {
            double l = evaluate(c.lhs, v);
            double r = evaluate(c.rhs, v);
            switch (c.rel) {
              case Rel::Le: return l <= r + eps;
              case Rel::Ge: return l + eps >= r;
              case Rel::Eq: return std::fabs(l - r) <= eps;
              case Rel::Lt: return l < r + eps;
              case Rel::Gt: return l + eps > r;
            }
            return false;
          },
          [&](const Not& n) { return !evaluate(n.arg, v, eps); },
          [&](const And& a) { return evaluate(a.lhs, v, eps) && evaluate(a.rhs, v, eps); },
          [&](const Or& a) { return evaluate(a.lhs, v, eps) || evaluate(a.rhs, v, eps); },
          [&](const Implies& a) { return !evaluate(a.lhs, v, eps) || evaluate(a.rhs, v, eps); },
          [](const Exists&) -> bool {
            throw std::invalid_argument("cannot evaluate a quantified formula");
          },
          [](const Box&) -> bool { throw std::invalid_argument("cannot evaluate a modal formula"); },
      },
      f.node().v);
}

// ---------------------------------------------------------------- propositional view

namespace {

void collect_atoms(const Formula& f, std::map<std::string, Formula>& out) {
  std::visit(overloaded{
                 [](const True&) {},
                 [](const False&) {},
                 [&](const Cmp& c) {
                   Formula a = canonical_atom(c);
                   out.emplace(render(a), a);
                 },
                 [&](const Not& n) { collect_atoms(n.arg, out); },
                 [&](const And& a) {
                   collect_atoms(a.lhs, out);
                   collect_atoms(a.rhs, out);
                 },
                 [&](const Or& a) {
                   collect_atoms(a.lhs, out);
                   collect_atoms(a.rhs, out);
                 },
                 [&](const Implies& a) {
                   collect_atoms(a.lhs, out);
                   collect_atoms(a.rhs, out);
                 },
                 [](const Exists&) {
                   throw std::invalid_argument("quantifier in propositional view");
                 },
                 [](const Box&) { throw std::invalid_argument("modality in propositional view"); },
             },
             f.node().v);
}

bool eval_prop(const Formula& f, const std::map<std::string, bool>& assignment) {
  return std::visit(
      overloaded{
          [](const True&) { return true; },
          [](const False&) { return false; },
          [&](const Cmp& c) { return assignment.at(render(canonical_atom(c))); },
          [&](const Not& n) { return !eval_prop(n.arg, assignment); },
          [&](const And& a) { return eval_prop(a.lhs, assignment) && eval_prop(a.rhs, assignment); },
          [&](const Or& a) { return eval_prop(a.lhs, assignment) || eval_prop(a.rhs, assignment); },
          [&](const Implies& a) {
            return !eval_prop(a.lhs, assignment) || eval_prop(a.rhs, assignment);
          },
          [](const Exists&) -> bool { return false; },
          [](const Box&) -> bool { return false; },
      },
      f.node().v);
}

}  // namespace

std::vector<Formula> atoms(const Formula& f) {
  std::map<std::string, Formula> m;
  collect_atoms(f, m);
  std::vector<Formula> out;
  for (auto& [k, a] : m) out.push_back(a);
  return out;
}

bool propositionally_equivalent(const Formula& a, const Formula& b, int max_atoms) {
  std::map<std::string, Formula> m;
  collect_atoms(a, m);
  collect_atoms(b, m);
  if (static_cast<int>(m.size()) > max_atoms)
    throw std::invalid_argument("too many atoms for a truth table");
  std::vector<std::string> keys;
  for (auto& [k, f] : m) keys.push_back(k);
  const std::uint64_t rows = std::uint64_t{1} << keys.size();
  std::map<std::string, bool> assignment;
  for (std::uint64_t row = 0; row < rows; ++row) {
    for (std::size_t i = 0; i < keys.size(); ++i) assignment[keys[i]] = (row >> i) & 1u;
    if (eval_prop(a, assignment) != eval_prop(b, assignment)) return false;
  }
  return true;
}

std::vector<Formula> conjuncts(const Formula& f) {
  std::vector<Formula> out;
  flatten<And>(f, out);
  return out;
}

std::size_t conjunct_count(const Formula& f) { return conjuncts(f).size(); }

bool contains_modality(const Formula& f) {
  return std::visit(overloaded{
                        [](const True&) { return false; },
                        [](const False&) { return false; },
                        [](const Cmp&) { return false; },
                        [](const Not& n) { return contains_modality(n.arg); },
                        [](const And& a) { return contains_modality(a.lhs) || contains_modality(a.rhs); },
                        [](const Or& a) { return contains_modality(a.lhs) || contains_modality(a.rhs); },
                        [](const Implies& a) {
                          return contains_modality(a.lhs) || contains_modality(a.rhs);
                        },
                        [](const Exists& e) { return contains_modality(e.body); },
                        [](const Box&) { return true; },
                    },
                    f.node().v);
}

}  // namespace hvc::dl
