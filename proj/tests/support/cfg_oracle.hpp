#pragma once

// Random method bodies and a path-enumeration oracle for guaranteed calls.

#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hvc/analysis/analysis.hpp"

namespace hvc::testing {

using habs::Stmt;

inline habs::Stmt call(const std::string& m) {
  Stmt s;
  s.kind = Stmt::Kind::Assign;
  s.rhs.kind = habs::Rhs::Kind::Call;
  s.rhs.expr = habs::Expr::variable("this");
  s.rhs.name = m;
  return s;
}

inline habs::Stmt assign() {
  Stmt s;
  s.kind = Stmt::Kind::Assign;
  s.target = "x";
  s.rhs.expr = habs::Expr::number(1);
  return s;
}

inline habs::Stmt await_stmt(int& next_point) {
  Stmt s;
  s.kind = Stmt::Kind::Await;
  s.guard.expr = habs::Expr::boolean_lit(true);
  s.point = next_point++;
  return s;
}

// Random bodies whose causality graph has at most `budget` statement nodes.
struct BodyGen {
  std::mt19937 rng;
  int points = 1;
  explicit BodyGen(unsigned seed) : rng(seed) {}
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

  habs::Block block(int& budget, int depth) {
    habs::Block b;
    int len = 1 + pick(3);
    for (int i = 0; i < len && budget > 0; ++i) {
      int k = depth > 2 ? pick(3) : pick(5);
      --budget;
      if (k == 0) b.push_back(assign());
      else if (k == 1) b.push_back(call("m" + std::to_string(pick(3))));
      else if (k == 2) b.push_back(await_stmt(points));
      else if (budget >= 2) {
        --budget;  // in/out pair
        Stmt s;
        s.kind = k == 3 ? Stmt::Kind::If : Stmt::Kind::While;
        s.expr = habs::Expr::boolean_lit(true);
        s.then_block = block(budget, depth + 1);
        if (k == 3 && pick(2)) s.else_block = block(budget, depth + 1);
        b.push_back(std::move(s));
      }
    }
    return b;
  }
};

// Intersection of call sets over all simple method paths to `target`.
inline std::set<std::string> brute_force(const analysis::CausalityGraph& g, int target, const std::set<std::string>& universe) {
  auto succ = g.successors();
  std::optional<std::set<std::string>> acc;
  std::vector<bool> on(g.nodes.size());
  std::vector<std::string> calls;
  std::function<void(int, bool)> dfs = [&](int n, bool moved) {
    if (n == target && moved) {
      std::set<std::string> here(calls.begin(), calls.end());
      if (!acc) acc = here;
      else {
        std::set<std::string> meet;
        for (const auto& c : *acc)
          if (here.count(c)) meet.insert(c);
        acc = meet;
      }
      return;
    }
    for (int s : succ[n]) {
      if (on[s] && s != target) continue;
      if (s != target && (g.is_await(s) || s == g.entry)) continue;
      on[s] = true;
      auto c = g.self_call(s);
      if (!c.empty()) calls.push_back(c);
      dfs(s, true);
      if (!c.empty()) calls.pop_back();
      on[s] = false;
    }
  };
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    int n = static_cast<int>(i);
    if (n != g.entry && !g.is_await(n)) continue;
    on[n] = true;
    dfs(n, false);
    on[n] = false;
  }
  return acc ? *acc : universe;
}

}  // namespace hvc::testing
