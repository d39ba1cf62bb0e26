#include <stdexcept>

#include "hvc/analysis/analysis.hpp"

namespace hvc::analysis {

using habs::Stmt;

namespace {

struct Builder {
  CausalityGraph g;

  int add(CgNode::Kind k, const Stmt* s = nullptr) {
    g.nodes.push_back({k, s});
    return static_cast<int>(g.nodes.size()) - 1;
  }
  void edge(int a, int b) { g.edges.emplace_back(a, b); }

  // returns (entry, exit) of the sub-graph
  std::pair<int, int> block(const habs::Block& b) {
    if (b.empty()) {
      int n = add(CgNode::Kind::Nop);
      return {n, n};
    }
    auto [first, last] = stmt(b[0]);
    for (size_t i = 1; i < b.size(); ++i) {
      auto [e, x] = stmt(b[i]);
      edge(last, e);
      last = x;
    }
    return {first, last};
  }

  std::pair<int, int> stmt(const Stmt& s) {
    if (s.kind == Stmt::Kind::If) {
      int in = add(CgNode::Kind::In, &s), out = add(CgNode::Kind::Out, &s);
      auto [e1, x1] = block(s.then_block);
      edge(in, e1);
      edge(x1, out);
      if (s.else_block) {
        auto [e2, x2] = block(*s.else_block);
        edge(in, e2);
        edge(x2, out);
      } else {
        edge(in, out);
      }
      return {in, out};
    }
    if (s.kind == Stmt::Kind::While) {
      int in = add(CgNode::Kind::In, &s), out = add(CgNode::Kind::Out, &s);
      auto [e, x] = block(s.then_block);
      edge(in, e);
      edge(x, in);
      edge(in, out);
      return {in, out};
    }
    int n = add(CgNode::Kind::Stmt, &s);
    return {n, n};
  }
};

}  // namespace

std::vector<std::vector<int>> CausalityGraph::successors() const {
  std::vector<std::vector<int>> out(nodes.size());
  for (auto [a, b] : edges) out[a].push_back(b);
  return out;
}

std::vector<std::vector<int>> CausalityGraph::predecessors() const {
  std::vector<std::vector<int>> out(nodes.size());
  for (auto [a, b] : edges) out[b].push_back(a);
  return out;
}

bool CausalityGraph::is_await(int n) const {
  const CgNode& c = nodes[n];
  return c.kind == CgNode::Kind::Stmt && c.stmt->kind == Stmt::Kind::Await;
}

std::string CausalityGraph::self_call(int n) const {
  const CgNode& c = nodes[n];
  if (c.kind == CgNode::Kind::Stmt && c.stmt->kind == Stmt::Kind::Assign && c.stmt->rhs.is_self_call())
    return c.stmt->rhs.name;
  return {};
}

int CausalityGraph::point_node(int point) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (is_await(static_cast<int>(i)) && nodes[i].stmt->point == point) return static_cast<int>(i);
  return -1;
}

CausalityGraph build_causality_graph(const habs::Block& body) {
  Builder b;
  int entry = b.add(CgNode::Kind::Entry);
  int exit = b.add(CgNode::Kind::Exit);
  auto [e, x] = b.block(body);
  b.edge(entry, e);
  b.edge(x, exit);
  b.g.entry = entry;
  b.g.exit = exit;
  return b.g;
}

std::set<std::string> guaranteed_calls(const CausalityGraph& g, int target) {
  // Greatest fixpoint of: out(n) = calls(n) ∪ ⋂_{p ∈ pred(n)} flow(p), where
  // a path start (entry or await) contributes the empty set.
  const size_t n = g.nodes.size();
  auto preds = g.predecessors();
  std::set<std::string> universe;
  for (size_t i = 0; i < n; ++i)
    if (auto c = g.self_call(static_cast<int>(i)); !c.empty()) universe.insert(c);

  auto starts_path = [&](int i) { return i == g.entry || g.is_await(i); };
  std::vector<std::set<std::string>> out(n, universe);
  auto in_of = [&](int i) {
    std::set<std::string> acc;
    bool first = true;
    for (int p : preds[i]) {
      const std::set<std::string> empty;
      const auto& f = starts_path(p) ? empty : out[p];
      if (first) {
        acc = f;
        first = false;
      } else {
        std::set<std::string> meet;
        for (const auto& x : acc)
          if (f.count(x)) meet.insert(x);
        acc = std::move(meet);
      }
    }
    return acc;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < n; ++i) {
      int ii = static_cast<int>(i);
      if (starts_path(ii)) continue;
      auto next = in_of(ii);
      if (auto c = g.self_call(ii); !c.empty()) next.insert(c);
      if (next != out[i]) {
        out[i] = std::move(next);
        changed = true;
      }
    }
  }
  return in_of(target);
}

std::set<std::string> gcall_exit(const habs::Block& body) {
  auto g = build_causality_graph(body);
  return guaranteed_calls(g, g.exit);
}

std::set<std::string> gcall_point(const habs::Block& body, int point) {
  auto g = build_causality_graph(body);
  int n = g.point_node(point);
  if (n < 0) throw std::out_of_range("unknown program point " + std::to_string(point));
  return guaranteed_calls(g, n);
}

}  // namespace hvc::analysis
