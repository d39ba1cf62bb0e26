#pragma once

// Post-region generators and the syntactic analyses they rest on.

#include <compare>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hvc/dl/ast.hpp"
#include "hvc/habs/ast.hpp"

namespace hvc::analysis {

struct CgNode {
  enum class Kind { Entry, Exit, Stmt, In, Out, Nop };
  Kind kind;
  const habs::Stmt* stmt = nullptr;  // Stmt nodes; In/Out carry their if/while
};

/// Causality graph of a statement: statement occurrences plus entry/exit.
struct CausalityGraph {
  std::vector<CgNode> nodes;
  std::vector<std::pair<int, int>> edges;
  int entry = 0;
  int exit = 0;

  std::vector<std::vector<int>> successors() const;
  std::vector<std::vector<int>> predecessors() const;
  bool is_await(int n) const;
  /// Name of the method called on `this` at node n, or empty.
  std::string self_call(int n) const;
  /// Node of the await with program point `point`, or -1.
  int point_node(int point) const;
};

CausalityGraph build_causality_graph(const habs::Block& body);

/// Methods called on `this` on every method path to `target`. A method path
/// starts at entry or at an await and passes through no further await.
std::set<std::string> guaranteed_calls(const CausalityGraph& g, int target);
std::set<std::string> gcall_exit(const habs::Block& body);
/// Throws std::out_of_range for an unknown program point.
std::set<std::string> gcall_point(const habs::Block& body, int point);

/// Methods of `c` satisfying the four controller conditions.
std::set<std::string> detect_controllers(const habs::ClassDecl& c, const habs::Program& whole);

/// Trigger of a leading guard: the guard itself, t >= e, or false.
dl::Formula external_trigger(const habs::Guard& g);
/// Trigger of the leading guard of method `m` of `c`.
dl::Formula method_trigger(const habs::ClassDecl& c, const std::string& m);

enum class GeneratorKind { Basic, Local, Structural, Composed };
std::string to_string(GeneratorKind k);

struct RegionKey {
  std::string cls;
  std::string member;  // method name, "init" or "main"
  int point = 0;       // 0 for the member itself
  auto operator<=>(const RegionKey&) const = default;
};

std::string to_string(const RegionKey& k);

struct Generator {
  GeneratorKind kind = GeneratorKind::Basic;
  std::vector<RegionKey> order;  // class, then source position
  std::map<RegionKey, dl::Formula> images;

  /// Throws std::out_of_range("missing generator image ...").
  const dl::Formula& member(const std::string& cls, const std::string& m) const;
  const dl::Formula& point(const std::string& cls, int point) const;
};

/// Every member and await point of the program, in report order.
std::vector<RegionKey> region_domain(const habs::Program& p);

Generator generator_basic(const habs::Program& p);
Generator generator_local(const habs::Program& p);
Generator generator_structural(const habs::Program& p);
/// Point-wise conjunction with true conjuncts dropped; throws
/// std::invalid_argument on domain mismatch.
Generator compose(const Generator& a, const Generator& b);
Generator make_generator(const habs::Program& p, const std::vector<GeneratorKind>& kinds);

bool frame_exempt(const habs::MethodDecl& m, const habs::ClassDecl& c);

struct Change {
  enum class Kind { Added, Removed, GuardChanged };
  Kind kind;
  std::string cls;
  std::string method;
};

/// Parses "added:C.m", "removed:C.m", "guard:C.m". Throws std::invalid_argument.
Change parse_change(const std::string& text);

/// Members of the changed class whose obligations must be re-shown. For
/// additions `p` is the program after the change, otherwise before.
/// Throws std::out_of_range for an unknown class or method.
std::set<std::string> reproof_set(const Change& change, GeneratorKind kind, const habs::Program& p);

}  // namespace hvc::analysis
