#pragma once

// Operational semantics of HABS: configurations, the discrete rules (1)-(14),
// timed advance (ii), runs, traces, suspension-subtraces and monitoring.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "hvc/analysis/analysis.hpp"
#include "hvc/dl/ast.hpp"
#include "hvc/habs/ast.hpp"
#include "hvc/sim/dynamics.hpp"

namespace hvc::sim {

/// One runtime statement. Statements point into the program, which must
/// outlive every configuration built from it.
struct Item {
  enum class Kind {
    Stmt,     // a source statement
    Suspend,  // inserted by rule (1)
    Loop,     // `if (c) { s; while (c) { s } }`, produced by rule (12)
    Value,    // the assignment `stmt.target = value` left by rule (6)
    Wait,     // remaining time of a blocking duration
  };
  Kind kind = Kind::Stmt;
  const habs::Stmt* stmt = nullptr;
  Value value;
  double left = 0;
};

struct Process {
  Store tau;
  int fid = 0;
  std::vector<Item> rs;  // back() executes next
  std::string member;    // method name, "init" or "main"
  std::optional<double> wait_left;  // leading `await duration` while queued

  const Item* head() const { return rs.empty() ? nullptr : &rs.back(); }
  /// The await statement at the head, if any.
  const habs::Stmt* head_await() const;
};

struct Object {
  int id = 0;
  const habs::ClassDecl* cls = nullptr;  // null for the main block's object
  Store rho;
  Dynamics dyn;
  std::optional<Process> active;
  std::vector<Process> queue;
  double created = 0;

  std::string class_name() const { return cls ? cls->name : "main"; }
};

struct Message {
  int callee = 0;
  std::string method;
  std::vector<Value> args;
  int fid = 0;
};

struct Configuration {
  double clock = 0;
  std::vector<Object> objects;  // indexed by identity, in creation order
  std::vector<Message> messages;
  std::map<int, Value> futures;
  int next_fid = 1;
  std::map<std::string, int> names;  // main-block variables holding objects
  std::size_t script_next = 0;
};

/// `at <time> call <object>.<method>(<literals>)`
struct ScriptCall {
  double time = 0;
  std::string object;
  std::string method;
  std::vector<Value> args;
};

/// Lines may be blank or start with '#'. Throws std::invalid_argument
/// ("line N: ...").
std::vector<ScriptCall> parse_script(std::string_view text);

enum class PolicyKind { Deterministic, Random };

struct SimOptions {
  double horizon = 100;
  double step = 1e-3;  // event sampling and integrator step
  PolicyKind policy = PolicyKind::Deterministic;
  std::uint64_t seed = 0;
  std::size_t step_cap = 1'000'000;
  std::size_t instant_cap = 10'000;  // discrete steps without time passing
  double slack = 1e-9;
  bool numeric = false;  // force numeric integration
  std::vector<ScriptCall> script;
};

struct Transition {
  double clock = 0;
  std::string rule;  // "1".."14", "ii", "dur", "skip", "script"
  int object = -1;
  std::string member;
  int point = 0;            // rule 2: await point of the suspension
  bool nontrivial = false;  // rules 3/4: the process does something
  std::string detail;
};

std::string format_transition(const Transition& t, const Configuration& after);

struct Run {
  enum class Status { Horizon, Final, StepCap, Deadlock, Error };
  std::vector<Configuration> configs;  // configs[k + 1] follows steps[k]
  std::vector<Transition> steps;
  Status status = Status::Horizon;
  std::string message;
  double end = 0;  // time up to which traces are defined

  std::string log() const;
};

std::string to_string(Run::Status s);

class Simulator {
 public:
  Simulator(const habs::Program& p, SimOptions opts);

  /// Clock 0 with the main block active on object 0.
  Configuration initial() const;
  /// One rule of (1)-(14) or a script injection; nullopt when quiescent.
  std::optional<Transition> step_discrete(Configuration& c);
  /// Rule (ii); nullopt when the time elapse is infinite or passes the
  /// horizon. Call only on quiescent configurations.
  std::optional<Transition> step_timed(Configuration& c);

  Run run();
  Run run_from(Configuration c);

  /// Global maximal time elapse of a quiescent configuration. Diff guards
  /// are searched up to the horizon; `truncated` reports a search that
  /// ended there.
  double mte(const Configuration& c, bool* truncated = nullptr) const;
  /// Re-solve an object's dynamics from its current store.
  void resolve(Object& o) const;
  const SimOptions& options() const { return opts_; }

 private:
  struct Candidate;
  std::vector<Candidate> candidates(const Configuration& c, std::size_t obj) const;
  Transition apply(Configuration& c, const Candidate& k);
  bool guard_holds(const Configuration& c, const Object& o, const Process& p) const;
  void enqueue(Object& o, Process p) const;
  Transition advance(Configuration& c, double dt) const;

  const habs::Program& prog_;
  SimOptions opts_;
  std::mt19937_64 rng_;
};

// ---- traces

struct TracePoint {
  double clock = 0;
  Store rho;
  Dynamics dyn;
};

class Trace {
 public:
  int object = -1;
  std::string cls;
  double created = 0;
  double end = 0;  // absolute
  std::vector<TracePoint> points;  // final configuration per clock, ascending

  double length() const { return end - created; }
  /// State at normalized time x: the final configuration at x, otherwise
  /// the dynamics of the last configuration before x.
  Store at(double x) const;
  /// Limit from the left: ignores configurations at exactly x.
  Store at_left(double x) const;
};

/// Throws std::out_of_range for an object not in the run.
Trace extract_trace(const Run& r, int object);

struct SuspensionSubtrace {
  analysis::RegionKey key;
  int object = -1;
  double start = 0;  // normalized
  double end = 0;
  bool open = false;  // no later scheduling, cut at the run's end

  double duration() const { return end - start; }
};

/// All suspension-subtraces of the trace's object.
std::vector<SuspensionSubtrace> suspension_subtraces(const Trace& tr, const Run& r);
/// Those of one member (point 0) or await point.
std::vector<SuspensionSubtrace> suspension_subtraces(const Trace& tr, const Run& r, const analysis::RegionKey& x);

struct Counterexample {
  analysis::RegionKey key;
  double clock = 0;  // absolute
  double t = 0;      // local clock of the subtrace
  Store state;
  bool region_failed = false;
  bool inv_failed = false;
};

struct SubtraceReport {
  SuspensionSubtrace sub;
  std::size_t samples = 0;
  bool region_ok = true;
  bool inv_ok = true;
  std::optional<Counterexample> first;
};

struct MonitorReport {
  std::vector<SubtraceReport> items;

  std::size_t violations() const;
  bool ok() const { return violations() == 0; }
  const Counterexample* first() const;
  void append(const MonitorReport& other);
};

struct MonitorOptions {
  double step = 1e-3;
  double tol = 1e-6;  // slack on comparisons
};

/// Samples every subtrace at `step`, at its endpoints and at the run's
/// configurations inside it. `t` is bound to the local clock.
MonitorReport monitor(const Trace& tr, const Run& r, const std::vector<SuspensionSubtrace>& subs,
                      const dl::Formula& region, const dl::Formula& inv, const MonitorOptions& opts = {});

/// Checks every object of class `cls` against the generator's image for each
/// of its subtraces and the given invariant.
MonitorReport check_class(const Run& r, const habs::ClassDecl& cls, const analysis::Generator& g,
                          const dl::Formula& inv, const MonitorOptions& opts = {});

/// Tab-separated samples `time<TAB>field=value...` of numeric fields.
std::string trace_tsv(const Trace& tr, double step);

}  // namespace hvc::sim
