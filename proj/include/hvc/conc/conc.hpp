#pragma once

// Guarded-procedure concurrent programs over one global ODE: the execute and
// urgent rules, reachable-state sampling and the three obligation schemes.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "hvc/dl/ast.hpp"
#include "hvc/dl/ops.hpp"

namespace hvc::conc {

struct Procedure {
  std::string name;
  dl::Formula guard;  // conjunction of weak inequalities
  dl::Program body;   // no ODEs
};

struct ConcurrentProgram {
  std::vector<Procedure> procedures;
  dl::Program dyn;  // ODE with domain true
  dl::Valuation init;
  std::optional<dl::Formula> inv;
};

/// Text syntax:
///   dyn { level' = drain }
///   prcd up: ?level >= 10 { drain := -1 }
///   init { level := 5; drain := -1 }
///   inv { 3 <= level & level <= 10 }
/// `=` is accepted for `:=` in bodies and init. Throws std::invalid_argument.
ConcurrentProgram parse_concurrent(std::string_view text);

struct ConcurrentState {
  double clock = 0;
  dl::Valuation val;
};

enum class Policy { Deterministic, Random };

struct ConcOptions {
  double horizon = 50;
  double step = 1e-3;  // event sampling
  Policy policy = Policy::Deterministic;
  std::uint64_t seed = 0;
  bool random_havoc = false;  // x := * keeps the value unless set
  double slack = 1e-9;
  std::size_t instant_cap = 10'000;
};

struct ConcStep {
  std::string rule;       // "execute" or "urgent"
  std::string procedure;  // execute only
  ConcurrentState before;
  ConcurrentState after;
};

class ConcurrentSimulator {
 public:
  ConcurrentSimulator(const ConcurrentProgram& p, ConcOptions opts);

  /// execute if some enabled procedure changes the state, otherwise urgent;
  /// nullopt when no guard is reached again before the horizon (final).
  /// Throws std::runtime_error when every enabled body fails.
  std::optional<ConcStep> step(const ConcurrentState& s);

  struct Run {
    std::vector<ConcStep> steps;
    ConcurrentState last;
    bool final = false;      // stopped because nothing happens before the horizon
    bool capped = false;     // instant cap hit
  };
  Run run(const dl::Valuation& sigma0);

  /// Valuation after following the dynamics for dt.
  dl::Valuation flow(const dl::Valuation& v, double dt) const;
  bool holds(const dl::Formula& f, const dl::Valuation& v) const;

 private:
  std::optional<dl::Valuation> exec(const dl::Program& prog, dl::Valuation v);

  const ConcurrentProgram& prog_;
  ConcOptions opts_;
  std::mt19937_64 rng_;
};

/// States where procedures start or end, dynamics samples between them and
/// after the final state, up to the horizon.
std::vector<dl::Valuation> reachable_sample(const ConcurrentProgram& p, const dl::Valuation& sigma0, double horizon,
                                            double step, ConcOptions opts = {});

enum class Scheme { Postcond, Basic, Precise };
std::string to_string(Scheme s);

struct ConcObligation {
  std::string name;  // "init" or the procedure name
  dl::Formula formula;
};

/// The init obligation followed by one per procedure.
std::vector<ConcObligation> obligations(const ConcurrentProgram& p, const dl::Valuation& sigma0,
                                        const dl::Formula& inv, Scheme scheme);

/// Conjunction of the weakly negated guards.
dl::Formula post_region(const ConcurrentProgram& p);

}  // namespace hvc::conc
