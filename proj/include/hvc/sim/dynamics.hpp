#pragma once

// Runtime values, expression evaluation over continuous dynamics, ODE
// solutions and the event search behind maximal time elapse.

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hvc/habs/ast.hpp"

namespace hvc::sim {

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Value {
  enum class Kind { Num, Bool, Obj, Fut, Null, Unit };
  Kind kind = Kind::Unit;
  double num = 0;  // Num, Bool (0 or 1)
  int ref = -1;    // Obj, Fut

  static Value number(double v) { return {Kind::Num, v, -1}; }
  static Value boolean(bool b) { return {Kind::Bool, b ? 1.0 : 0.0, -1}; }
  static Value object(int o) { return {Kind::Obj, 0, o}; }
  static Value future(int f) { return {Kind::Fut, 0, f}; }
  static Value null() { return {Kind::Null, 0, -1}; }
  static Value unit() { return {Kind::Unit, 0, -1}; }

  bool numeric() const { return kind == Kind::Num || kind == Kind::Bool; }
  /// Throws SimError unless numeric.
  double real() const;
  bool truth() const;

  friend bool operator==(const Value&, const Value&) = default;
};

std::string to_string(const Value& v);
/// Shortest decimal that reads back to the same double.
std::string format_number(double d);

using Store = std::map<std::string, Value>;

/// Default value of a declared type: 0, false or null.
Value default_value(const habs::Type& t);

struct SolverOptions {
  double step = 1e-3;    // integrator step
  bool numeric = false;  // integrate even when a closed form exists
};

/// Solution of a class ODE from an initial store. Copies share the solution;
/// numeric solutions extend a step cache on demand.
class Dynamics {
 public:
  Dynamics() = default;

  const Store& initial() const;
  bool has(const std::string& field) const;
  bool evolves() const;  // some physical field has a nonzero derivative
  bool closed_form() const;
  const std::vector<std::string>& fields() const;

  double value(const std::string& field, double t) const;
  /// The initial store with physical fields advanced by t.
  Store at(double t) const;

  struct Impl;

 private:
  explicit Dynamics(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<Impl> impl_;
  friend Dynamics solve_ode(const std::vector<habs::PhysDecl>&, const Store&, SolverOptions);
};

/// Closed form when every derivative is affine in the evolving fields with
/// constant coefficients (matrix exponential), RK4 otherwise.
Dynamics solve_ode(const std::vector<habs::PhysDecl>& ode, const Store& initial, SolverOptions opts = {});

/// Value of `e` after `t` time units: physical fields from `dyn`, other
/// fields from `rho`, locals and parameters from `tau`. `slack` relaxes
/// comparisons toward satisfaction. Throws SimError.
Value eval_expr(const habs::Expr& e, const Store& rho, const Store& tau, const Dynamics* dyn, double t,
                double slack = 0.0);
inline Value eval_expr(const habs::Expr& e, const Store& store, const Dynamics& dyn, double t) {
  return eval_expr(e, store, {}, &dyn, t);
}

/// Least t in [0, horizon] with holds(t): sampled at `step`, then bisected
/// to `tol`. Returns the satisfying end of the final bracket.
std::optional<double> first_true(const std::function<bool(double)>& holds, double step, double horizon,
                                 double tol = 1e-9);

struct MteOptions {
  double step = 1e-3;
  double horizon = 1e3;  // search bound for diff guards
  double slack = 1e-9;
  double tol = 1e-9;
};

/// Maximal time elapse of a guard; kInfinity for "never".
double mte_guard(const habs::Guard& g, const Store& rho, const Store& tau, const Dynamics& dyn,
                 const MteOptions& opts = {}, const std::function<bool(int)>& resolved = {});

}  // namespace hvc::sim
