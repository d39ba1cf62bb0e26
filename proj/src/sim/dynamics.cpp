#include "hvc/sim/dynamics.hpp"

#include <charconv>
#include <cmath>
#include <mutex>

namespace hvc::sim {

using habs::Expr;

double Value::real() const {
  if (!numeric()) throw SimError("expected a number, got " + to_string(*this));
  return num;
}

bool Value::truth() const {
  if (kind != Kind::Bool) throw SimError("expected a boolean, got " + to_string(*this));
  return num != 0;
}

std::string format_number(double d) {
  if (d == 0) return "0";  // also folds -0
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, r.ptr);
}

std::string to_string(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Num: return format_number(v.num);
    case Value::Kind::Bool: return v.num != 0 ? "true" : "false";
    case Value::Kind::Obj: return "o" + std::to_string(v.ref);
    case Value::Kind::Fut: return "f" + std::to_string(v.ref);
    case Value::Kind::Null: return "null";
    case Value::Kind::Unit: return "unit";
  }
  return "?";
}

Value default_value(const habs::Type& t) {
  if (t.is_numeric()) return Value::number(0);
  if (t.name == "Bool") return Value::boolean(false);
  if (t.name == "Unit") return Value::unit();
  return Value::null();
}

// ---- dynamics

namespace {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

Mat identity(std::size_t n) {
  Mat m(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}

Mat mul(const Mat& a, const Mat& b) {
  std::size_t n = a.size();
  Mat c(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      if (a[i][k] != 0)
        for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

bool is_zero(const Mat& m) {
  for (const auto& r : m)
    for (double x : r)
      if (x != 0) return false;
  return true;
}

bool literal_zero(const Expr& e) { return e.kind == Expr::Kind::Num && e.num == Rational(0); }

struct Affine {
  Vec coef;
  double c = 0;
};

}  // namespace

struct Dynamics::Impl {
  Store initial;
  std::vector<std::string> names;  // evolving physical fields
  std::vector<std::string> all_physical;
  std::map<std::string, std::size_t> index;
  Vec x0;
  bool closed = true;

  // closed form: x(t) = exp(M t) [x0; 1]
  Mat m;
  bool nilpotent = false;
  std::size_t nil_order = 0;

  // numeric
  std::vector<Expr> derivs;
  double h = 1e-3;
  mutable Store work;
  mutable std::vector<Vec> grid;

  mutable std::mutex mu;
  mutable double last_t = -1;
  mutable Vec last;

  Vec rhs(const Vec& y) const {
    for (std::size_t i = 0; i < names.size(); ++i) work[names[i]] = Value::number(y[i]);
    Vec d(y.size());
    for (std::size_t i = 0; i < names.size(); ++i) d[i] = eval_expr(derivs[i], work, {}, nullptr, 0).real();
    return d;
  }

  Vec rk4(const Vec& y, double dt) const {
    auto axpy = [](const Vec& a, double s, const Vec& b) {
      Vec r(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
      return r;
    };
    Vec k1 = rhs(y);
    Vec k2 = rhs(axpy(y, dt / 2, k1));
    Vec k3 = rhs(axpy(y, dt / 2, k2));
    Vec k4 = rhs(axpy(y, dt, k3));
    Vec r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      r[i] = y[i] + dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
      if (!std::isfinite(r[i])) throw SimError("integrator failure: non-finite state for " + names[i]);
    }
    return r;
  }

  Vec closed_at(double t) const {
    std::size_t n = names.size() + 1;
    Mat mt = m;
    for (auto& r : mt)
      for (auto& x : r) x *= t;
    Mat e;
    if (nilpotent) {
      e = identity(n);
      Mat p = identity(n);
      double fact = 1;
      for (std::size_t k = 1; k < nil_order; ++k) {
        p = mul(p, mt);
        fact *= static_cast<double>(k);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) e[i][j] += p[i][j] / fact;
      }
    } else {
      // scaling and squaring with a truncated Taylor series
      double norm = 0;
      for (const auto& r : mt) {
        double s = 0;
        for (double x : r) s += std::fabs(x);
        norm = std::max(norm, s);
      }
      int sq = 0;
      while (norm > 0.5) {
        norm /= 2;
        ++sq;
      }
      double scale = std::ldexp(1.0, -sq);
      for (auto& r : mt)
        for (auto& x : r) x *= scale;
      e = identity(n);
      Mat p = identity(n);
      double fact = 1;
      for (int k = 1; k <= 20; ++k) {
        p = mul(p, mt);
        fact *= k;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) e[i][j] += p[i][j] / fact;
      }
      for (int i = 0; i < sq; ++i) e = mul(e, e);
    }
    Vec y(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
      double s = e[i][n - 1];
      for (std::size_t j = 0; j + 1 < n; ++j) s += e[i][j] * x0[j];
      y[i] = s;
    }
    return y;
  }

  Vec numeric_at(double t) const {
    double kd = std::floor(t / h);
    if (kd > 1e8) throw SimError("integrator failure: evaluation time " + format_number(t) + " too far");
    auto k = static_cast<std::size_t>(kd);
    if (grid.empty()) grid.push_back(x0);
    while (grid.size() <= k) grid.push_back(rk4(grid.back(), h));
    double r = t - static_cast<double>(k) * h;
    if (r <= 0) return grid[k];
    return rk4(grid[k], r);
  }

  const Vec& state(double t) const {
    if (t != last_t) {
      last = closed ? closed_at(t) : numeric_at(t);
      last_t = t;
    }
    return last;
  }
};

namespace {

// Affine form of `e` over the evolving fields, or nullopt.
std::optional<Affine> affine(const Expr& e, const Dynamics::Impl& d) {
  std::size_t n = d.names.size();
  auto constant = [&](double c) { return Affine{Vec(n, 0.0), c}; };
  auto is_const = [](const Affine& a) {
    for (double x : a.coef)
      if (x != 0) return false;
    return true;
  };
  switch (e.kind) {
    case Expr::Kind::Num: return constant(e.num.to_double());
    case Expr::Kind::Var:
    case Expr::Kind::FieldRef: {
      auto it = d.index.find(e.name);
      if (it != d.index.end()) {
        Affine a = constant(0);
        a.coef[it->second] = 1;
        return a;
      }
      auto v = d.initial.find(e.name);
      if (v == d.initial.end()) throw SimError("unbound name '" + e.name + "' in ODE");
      return constant(v->second.real());
    }
    case Expr::Kind::Unary: {
      if (e.op != "-") return std::nullopt;
      auto a = affine(e.args[0], d);
      if (!a) return std::nullopt;
      for (auto& x : a->coef) x = -x;
      a->c = -a->c;
      return a;
    }
    case Expr::Kind::Binary: {
      auto a = affine(e.args[0], d);
      auto b = affine(e.args[1], d);
      if (!a || !b) return std::nullopt;
      if (e.op == "+" || e.op == "-") {
        double s = e.op == "+" ? 1 : -1;
        for (std::size_t i = 0; i < n; ++i) a->coef[i] += s * b->coef[i];
        a->c += s * b->c;
        return a;
      }
      if (e.op == "*") {
        if (!is_const(*a) && !is_const(*b)) return std::nullopt;
        if (is_const(*a)) std::swap(a, b);
        for (auto& x : a->coef) x *= b->c;
        a->c *= b->c;
        return a;
      }
      if (e.op == "/") {
        if (!is_const(*b)) return std::nullopt;
        if (b->c == 0) throw SimError("division by zero in ODE");
        for (auto& x : a->coef) x /= b->c;
        a->c /= b->c;
        return a;
      }
      return std::nullopt;
    }
    default: return std::nullopt;
  }
}

}  // namespace

Dynamics solve_ode(const std::vector<habs::PhysDecl>& ode, const Store& initial, SolverOptions opts) {
  auto d = std::make_shared<Dynamics::Impl>();
  d->initial = initial;
  d->h = opts.step;
  for (const auto& p : ode) {
    d->all_physical.push_back(p.name);
    // a field with derivative 0 is a constant of the dynamics
    if (literal_zero(p.deriv)) continue;
    d->index[p.name] = d->names.size();
    d->names.push_back(p.name);
    auto it = initial.find(p.name);
    if (it == initial.end()) throw SimError("no initial value for physical field '" + p.name + "'");
    d->x0.push_back(it->second.real());
    d->derivs.push_back(p.deriv);
  }
  std::size_t n = d->names.size();
  d->closed = !opts.numeric;
  if (d->closed) {
    d->m.assign(n + 1, Vec(n + 1, 0.0));
    for (std::size_t i = 0; i < n && d->closed; ++i) {
      auto a = affine(d->derivs[i], *d);
      if (!a) {
        d->closed = false;
        break;
      }
      for (std::size_t j = 0; j < n; ++j) d->m[i][j] = a->coef[j];
      d->m[i][n] = a->c;
    }
  }
  if (d->closed) {
    Mat p = identity(n + 1);
    for (std::size_t k = 1; k <= n + 1; ++k) {
      p = mul(p, d->m);
      if (is_zero(p)) {
        d->nilpotent = true;
        d->nil_order = k;
        break;
      }
    }
  } else {
    d->work = initial;
  }
  return Dynamics(std::move(d));
}

namespace {
const Store kEmpty;
const std::vector<std::string> kNone;
}  // namespace

const Store& Dynamics::initial() const { return impl_ ? impl_->initial : kEmpty; }

bool Dynamics::has(const std::string& f) const {
  if (!impl_) return false;
  for (const auto& n : impl_->all_physical)
    if (n == f) return true;
  return false;
}

bool Dynamics::evolves() const { return impl_ && !impl_->names.empty(); }
bool Dynamics::closed_form() const { return !impl_ || impl_->closed; }
const std::vector<std::string>& Dynamics::fields() const { return impl_ ? impl_->all_physical : kNone; }

double Dynamics::value(const std::string& f, double t) const {
  if (!impl_) throw SimError("no dynamics for '" + f + "'");
  auto it = impl_->index.find(f);
  if (it == impl_->index.end() || t == 0) {
    auto v = impl_->initial.find(f);
    if (v == impl_->initial.end()) throw SimError("unbound name '" + f + "'");
    return v->second.real();
  }
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->state(t)[it->second];
}

Store Dynamics::at(double t) const {
  if (!impl_) return {};
  Store s = impl_->initial;
  if (t == 0 || impl_->names.empty()) return s;
  std::lock_guard<std::mutex> lock(impl_->mu);
  const Vec& y = impl_->state(t);
  for (std::size_t i = 0; i < y.size(); ++i) s[impl_->names[i]] = Value::number(y[i]);
  return s;
}

// ---- expressions

namespace {

Value lookup(const Expr& e, const Store& rho, const Store& tau, const Dynamics* dyn, double t) {
  const std::string& n = e.name;
  bool local = e.scope == habs::Scope::Local || e.scope == habs::Scope::Param;
  if (local || e.scope == habs::Scope::Unresolved || e.scope == habs::Scope::Result) {
    auto it = tau.find(n);
    if (it != tau.end()) return it->second;
    if (local) throw SimError("unbound name '" + n + "'");
  }
  if (dyn && dyn->has(n)) return Value::number(dyn->value(n, t));
  auto it = rho.find(n);
  if (it != rho.end()) return it->second;
  throw SimError("unbound name '" + n + "'");
}

}  // namespace

Value eval_expr(const Expr& e, const Store& rho, const Store& tau, const Dynamics* dyn, double t, double slack) {
  switch (e.kind) {
    case Expr::Kind::Num: return Value::number(e.num.to_double());
    case Expr::Kind::Bool: return Value::boolean(e.boolean);
    case Expr::Kind::Null: return Value::null();
    case Expr::Kind::Unit: return Value::unit();
    case Expr::Kind::Var:
      if (e.name == "this") {
        auto it = tau.find("this");
        if (it == tau.end()) throw SimError("'this' unbound");
        return it->second;
      }
      return lookup(e, rho, tau, dyn, t);
    case Expr::Kind::FieldRef: return lookup(e, rho, tau, dyn, t);
    case Expr::Kind::Unary: {
      if (e.op == "!") return Value::boolean(!eval_expr(e.args[0], rho, tau, dyn, t, -slack).truth());
      return Value::number(-eval_expr(e.args[0], rho, tau, dyn, t, slack).real());
    }
    case Expr::Kind::Binary: {
      const std::string& o = e.op;
      if (o == "&") {
        return Value::boolean(eval_expr(e.args[0], rho, tau, dyn, t, slack).truth() &&
                              eval_expr(e.args[1], rho, tau, dyn, t, slack).truth());
      }
      if (o == "|") {
        return Value::boolean(eval_expr(e.args[0], rho, tau, dyn, t, slack).truth() ||
                              eval_expr(e.args[1], rho, tau, dyn, t, slack).truth());
      }
      Value a = eval_expr(e.args[0], rho, tau, dyn, t, slack);
      Value b = eval_expr(e.args[1], rho, tau, dyn, t, slack);
      if (o == "==") {
        if (a.kind == Value::Kind::Num && b.kind == Value::Kind::Num)
          return Value::boolean(std::fabs(a.num - b.num) <= std::max(slack, 0.0));
        return Value::boolean(a == b);
      }
      double x = a.real(), y = b.real();
      if (o == "+") return Value::number(x + y);
      if (o == "-") return Value::number(x - y);
      if (o == "*") return Value::number(x * y);
      if (o == "/") {
        if (y == 0) throw SimError("division by zero");
        return Value::number(x / y);
      }
      if (o == "<=") return Value::boolean(x <= y + slack);
      if (o == ">=") return Value::boolean(x + slack >= y);
      if (o == "<") return Value::boolean(x < y + slack);
      if (o == ">") return Value::boolean(x + slack > y);
      throw SimError("unknown operator '" + o + "'");
    }
  }
  throw SimError("bad expression");
}

std::optional<double> first_true(const std::function<bool(double)>& holds, double step, double horizon, double tol) {
  if (holds(0)) return 0.0;
  double lo = 0;
  for (std::size_t k = 1;; ++k) {
    double hi = std::min(static_cast<double>(k) * step, horizon);
    if (hi <= lo) return std::nullopt;
    if (holds(hi)) {
      while (hi - lo > tol) {
        double mid = lo + (hi - lo) / 2;
        if (mid <= lo || mid >= hi) break;
        if (holds(mid)) hi = mid;
        else lo = mid;
      }
      return hi;
    }
    if (hi >= horizon) return std::nullopt;
    lo = hi;
  }
}

double mte_guard(const habs::Guard& g, const Store& rho, const Store& tau, const Dynamics& dyn, const MteOptions& opts,
                 const std::function<bool(int)>& resolved) {
  switch (g.kind) {
    case habs::Guard::Kind::Duration:
      return std::max(0.0, eval_expr(g.expr, rho, tau, &dyn, 0).real());
    case habs::Guard::Kind::Poll: {
      Value f = eval_expr(g.expr, rho, tau, &dyn, 0);
      return f.kind == Value::Kind::Fut && resolved && resolved(f.ref) ? 0.0 : kInfinity;
    }
    case habs::Guard::Kind::Diff: {
      auto holds = [&](double t) { return eval_expr(g.expr, rho, tau, &dyn, t, opts.slack).truth(); };
      if (!dyn.evolves()) return holds(0) ? 0.0 : kInfinity;
      auto r = first_true(holds, opts.step, opts.horizon, opts.tol);
      return r ? *r : kInfinity;
    }
  }
  return kInfinity;
}

}  // namespace hvc::sim
