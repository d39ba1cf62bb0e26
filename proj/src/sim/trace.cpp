#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "hvc/dl/ops.hpp"
#include "hvc/sim/sim.hpp"

namespace hvc::sim {

namespace {
constexpr double kSame = 1e-12;

Store advance_store(const TracePoint& p, double dt) {
  Store s = p.rho;
  if (dt <= 0) return s;
  for (const auto& f : p.dyn.fields()) s[f] = Value::number(p.dyn.value(f, dt));
  return s;
}
}  // namespace

Trace extract_trace(const Run& r, int object) {
  if (object < 0 || r.configs.empty() || static_cast<std::size_t>(object) >= r.configs.back().objects.size())
    throw std::out_of_range("object o" + std::to_string(object) + " does not occur in the run");
  Trace tr;
  tr.object = object;
  tr.end = r.end;
  for (const auto& c : r.configs) {
    if (static_cast<std::size_t>(object) >= c.objects.size()) continue;
    const Object& o = c.objects[static_cast<std::size_t>(object)];
    if (tr.points.empty()) {
      tr.cls = o.class_name();
      tr.created = o.created;
    }
    TracePoint p{c.clock, o.rho, o.dyn};
    if (o.active && o.cls && !o.cls->physical.empty()) p.dyn = solve_ode(o.cls->physical, o.rho);
    if (!tr.points.empty() && std::fabs(tr.points.back().clock - c.clock) <= kSame) tr.points.back() = std::move(p);
    else tr.points.push_back(std::move(p));
  }
  tr.end = std::max(tr.end, tr.points.back().clock);
  return tr;
}

Store Trace::at(double x) const {
  double abs = created + x;
  auto it = std::upper_bound(points.begin(), points.end(), abs + kSame,
                             [](double v, const TracePoint& p) { return v < p.clock; });
  if (it == points.begin()) throw std::out_of_range("trace undefined before creation");
  const TracePoint& p = *std::prev(it);
  if (std::fabs(p.clock - abs) <= kSame) return p.rho;
  return advance_store(p, abs - p.clock);
}

Store Trace::at_left(double x) const {
  double abs = created + x;
  auto it = std::lower_bound(points.begin(), points.end(), abs - kSame,
                             [](const TracePoint& p, double v) { return p.clock < v; });
  if (it == points.begin()) return at(x);
  const TracePoint& p = *std::prev(it);
  return advance_store(p, abs - p.clock);
}

std::vector<SuspensionSubtrace> suspension_subtraces(const Trace& tr, const Run& r) {
  std::vector<SuspensionSubtrace> out, open;
  if (tr.cls == "main") return out;
  auto close = [&](double at, bool is_open) {
    for (auto& s : open) {
      s.end = at - tr.created;
      s.open = is_open;
      if (s.duration() > kSame) out.push_back(s);
    }
    open.clear();
  };
  for (const auto& st : r.steps) {
    if (st.object != tr.object) continue;
    if (st.rule == "5" || st.rule == "2") {
      SuspensionSubtrace s;
      s.key = analysis::RegionKey{tr.cls, st.member, st.rule == "2" ? st.point : 0};
      s.object = tr.object;
      s.start = st.clock - tr.created;
      open.push_back(s);
    } else if ((st.rule == "3" || st.rule == "4") && st.nontrivial) {
      close(st.clock, false);
    }
  }
  close(tr.end, true);
  std::stable_sort(out.begin(), out.end(),
                   [](const SuspensionSubtrace& a, const SuspensionSubtrace& b) { return a.start < b.start; });
  return out;
}

std::vector<SuspensionSubtrace> suspension_subtraces(const Trace& tr, const Run& r, const analysis::RegionKey& x) {
  std::vector<SuspensionSubtrace> out;
  for (auto& s : suspension_subtraces(tr, r))
    if (s.key == x) out.push_back(s);
  return out;
}

namespace {

dl::Valuation valuation(const Store& s, double t) {
  dl::Valuation v;
  for (const auto& [k, x] : s)
    if (x.numeric()) v[k] = x.num;
  v["t"] = t;
  return v;
}

SubtraceReport monitor_one(const Trace& tr, const Run& r, const SuspensionSubtrace& sub, const dl::Formula& region,
                           const dl::Formula& inv, const MonitorOptions& opts) {
  SubtraceReport rep;
  rep.sub = sub;
  std::set<double> times;
  double len = sub.duration();
  for (std::size_t k = 0;; ++k) {
    double s = static_cast<double>(k) * opts.step;
    if (s >= len) break;
    times.insert(s);
  }
  times.insert(len);
  for (const auto& c : r.configs) {
    double s = c.clock - tr.created - sub.start;
    if (s > 0 && s < len) times.insert(s);
  }
  for (double s : times) {
    Store st = (s >= len && !sub.open) ? tr.at_left(sub.start + s) : tr.at(sub.start + s);
    auto v = valuation(st, s);
    bool reg = dl::evaluate(region, v, opts.tol);
    bool iv = dl::evaluate(inv, v, opts.tol);
    ++rep.samples;
    rep.region_ok = rep.region_ok && reg;
    rep.inv_ok = rep.inv_ok && iv;
    if ((!reg || !iv) && !rep.first)
      rep.first = Counterexample{sub.key, tr.created + sub.start + s, s, std::move(st), !reg, !iv};
  }
  return rep;
}

}  // namespace

std::size_t MonitorReport::violations() const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [](const SubtraceReport& s) { return !s.region_ok || !s.inv_ok; }));
}

const Counterexample* MonitorReport::first() const {
  const Counterexample* best = nullptr;
  for (const auto& s : items)
    if (s.first && (!best || s.first->clock < best->clock)) best = &*s.first;
  return best;
}

void MonitorReport::append(const MonitorReport& other) {
  items.insert(items.end(), other.items.begin(), other.items.end());
}

MonitorReport monitor(const Trace& tr, const Run& r, const std::vector<SuspensionSubtrace>& subs,
                      const dl::Formula& region, const dl::Formula& inv, const MonitorOptions& opts) {
  MonitorReport rep;
  for (const auto& s : subs) rep.items.push_back(monitor_one(tr, r, s, region, inv, opts));
  return rep;
}

MonitorReport check_class(const Run& r, const habs::ClassDecl& cls, const analysis::Generator& g,
                          const dl::Formula& inv, const MonitorOptions& opts) {
  MonitorReport rep;
  const auto& objs = r.configs.back().objects;
  for (const auto& o : objs) {
    if (!o.cls || o.cls->name != cls.name) continue;
    Trace tr = extract_trace(r, o.id);
    for (const auto& s : suspension_subtraces(tr, r)) {
      const dl::Formula& region = s.key.point == 0 ? g.member(cls.name, s.key.member) : g.point(cls.name, s.key.point);
      rep.items.push_back(monitor_one(tr, r, s, region, inv, opts));
    }
  }
  return rep;
}

std::string trace_tsv(const Trace& tr, double step) {
  std::set<double> times;
  double len = tr.length();
  for (std::size_t k = 0;; ++k) {
    double s = static_cast<double>(k) * step;
    if (s > len) break;
    times.insert(s);
  }
  times.insert(len);
  for (const auto& p : tr.points) times.insert(p.clock - tr.created);
  std::ostringstream os;
  for (double s : times) {
    os << format_number(s);
    for (const auto& [k, v] : tr.at(s))
      if (v.numeric()) os << '\t' << k << '=' << to_string(v);
    os << '\n';
  }
  return os.str();
}

}  // namespace hvc::sim
