#include <algorithm>
#include <stdexcept>

#include "hvc/analysis/analysis.hpp"
#include "hvc/dl/kyx.hpp"
#include "hvc/dl/ops.hpp"
#include "hvc/habs/sema.hpp"
#include "hvc/habs/to_dl.hpp"

namespace hvc::analysis {

using habs::ClassDecl;
using habs::Guard;
using habs::MethodDecl;
using habs::Program;
using habs::Stmt;

dl::Formula external_trigger(const Guard& g) {
  switch (g.kind) {
    case Guard::Kind::Diff: return habs::to_formula(g.expr);
    case Guard::Kind::Duration: return dl::ge(dl::var("t"), habs::to_term(g.expr));
    case Guard::Kind::Poll: return dl::fls();
  }
  return dl::fls();
}

dl::Formula method_trigger(const ClassDecl& c, const std::string& m) {
  const MethodDecl* md = c.method(m);
  if (!md) throw std::out_of_range("unknown method " + c.name + "." + m);
  if (md->body.empty() || md->body.front().kind != Stmt::Kind::Await)
    throw std::invalid_argument("method " + c.name + "." + m + " is not normalized");
  return external_trigger(md->body.front().guard);
}

namespace {

bool ends_with_self_call(const habs::Block& b, const std::string& m) {
  // trailing returns do not count as statements after the call
  auto it = b.rbegin();
  while (it != b.rend() && it->kind == Stmt::Kind::Return) ++it;
  if (it == b.rend()) return false;
  const Stmt& s = *it;
  if (s.kind == Stmt::Kind::Assign) return s.rhs.is_self_call() && s.rhs.name == m;
  if (s.kind == Stmt::Kind::If)
    return s.else_block && ends_with_self_call(s.then_block, m) && ends_with_self_call(*s.else_block, m);
  return false;
}

struct CallSite {
  std::string cls;
  std::string member;
};

std::vector<CallSite> call_sites(const Program& p, const ClassDecl& target, const std::string& m) {
  std::vector<CallSite> out;
  auto scan = [&](const habs::Block& b, const ClassDecl* cls, const std::string& member) {
    habs::for_each_stmt(b, [&](const Stmt& s) {
      if (s.kind != Stmt::Kind::Assign || s.rhs.kind != habs::Rhs::Kind::Call || s.rhs.name != m) return;
      if (habs::receiver_class(p, cls, member, s.rhs.expr) == &target) out.push_back({cls ? cls->name : "", member});
    });
  };
  for (const auto& c : p.classes) {
    if (c.init_block) scan(*c.init_block, &c, "init");
    for (const auto& md : c.methods) scan(md.body, &c, md.name);
  }
  scan(p.main_block, nullptr, "main");
  return out;
}

}  // namespace

std::set<std::string> detect_controllers(const ClassDecl& c, const Program& whole) {
  std::set<std::string> out;
  for (const auto& m : c.methods) {
    // (1) leading await
    if (m.body.empty() || m.body.front().kind != Stmt::Kind::Await) continue;
    // (2) no other suspension, get or duration
    bool plain = true;
    bool first = true;
    habs::for_each_stmt(m.body, [&](const Stmt& s) {
      if (!first && s.kind == Stmt::Kind::Await) plain = false;
      if (s.kind == Stmt::Kind::Duration) plain = false;
      if (s.kind == Stmt::Kind::Assign && s.rhs.kind == habs::Rhs::Kind::Get) plain = false;
      first = false;
    });
    if (!plain) continue;
    // (3) tail-recursive
    if (!ends_with_self_call(m.body, m.name)) continue;
    // (4) called only from the init block (and from itself)
    bool from_init = false, elsewhere = false;
    for (const auto& site : call_sites(whole, c, m.name)) {
      if (site.cls == c.name && site.member == "init") from_init = true;
      else if (!(site.cls == c.name && site.member == m.name)) elsewhere = true;
    }
    if (from_init && !elsewhere) out.insert(m.name);
  }
  return out;
}

std::string to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::Basic: return "basic";
    case GeneratorKind::Local: return "local";
    case GeneratorKind::Structural: return "structural";
    case GeneratorKind::Composed: return "composed";
  }
  return "?";
}

std::string to_string(const RegionKey& k) {
  std::string s = (k.cls.empty() ? std::string() : k.cls + ".") + k.member;
  if (k.point) s += "@" + std::to_string(k.point);
  return s;
}

const dl::Formula& Generator::member(const std::string& cls, const std::string& m) const {
  auto it = images.find({cls, m, 0});
  if (it == images.end()) throw std::out_of_range("missing generator image for " + cls + "." + m);
  return it->second;
}

const dl::Formula& Generator::point(const std::string& cls, int point) const {
  for (const auto& [k, f] : images)
    if (k.cls == cls && k.point == point) return f;
  throw std::out_of_range("missing generator image for " + cls + " point " + std::to_string(point));
}

std::vector<RegionKey> region_domain(const Program& p) {
  std::vector<RegionKey> out;
  auto points = [&](const habs::Block& b, const std::string& cls, const std::string& member) {
    habs::for_each_stmt(b, [&](const Stmt& s) {
      if (s.kind == Stmt::Kind::Await) out.push_back({cls, member, s.point});
    });
  };
  for (const auto& c : p.classes) {
    out.push_back({c.name, "init", 0});
    if (c.init_block) points(*c.init_block, c.name, "init");
    for (const auto& m : c.methods) {
      out.push_back({c.name, m.name, 0});
      points(m.body, c.name, m.name);
    }
  }
  out.push_back({"", "main", 0});
  points(p.main_block, "", "main");
  return out;
}

namespace {

const habs::Block* member_body(const Program& p, const RegionKey& k) {
  static const habs::Block empty;
  if (k.cls.empty()) return &p.main_block;
  const ClassDecl* c = p.find_class(k.cls);
  if (!c) return nullptr;
  if (k.member == "init") return c->init_block ? &*c->init_block : &empty;
  const MethodDecl* m = c->method(k.member);
  return m ? &m->body : nullptr;
}

dl::Formula negated_triggers(const ClassDecl& c, const std::set<std::string>& methods) {
  std::vector<dl::Formula> parts;
  // declaration order keeps the images deterministic
  for (const auto& m : c.methods)
    if (methods.count(m.name)) parts.push_back(dl::weak_negate(method_trigger(c, m.name)));
  return dl::conj(parts);
}

Generator build(const Program& p, GeneratorKind kind) {
  Generator g;
  g.kind = kind;
  g.order = region_domain(p);
  std::map<std::string, std::set<std::string>> ctrl;
  if (kind == GeneratorKind::Structural)
    for (const auto& c : p.classes) ctrl[c.name] = detect_controllers(c, p);
  for (const auto& k : g.order) {
    dl::Formula f = dl::tru();
    const ClassDecl* c = k.cls.empty() ? nullptr : p.find_class(k.cls);
    if (c && kind == GeneratorKind::Local) {
      const habs::Block* body = member_body(p, k);
      auto calls = k.point ? gcall_point(*body, k.point) : gcall_exit(*body);
      f = negated_triggers(*c, calls);
    } else if (c && kind == GeneratorKind::Structural) {
      f = negated_triggers(*c, ctrl[c->name]);
    }
    g.images.emplace(k, f);
  }
  return g;
}

}  // namespace

Generator generator_basic(const Program& p) { return build(p, GeneratorKind::Basic); }
Generator generator_local(const Program& p) { return build(p, GeneratorKind::Local); }
Generator generator_structural(const Program& p) { return build(p, GeneratorKind::Structural); }

Generator compose(const Generator& a, const Generator& b) {
  if (a.order != b.order) throw std::invalid_argument("generator domains differ");
  Generator g;
  g.kind = GeneratorKind::Composed;
  g.order = a.order;
  for (const auto& k : a.order) {
    std::vector<dl::Formula> parts;
    const dl::Formula& fa = a.images.at(k);
    const dl::Formula& fb = b.images.at(k);
    if (!dl::is_true(fa)) parts = dl::conjuncts(fa);
    const size_t own = parts.size();
    if (!dl::is_true(fb))
      for (const auto& q : dl::conjuncts(fb))
        if (std::find(parts.begin(), parts.begin() + own, q) == parts.begin() + own) parts.push_back(q);
    g.images.emplace(k, dl::conj(parts));
  }
  return g;
}

Generator make_generator(const Program& p, const std::vector<GeneratorKind>& kinds) {
  if (kinds.empty()) return generator_basic(p);
  auto one = [&](GeneratorKind k) {
    switch (k) {
      case GeneratorKind::Local: return generator_local(p);
      case GeneratorKind::Structural: return generator_structural(p);
      default: return generator_basic(p);
    }
  };
  Generator g = one(kinds[0]);
  for (size_t i = 1; i < kinds.size(); ++i) g = compose(g, one(kinds[i]));
  return g;
}

bool frame_exempt(const MethodDecl& m, const ClassDecl& c) {
  std::set<std::string> protected_fields;
  if (c.object_invariant) {
    for (const auto& v : dl::free_variables(habs::to_formula(*c.object_invariant))) protected_fields.insert(v);
  }
  for (const auto& d : c.physical) {
    protected_fields.insert(d.name);
    for (const auto& v : dl::free_variables(dl::ge(habs::to_term(d.deriv), dl::num(0)))) protected_fields.insert(v);
  }
  bool ok = true;
  habs::for_each_stmt(m.body, [&](const Stmt& s) {
    if (s.kind != Stmt::Kind::Assign) return;
    if (s.rhs.kind == habs::Rhs::Kind::Call || s.rhs.kind == habs::Rhs::Kind::New) ok = false;
    bool field = s.target_scope == habs::Scope::Field || s.target_scope == habs::Scope::Physical;
    if (!s.target.empty() && field && protected_fields.count(s.target)) ok = false;
  });
  if (m.contract.ensures && !dl::is_true(habs::to_formula(*m.contract.ensures))) ok = false;
  return ok;
}

Change parse_change(const std::string& text) {
  auto colon = text.find(':');
  auto dot = text.find('.', colon == std::string::npos ? 0 : colon);
  if (colon == std::string::npos || dot == std::string::npos || dot + 1 >= text.size())
    throw std::invalid_argument("change must look like removed:Class.method");
  std::string kind = text.substr(0, colon);
  Change c;
  if (kind == "added") c.kind = Change::Kind::Added;
  else if (kind == "removed") c.kind = Change::Kind::Removed;
  else if (kind == "guard" || kind == "guard_changed") c.kind = Change::Kind::GuardChanged;
  else throw std::invalid_argument("unknown change kind '" + kind + "'");
  c.cls = text.substr(colon + 1, dot - colon - 1);
  c.method = text.substr(dot + 1);
  return c;
}

std::set<std::string> reproof_set(const Change& change, GeneratorKind kind, const Program& p) {
  const ClassDecl* c = p.find_class(change.cls);
  if (!c) throw std::out_of_range("unknown class " + change.cls);
  if (!c->method(change.method)) throw std::out_of_range("unknown method " + change.cls + "." + change.method);
  const bool removed = change.kind == Change::Kind::Removed;
  if (kind == GeneratorKind::Composed) {
    auto out = reproof_set(change, GeneratorKind::Local, p);
    out.merge(reproof_set(change, GeneratorKind::Structural, p));
    return out;
  }

  std::set<std::string> out;
  if (!removed) out.insert(change.method);
  if (kind == GeneratorKind::Basic) return out;

  if (kind == GeneratorKind::Structural && detect_controllers(*c, p).count(change.method)) {
    out.insert("init");
    for (const auto& m : c->methods) out.insert(m.name);
    if (removed) out.erase(change.method);
    return out;
  }

  // local (and structural for non-controllers): members whose gcall at exit
  // or at any await point contains the method
  auto depends = [&](const habs::Block& b) {
    if (gcall_exit(b).count(change.method)) return true;
    bool hit = false;
    habs::for_each_stmt(b, [&](const Stmt& s) {
      if (s.kind == Stmt::Kind::Await && gcall_point(b, s.point).count(change.method)) hit = true;
    });
    return hit;
  };
  if (c->init_block && depends(*c->init_block)) out.insert("init");
  for (const auto& m : c->methods)
    if (depends(m.body)) out.insert(m.name);
  if (removed) out.erase(change.method);
  return out;
}

}  // namespace hvc::analysis
