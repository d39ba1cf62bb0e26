#include "hvc/habs/sema.hpp"

#include <map>
#include <set>

namespace hvc::habs {

NameError::NameError(Loc l, std::string msg)
    : std::runtime_error(std::to_string(l.line) + ":" + std::to_string(l.col) + ": " + msg),
      loc(l),
      message(std::move(msg)) {}

namespace {

Stmt leading_await(Loc loc) {
  Stmt s;
  s.kind = Stmt::Kind::Await;
  s.guard.kind = Guard::Kind::Diff;
  s.guard.expr = Expr::boolean_lit(true, loc);
  s.loc = loc;
  return s;
}

std::vector<Param> collect_locals(const Block& b) {
  std::vector<Param> out;
  for_each_stmt(b, [&](const Stmt& s) {
    if (s.kind != Stmt::Kind::Assign || !s.decl_type) return;
    for (const auto& p : out) {
      if (p.name != s.target) continue;
      if (p.type != *s.decl_type) throw NameError(s.loc, "local '" + s.target + "' redeclared with another type");
      return;
    }
    out.push_back({*s.decl_type, s.target});
  });
  return out;
}

struct Env {
  const ClassDecl* cls = nullptr;
  std::map<std::string, Scope> names;
  bool allow_result = false;

  Scope lookup(const std::string& n) const {
    if (auto it = names.find(n); it != names.end()) return it->second;
    if (cls && cls->is_field(n)) return cls->is_physical(n) ? Scope::Physical : Scope::Field;
    if (allow_result && n == "result") return Scope::Result;
    return Scope::Unresolved;
  }
};

void resolve(Expr& e, const Env& env) {
  if (e.kind == Expr::Kind::Var) {
    if (e.name == "this") {
      if (!env.cls) throw NameError(e.loc, "'this' outside of a class");
      return;
    }
    e.scope = env.lookup(e.name);
    if (e.scope == Scope::Unresolved) throw NameError(e.loc, "unknown name '" + e.name + "'");
  } else if (e.kind == Expr::Kind::FieldRef) {
    if (!env.cls || !env.cls->is_field(e.name)) throw NameError(e.loc, "unknown field '" + e.name + "'");
    e.scope = env.cls->is_physical(e.name) ? Scope::Physical : Scope::Field;
  }
  for (auto& a : e.args) resolve(a, env);
}

void resolve(Block& b, const Env& env) {
  for_each_stmt_mut(b, [&](Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::Assign:
        if (!s.target.empty()) {
          if (s.target_is_field) {
            if (!env.cls || !env.cls->is_field(s.target))
              throw NameError(s.loc, "unknown field '" + s.target + "'");
            s.target_scope = env.cls->is_physical(s.target) ? Scope::Physical : Scope::Field;
          } else {
            s.target_scope = env.lookup(s.target);
            if (s.target_scope == Scope::Unresolved || s.target_scope == Scope::Result)
              throw NameError(s.loc, "unknown name '" + s.target + "'");
          }
        }
        if (s.rhs.kind != Rhs::Kind::New) resolve(s.rhs.expr, env);
        for (auto& a : s.rhs.args) resolve(a, env);
        break;
      case Stmt::Kind::Await: resolve(s.guard.expr, env); break;
      case Stmt::Kind::Duration:
      case Stmt::Kind::If:
      case Stmt::Kind::While:
      case Stmt::Kind::Return: resolve(s.expr, env); break;
      case Stmt::Kind::Skip: break;
    }
  });
}

void inherit_contracts(const Program& p, ClassDecl& c) {
  for (const auto& iname : c.implements) {
    const InterfaceDecl* i = p.find_interface(iname);
    if (!i) continue;
    for (const auto& sig : i->methods) {
      MethodDecl* m = c.method(sig.name);
      if (!m) continue;
      if (!m->contract.requires_) m->contract.requires_ = sig.contract.requires_;
      if (!m->contract.ensures) m->contract.ensures = sig.contract.ensures;
      if (!m->contract.tactic) m->contract.tactic = sig.contract.tactic;
    }
  }
}

}  // namespace

Program normalize(Program p) {
  for (auto& c : p.classes) {
    inherit_contracts(p, c);
    for (auto& m : c.methods)
      if (m.body.empty() || m.body.front().kind != Stmt::Kind::Await) m.body.insert(m.body.begin(), leading_await(m.loc));
  }

  int next = 1;
  auto number = [&](Block& b) {
    for_each_stmt_mut(b, [&](Stmt& s) {
      if (s.kind == Stmt::Kind::Await) s.point = next++;
    });
  };
  for (auto& c : p.classes) {
    if (c.init_block) number(*c.init_block);
    for (auto& m : c.methods) number(m.body);
  }
  number(p.main_block);

  for (auto& c : p.classes) {
    Env fields;
    fields.cls = &c;
    if (c.object_invariant) resolve(*c.object_invariant, fields);
    if (c.creation_condition) resolve(*c.creation_condition, fields);
    for (auto& d : c.physical) {
      resolve(d.init, fields);
      resolve(d.deriv, fields);
    }
    for (auto& f : c.fields)
      if (f.init) resolve(*f.init, fields);
    if (c.init_block) {
      c.init_locals = collect_locals(*c.init_block);
      Env env = fields;
      for (const auto& l : c.init_locals) env.names[l.name] = Scope::Local;
      resolve(*c.init_block, env);
    }
    for (auto& m : c.methods) {
      m.locals = collect_locals(m.body);
      Env env = fields;
      for (const auto& q : m.params) env.names[q.name] = Scope::Param;
      Env contract_env = env;
      if (m.contract.requires_) resolve(*m.contract.requires_, contract_env);
      contract_env.allow_result = true;
      if (m.contract.ensures) resolve(*m.contract.ensures, contract_env);
      for (const auto& l : m.locals) env.names[l.name] = Scope::Local;
      resolve(m.body, env);
    }
  }
  p.main_locals = collect_locals(p.main_block);
  Env main_env;
  for (const auto& l : p.main_locals) main_env.names[l.name] = Scope::Local;
  resolve(p.main_block, main_env);
  return p;
}

Type type_of_name(const Program& p, const ClassDecl* cls, const std::string& member, const std::string& name) {
  auto find = [&](const std::vector<Param>& ps) -> const Type* {
    for (const auto& q : ps)
      if (q.name == name) return &q.type;
    return nullptr;
  };
  if (!cls) {
    if (auto t = find(p.main_locals)) return *t;
    return {};
  }
  if (member == "init") {
    if (auto t = find(cls->init_locals)) return *t;
  } else if (const MethodDecl* m = cls->method(member)) {
    if (auto t = find(m->locals)) return *t;
    if (auto t = find(m->params)) return *t;
  }
  if (auto t = find(cls->params)) return *t;
  for (const auto& d : cls->physical)
    if (d.name == name) return d.type;
  for (const auto& f : cls->fields)
    if (f.name == name) return f.type;
  return {};
}

const ClassDecl* receiver_class(const Program& p, const ClassDecl* cls, const std::string& member,
                                const Expr& recv) {
  if (recv.kind == Expr::Kind::Var && recv.name == "this") return cls;
  if (recv.kind != Expr::Kind::Var && recv.kind != Expr::Kind::FieldRef) return nullptr;
  Type t = type_of_name(p, cls, member, recv.name);
  return t.name.empty() ? nullptr : p.resolve_type(t.name);
}

namespace {

class Checker {
 public:
  explicit Checker(const Program& p) : p_(p) {}

  std::vector<Diagnostic> run() {
    // interfaces and classes live in separate namespaces (an interface may
    // share its name with its implementation)
    std::set<std::string> class_names, interface_names;
    for (const auto& i : p_.interfaces) {
      if (!interface_names.insert(i.name).second) diag(i.loc, "duplicate interface name '" + i.name + "'");
    }
    for (const auto& c : p_.classes) {
      if (!class_names.insert(c.name).second) diag(c.loc, "duplicate type name '" + c.name + "'");
      check_class(c);
    }
    check_block(p_.main_block, nullptr, "main");
    return std::move(out_);
  }

 private:
  const Program& p_;
  std::vector<Diagnostic> out_;

  void diag(Loc l, std::string msg) { out_.push_back({l, std::move(msg)}); }

  template <typename Pred>
  void vocabulary(const Expr& e, Pred ok, const std::string& what) {
    if ((e.kind == Expr::Kind::Var && e.name != "this") || e.kind == Expr::Kind::FieldRef) {
      if (!ok(e)) diag(e.loc, what + " may not mention '" + e.name + "'");
    }
    for (const auto& a : e.args) vocabulary(a, ok, what);
  }

  static bool is_field_ref(const Expr& e) { return e.scope == Scope::Field || e.scope == Scope::Physical; }

  void check_class(const ClassDecl& c) {
    std::set<std::string> seen;
    auto declare = [&](const std::string& n, Loc l) {
      if (!seen.insert(n).second) diag(l, "duplicate field '" + n + "' in class " + c.name);
    };
    for (const auto& q : c.params) declare(q.name, c.loc);
    for (const auto& d : c.physical) {
      declare(d.name, d.loc);
      if (d.type.name != "Real") diag(d.loc, "physical field '" + d.name + "' must have type Real");
      vocabulary(d.deriv, is_field_ref, "derivative of " + d.name);
    }
    for (const auto& f : c.fields) declare(f.name, f.loc);
    for (const auto& i : c.implements)
      if (!p_.find_interface(i)) diag(c.loc, "unknown interface '" + i + "'");

    if (c.object_invariant) vocabulary(*c.object_invariant, is_field_ref, "object invariant of " + c.name);
    if (c.creation_condition) {
      vocabulary(
          *c.creation_condition,
          [&](const Expr& e) {
            for (const auto& q : c.params)
              if (q.name == e.name) return true;
            return false;
          },
          "creation condition of " + c.name);
    }

    std::set<std::string> methods;
    for (const auto& m : c.methods) {
      if (!methods.insert(m.name).second) diag(m.loc, "duplicate method '" + m.name + "' in class " + c.name);
      std::string where = c.name + "." + m.name;
      if (m.contract.requires_)
        vocabulary(*m.contract.requires_, [](const Expr& e) { return e.scope == Scope::Param; },
                   "precondition of " + where);
      if (m.contract.ensures)
        vocabulary(
            *m.contract.ensures,
            [](const Expr& e) { return is_field_ref(e) || e.scope == Scope::Result; },
            "postcondition of " + where);
      check_block(m.body, &c, m.name);
    }
    if (c.init_block) check_block(*c.init_block, &c, "init");
  }

  Type type_of(const Expr& e, const ClassDecl* cls, const std::string& member) {
    if (e.kind == Expr::Kind::Var && e.name == "this" && cls) return {cls->name, {}};
    if (e.kind == Expr::Kind::Var || e.kind == Expr::Kind::FieldRef) return type_of_name(p_, cls, member, e.name);
    return {};
  }

  void check_call(const Stmt& s, const ClassDecl* cls, const std::string& member) {
    Type rt = type_of(s.rhs.expr, cls, member);
    if (rt.name.empty() || rt.is_numeric() || rt.is_future() || rt.name == "Bool" || rt.name == "Unit") {
      diag(s.loc, "call receiver is not an object");
      return;
    }
    size_t arity = 0;
    bool found = false;
    if (const InterfaceDecl* i = p_.find_interface(rt.name)) {
      for (const auto& sig : i->methods)
        if (sig.name == s.rhs.name) found = true, arity = sig.params.size();
    }
    const ClassDecl* target = p_.resolve_type(rt.name);
    if (!target) {
      diag(s.loc, "unknown class or interface '" + rt.name + "'");
      return;
    }
    if (const MethodDecl* m = target->method(s.rhs.name)) {
      found = true;
      arity = m->params.size();
    }
    if (!found) {
      diag(s.loc, "no method '" + s.rhs.name + "' in " + rt.name);
      return;
    }
    if (arity != s.rhs.args.size())
      diag(s.loc, "method " + rt.name + "." + s.rhs.name + " expects " + std::to_string(arity) + " arguments, got " +
                      std::to_string(s.rhs.args.size()));
  }

  void check_block(const Block& b, const ClassDecl* cls, const std::string& member) {
    for_each_stmt(b, [&](const Stmt& s) {
      if (s.kind == Stmt::Kind::Assign) {
        switch (s.rhs.kind) {
          case Rhs::Kind::Call: check_call(s, cls, member); break;
          case Rhs::Kind::New: {
            const ClassDecl* c = p_.find_class(s.rhs.name);
            if (!c) diag(s.loc, "unknown class '" + s.rhs.name + "'");
            else if (c->params.size() != s.rhs.args.size())
              diag(s.loc, "class " + c->name + " expects " + std::to_string(c->params.size()) + " arguments");
            break;
          }
          case Rhs::Kind::Get:
            if (!type_of(s.rhs.expr, cls, member).is_future()) diag(s.loc, "get applied to a non-future expression");
            break;
          case Rhs::Kind::Pure: break;
        }
      } else if (s.kind == Stmt::Kind::Await) {
        if (s.guard.kind == Guard::Kind::Poll && !type_of(s.guard.expr, cls, member).is_future())
          diag(s.loc, "poll guard on a non-future expression");
        if (s.guard.kind == Guard::Kind::Diff) vocabulary(s.guard.expr, is_field_ref, "differential guard");
      }
    });
  }
};

}  // namespace

std::vector<Diagnostic> check_types(const Program& p) { return Checker(p).run(); }

std::string format_diagnostic(const std::string& file, const Diagnostic& d) {
  return file + ":" + std::to_string(d.loc.line) + ":" + std::to_string(d.loc.col) + ": " + d.message;
}

}  // namespace hvc::habs
