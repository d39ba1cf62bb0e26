#include "hvc/vcg/vcg.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hvc/dl/kyx.hpp"
#include "hvc/dl/ops.hpp"
#include "hvc/habs/printer.hpp"
#include "hvc/habs/sema.hpp"
#include "hvc/habs/to_dl.hpp"

namespace hvc::vcg {

using habs::ClassDecl;
using habs::Expr;
using habs::Guard;
using habs::MethodDecl;
using habs::Rhs;
using habs::Stmt;

dl::Formula class_invariant(const ClassDecl& c) {
  return c.object_invariant ? habs::to_formula(*c.object_invariant) : dl::tru();
}

dl::Program class_ode(const ClassDecl& c) {
  std::vector<dl::OdeEquation> eqs;
  for (const auto& d : c.physical) eqs.emplace_back(d.name, habs::to_term(d.deriv));
  return dl::ode(std::move(eqs), dl::tru());
}

std::string dl_name(const Expr& e, const std::string& member) {
  if (e.scope == habs::Scope::Local) return member + "_" + e.name;
  return e.name;
}

TranslationContext make_context(const habs::Program& p, const ClassDecl* c, const std::string& member,
                                const analysis::Generator& g) {
  TranslationContext ctx;
  ctx.program = &p;
  ctx.cls = c;
  ctx.member = member;
  ctx.inv = c ? class_invariant(*c) : dl::tru();
  ctx.ode = c ? class_ode(*c) : dl::ode({}, dl::tru());
  ctx.generator = &g;
  return ctx;
}

namespace {

habs::Namer namer(const TranslationContext& ctx) {
  return [member = ctx.member](const Expr& e) { return dl_name(e, member); };
}

dl::Term term(const Expr& e, const TranslationContext& ctx) { return habs::to_term(e, namer(ctx)); }
dl::Formula formula(const Expr& e, const TranslationContext& ctx) { return habs::to_formula(e, namer(ctx)); }

std::string target_name(const Stmt& s, const TranslationContext& ctx) {
  return s.target_scope == habs::Scope::Local ? ctx.member + "_" + s.target : s.target;
}

dl::Program fail() { return dl::assign("cll", dl::num(1)); }

dl::Program havoc_all(const TranslationContext& ctx) {
  std::vector<dl::Program> parts;
  if (ctx.cls)
    for (const auto& f : ctx.cls->field_names()) parts.push_back(dl::havoc(f));
  return dl::seq(parts);
}

dl::Program havoc_physical(const TranslationContext& ctx) {
  std::vector<dl::Program> parts;
  if (ctx.cls)
    for (const auto& f : ctx.cls->physical_names()) parts.push_back(dl::havoc(f));
  return dl::seq(parts);
}

dl::Formula pr(const dl::Formula& psi, const TranslationContext& ctx) { return dl::build_pr(psi, ctx.inv, ctx.ode); }

dl::Formula conj_nontrivial(const std::vector<dl::Formula>& fs) {
  std::vector<dl::Formula> parts;
  for (const auto& f : fs)
    if (!dl::is_true(f)) parts.push_back(f);
  return dl::conj(parts);
}

/// Contract `pre` over `params`, instantiated with the caller's arguments.
dl::Formula instantiate(const std::optional<Expr>& pre, const std::vector<habs::Param>& params,
                        const std::vector<Expr>& args, const TranslationContext& ctx) {
  if (!pre) return dl::tru();
  dl::Formula f = habs::to_formula(*pre);
  auto used = dl::free_variables(f);
  dl::Substitution sub;
  for (size_t i = 0; i < params.size() && i < args.size(); ++i)
    if (used.count(params[i].name)) sub.emplace(params[i].name, term(args[i], ctx));
  return dl::substitute(f, sub);
}

/// {?pre} ++ {?!pre; fail}
dl::Program check(const dl::Formula& pre) {
  return dl::choice(dl::test(pre), dl::seq(dl::test(dl::lnot(pre)), fail()));
}

dl::Program with_result(dl::Program p, const Stmt& s, const TranslationContext& ctx) {
  if (s.target.empty()) return p;
  return dl::seq(std::move(p), dl::havoc(target_name(s, ctx)));
}

dl::Program trans_assign(const Stmt& s, const TranslationContext& ctx) {
  const Rhs& r = s.rhs;
  switch (r.kind) {
    case Rhs::Kind::Pure:
      if (s.target.empty()) throw std::invalid_argument("expression statement without effect");
      if (r.expr.kind == Expr::Kind::Null || r.expr.kind == Expr::Kind::Unit ||
          (r.expr.kind == Expr::Kind::Var && r.expr.name == "this"))
        return dl::havoc(target_name(s, ctx));
      return dl::assign(target_name(s, ctx), term(r.expr, ctx));
    case Rhs::Kind::Call: {
      const ClassDecl* callee = habs::receiver_class(*ctx.program, ctx.cls, ctx.member, r.expr);
      const MethodDecl* m = callee ? callee->method(r.name) : nullptr;
      dl::Formula pre = m ? instantiate(m->contract.requires_, m->params, r.args, ctx) : dl::tru();
      return with_result(check(pre), s, ctx);
    }
    case Rhs::Kind::New: {
      const ClassDecl* c = ctx.program->find_class(r.name);
      dl::Formula pre = c ? instantiate(c->creation_condition, c->params, r.args, ctx) : dl::tru();
      return with_result(check(pre), s, ctx);
    }
    case Rhs::Kind::Get: {
      dl::Formula p = pr(dl::tru(), ctx);
      auto tail = [&](dl::Program head) {
        std::vector<dl::Program> parts{std::move(head), havoc_physical(ctx)};
        return parts;
      };
      auto ok = tail(dl::test(p));
      ok.push_back(dl::test(ctx.inv));
      auto bad = tail(dl::seq(dl::test(dl::lnot(p)), fail()));
      if (!s.target.empty()) {
        ok.push_back(dl::havoc(target_name(s, ctx)));
        bad.push_back(dl::havoc(target_name(s, ctx)));
      }
      return dl::choice(dl::seq(ok), dl::seq(bad));
    }
  }
  throw std::invalid_argument("unknown right-hand side");
}

dl::Program trans_await(const Stmt& s, const TranslationContext& ctx) {
  dl::Formula g = habs::guard_formula(s.guard, namer(ctx));
  dl::Formula region = ctx.cls ? ctx.generator->point(ctx.cls->name, s.point) : ctx.generator->point("", s.point);
  dl::Formula psi = conj_nontrivial({region, dl::weak_negate(g)});
  dl::Formula p = pr(psi, ctx);
  dl::Program ok = dl::seq({dl::test(p), havoc_all(ctx), dl::test(conj_nontrivial({g, ctx.inv}))});
  dl::Program bad = dl::seq({dl::test(dl::lnot(p)), fail(), havoc_all(ctx), dl::test(g)});
  return dl::choice(ok, bad);
}

dl::Program trans_duration(const Stmt& s, const TranslationContext& ctx) {
  dl::Term e = term(s.expr, ctx);
  dl::Term t = dl::var("t");
  dl::Formula p = pr(dl::le(t, e), ctx);
  const auto& base = std::get<dl::Ode>(ctx.ode.node().v);
  auto eqs = base.equations;
  eqs.emplace_back("t", dl::num(1));
  return dl::seq({dl::assign("t", dl::num(0)), check(p), dl::assign("t", dl::num(0)), dl::ode(eqs, dl::le(t, e)),
                  dl::test(dl::ge(t, e))});
}

}  // namespace

dl::Program trans_stmt(const Stmt& s, const TranslationContext& ctx) {
  switch (s.kind) {
    case Stmt::Kind::Assign: return trans_assign(s, ctx);
    case Stmt::Kind::Await: return trans_await(s, ctx);
    case Stmt::Kind::Duration: return trans_duration(s, ctx);
    case Stmt::Kind::If: {
      dl::Formula c = formula(s.expr, ctx);
      dl::Program yes = dl::seq(dl::test(c), trans_block(s.then_block, ctx));
      dl::Program no = s.else_block ? dl::seq(dl::test(dl::lnot(c)), trans_block(*s.else_block, ctx))
                                    : dl::test(dl::lnot(c));
      return dl::choice(yes, no);
    }
    case Stmt::Kind::While: {
      dl::Formula c = formula(s.expr, ctx);
      return dl::seq(dl::loop(dl::seq(dl::test(c), trans_block(s.then_block, ctx))), dl::test(dl::lnot(c)));
    }
    case Stmt::Kind::Return:
      if (s.expr.kind == Expr::Kind::Unit) return dl::skip();
      return dl::assign("result", term(s.expr, ctx));
    case Stmt::Kind::Skip: return dl::skip();
  }
  throw std::invalid_argument("statement outside the translatable fragment");
}

dl::Program trans_block(const habs::Block& b, const TranslationContext& ctx) {
  std::vector<dl::Program> parts;
  for (const auto& s : b) parts.push_back(trans_stmt(s, ctx));
  return dl::seq(parts);
}

dl::Program trans_body(const habs::Block& b, const TranslationContext& ctx) {
  std::vector<dl::Program> parts;
  for (size_t i = 0; i < b.size(); ++i) {
    if (i == 0 && b[i].kind == Stmt::Kind::Await) parts.push_back(dl::test(habs::guard_formula(b[i].guard, namer(ctx))));
    else parts.push_back(trans_stmt(b[i], ctx));
  }
  return dl::seq(parts);
}

dl::Formula Obligation::formula() const { return dl::implies(assumptions, goal); }

std::set<std::string> Obligation::declared() const {
  auto vars = dl::free_variables(formula());
  vars.insert("t");
  vars.insert("cll");
  return vars;
}

std::string to_string(Obligation::Kind k) {
  switch (k) {
    case Obligation::Kind::Init: return "init";
    case Obligation::Kind::Method: return "method";
    case Obligation::Kind::Main: return "main";
  }
  return "?";
}

namespace {
dl::Formula cll_zero() { return dl::eq(dl::var("cll"), dl::num(0)); }
}  // namespace

Obligation obligation_method(const ClassDecl& c, const MethodDecl& m, const TranslationContext& ctx) {
  Obligation o;
  o.name = c.name + "." + m.name;
  o.cls = c.name;
  o.member = m.name;
  o.kind = Obligation::Kind::Method;
  dl::Formula pre = m.contract.requires_ ? habs::to_formula(*m.contract.requires_) : dl::tru();
  dl::Formula post = m.contract.ensures ? habs::to_formula(*m.contract.ensures) : dl::tru();
  o.assumptions = conj_nontrivial({ctx.inv, pre, cll_zero()});
  dl::Formula region = ctx.generator->member(c.name, m.name);
  dl::Formula after = dl::build_pr(region, ctx.inv, ctx.ode, dl::PrClock::WhenNeeded);
  o.goal = dl::box(trans_body(m.body, ctx), conj_nontrivial({cll_zero(), post, after}));
  o.tactic = m.contract.tactic;
  return o;
}

Obligation obligation_init(const ClassDecl& c, const TranslationContext& ctx) {
  Obligation o;
  o.name = c.name + ".init";
  o.cls = c.name;
  o.member = "init";
  o.kind = Obligation::Kind::Init;
  dl::Formula pre = c.creation_condition ? habs::to_formula(*c.creation_condition) : dl::tru();
  o.assumptions = conj_nontrivial({pre, cll_zero()});
  std::vector<dl::Program> parts{dl::test(dl::tru())};
  for (const auto& d : c.physical) parts.push_back(dl::assign(d.name, habs::to_term(d.init)));
  for (const auto& f : c.fields) {
    if (!f.init) continue;
    if (f.init->kind == Expr::Kind::Null || f.init->kind == Expr::Kind::Unit) parts.push_back(dl::havoc(f.name));
    else parts.push_back(dl::assign(f.name, habs::to_term(*f.init)));
  }
  if (c.init_block) parts.push_back(trans_block(*c.init_block, ctx));
  dl::Formula region = ctx.generator->member(c.name, "init");
  dl::Formula after = dl::build_pr(region, ctx.inv, ctx.ode, dl::PrClock::WhenNeeded);
  o.goal = dl::box(dl::seq(parts), conj_nontrivial({cll_zero(), after}));
  return o;
}

Obligation obligation_main(const habs::Program& p, const TranslationContext& ctx) {
  (void)p;
  Obligation o;
  o.name = "main";
  o.member = "main";
  o.kind = Obligation::Kind::Main;
  o.assumptions = cll_zero();
  o.goal = dl::box(trans_block(ctx.program->main_block, ctx), cll_zero());
  return o;
}

std::vector<Obligation> obligations(const habs::Program& p, const analysis::Generator& g, bool use_exemption) {
  std::vector<Obligation> out;
  bool exemption = use_exemption && g.kind == analysis::GeneratorKind::Basic;
  for (const auto& c : p.classes) {
    out.push_back(obligation_init(c, make_context(p, &c, "init", g)));
    for (const auto& m : c.methods) {
      Obligation o = obligation_method(c, m, make_context(p, &c, m.name, g));
      o.exempt = exemption && analysis::frame_exempt(m, c);
      out.push_back(std::move(o));
    }
  }
  out.push_back(obligation_main(p, make_context(p, nullptr, "main", g)));
  return out;
}

std::string file_stem(const Obligation& o) { return o.name; }

std::vector<std::filesystem::path> emit(const habs::Program& p, const std::vector<analysis::GeneratorKind>& kinds,
                                        const std::filesystem::path& out_dir) {
  analysis::Generator g = analysis::make_generator(p, kinds);
  std::string gen_name;
  for (auto k : kinds) gen_name += (gen_name.empty() ? "" : "+") + analysis::to_string(k);
  if (gen_name.empty()) gen_name = "basic";

  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  auto write = [&](const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f) throw std::runtime_error("write failed for " + path.string());
    written.push_back(path);
  };

  std::ostringstream manifest;
  manifest << "# member\tkind\tgenerator\texempt\ttactic\n";
  for (const auto& o : obligations(p, g)) {
    manifest << o.name << '\t' << to_string(o.kind) << '\t' << gen_name << '\t' << (o.exempt ? "yes" : "no") << '\t'
             << (o.tactic ? "yes" : "no") << '\n';
    if (o.exempt) continue;
    write(out_dir / (file_stem(o) + ".kyx"), dl::render_keymaerax(o.name, o.assumptions, o.goal, o.declared()));
    if (o.tactic) write(out_dir / (file_stem(o) + ".tactic"), *o.tactic + "\n");
  }
  write(out_dir / "manifest.txt", manifest.str());
  return written;
}

}  // namespace hvc::vcg
