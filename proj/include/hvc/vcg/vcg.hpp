#pragma once

// Translation of HABS statements into hybrid programs and assembly of the
// per-member proof obligations.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hvc/analysis/analysis.hpp"
#include "hvc/dl/ast.hpp"
#include "hvc/habs/ast.hpp"

namespace hvc::vcg {

struct TranslationContext {
  const habs::Program* program = nullptr;
  const habs::ClassDecl* cls = nullptr;  // null for main
  std::string member;                    // method name, "init" or "main"
  dl::Formula inv;
  dl::Program ode;  // class ODE with domain true (possibly without equations)
  const analysis::Generator* generator = nullptr;
};

TranslationContext make_context(const habs::Program& p, const habs::ClassDecl* c, const std::string& member,
                                const analysis::Generator& g);

dl::Formula class_invariant(const habs::ClassDecl& c);
dl::Program class_ode(const habs::ClassDecl& c);

/// dL name of a resolved HABS variable: locals are qualified with the member.
std::string dl_name(const habs::Expr& e, const std::string& member);

/// Throws std::invalid_argument for statements outside the fragment.
dl::Program trans_stmt(const habs::Stmt& s, const TranslationContext& ctx);
dl::Program trans_block(const habs::Block& b, const TranslationContext& ctx);
/// Body translation where a leading await becomes the test of its guard.
dl::Program trans_body(const habs::Block& b, const TranslationContext& ctx);

struct Obligation {
  enum class Kind { Init, Method, Main };
  std::string name;  // Class.member, or "main"
  std::string cls;
  std::string member;
  Kind kind = Kind::Method;
  dl::Formula assumptions;
  dl::Formula goal;
  std::optional<std::string> tactic;
  bool exempt = false;

  dl::Formula formula() const;
  /// Free variables plus t and cll.
  std::set<std::string> declared() const;
};

std::string to_string(Obligation::Kind k);

Obligation obligation_method(const habs::ClassDecl& c, const habs::MethodDecl& m, const TranslationContext& ctx);
Obligation obligation_init(const habs::ClassDecl& c, const TranslationContext& ctx);
Obligation obligation_main(const habs::Program& p, const TranslationContext& ctx);

/// All obligations in report order. Under the basic generator frame-exempt
/// methods are marked exempt (their formula is still computed).
std::vector<Obligation> obligations(const habs::Program& p, const analysis::Generator& g,
                                    bool use_exemption = true);

std::string file_stem(const Obligation& o);

/// Writes `<stem>.kyx` per non-exempt obligation, `<stem>.tactic` for
/// tactic annotations and `manifest.txt`. Returns the written paths.
std::vector<std::filesystem::path> emit(const habs::Program& p, const std::vector<analysis::GeneratorKind>& kinds,
                                        const std::filesystem::path& out_dir);

}  // namespace hvc::vcg
