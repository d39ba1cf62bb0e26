#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "hvc/dl/ast.hpp"

namespace hvc::dl {

/// Weak negation: De Morgan down to the atoms, where <= and >= swap and
/// equality is kept. Throws std::invalid_argument on modalities,
/// quantifiers and strict comparisons.
Formula weak_negate(const Formula& f);

/// Whether the clock in pr(...) must always be materialised, or may be left
/// out when the region does not mention it.
enum class PrClock { Always, WhenNeeded };

/// inv & [t := 0; {ode, t'=1 & psi}] inv. With PrClock::WhenNeeded and a
/// region that does not mention t, the clock reset and t'=1 are omitted; an
/// empty ODE then degenerates to the test [?psi]inv. Throws if `ode_prog` is not an ODE or already has t.
Formula build_pr(const Formula& psi, const Formula& inv, const Program& ode_prog,
                 PrClock clock = PrClock::Always);

std::set<std::string> free_variables(const Term& t);
std::set<std::string> free_variables(const Formula& f);
std::set<std::string> free_variables(const Program& p);

/// Variables written by a program (assignment, havoc, ODE left-hand sides).
std::set<std::string> bound_variables(const Program& p);

using Substitution = std::map<std::string, Term>;

Term substitute(const Term& t, const Substitution& s);
/// Capture-avoiding only in the trivial sense: bound quantifier variables are
/// left alone. Throws std::invalid_argument on modalities.
Formula substitute(const Formula& f, const Substitution& s);

/// Collapses negated literals and arithmetic between literals.
Term fold_literals(const Term& t);
Formula fold_literals(const Formula& f);
Program fold_literals(const Program& p);

/// Canonical form used for golden comparisons: folded literals, > and >=
/// rewritten to < and <=, flattened/sorted/deduplicated & and |, unit
/// elimination, right-nested sequences, and runs of independent adjacent
/// assignments ordered by variable name.
Formula normalize(const Formula& f);
Program normalize(const Program& p);

using Valuation = std::map<std::string, double>;

double evaluate(const Term& t, const Valuation& v);
/// First-order evaluation with `eps` slack toward satisfaction for
/// comparisons. Throws on modalities, quantifiers, or unbound variables.
bool evaluate(const Formula& f, const Valuation& v, double eps = 0.0);

/// Atoms (comparisons) of a modality-free formula, after canonicalisation.
std::vector<Formula> atoms(const Formula& f);

/// Truth-table equivalence treating canonical comparison atoms as
/// propositional variables. Throws when more than `max_atoms` atoms occur.
bool propositionally_equivalent(const Formula& a, const Formula& b, int max_atoms = 16);

/// Number of top-level conjuncts (1 for a non-conjunction).
std::size_t conjunct_count(const Formula& f);
std::vector<Formula> conjuncts(const Formula& f);

bool contains_modality(const Formula& f);

/// Strict total order on formulas via their rendering; used for sorting.
bool formula_less(const Formula& a, const Formula& b);

}  // namespace hvc::dl
