#pragma once

// Text syntax in the KeYmaera X archive dialect, with a reader for the same
// subset so that emitted obligations can be checked by re-parsing.

#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hvc/dl/ast.hpp"

namespace hvc::dl {

std::string render(const Term& t);
std::string render(const Formula& f);
std::string render(const Program& p);

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg + " at offset " + std::to_string(offset)), offset(offset) {}
  std::size_t offset;
};

struct ReadOptions {
  // Accept `x = e;` as an assignment inside programs (as in hand-written bodies).
  bool eq_assign = false;
};

Term parse_term(std::string_view text);
Formula parse_formula(std::string_view text, ReadOptions opts = {});
Program parse_program(std::string_view text, ReadOptions opts = {});

/// One archive entry. Throws std::invalid_argument if a free variable of
/// either formula is not declared.
std::string render_keymaerax(const std::string& name, const Formula& assumptions,
                             const Formula& goal, const std::set<std::string>& declared);

struct ArchiveEntry {
  std::string name;
  std::vector<std::string> variables;
  Formula problem;
};

std::vector<ArchiveEntry> parse_archive(std::string_view text);

}  // namespace hvc::dl
