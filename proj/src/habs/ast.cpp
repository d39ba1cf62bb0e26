#include "hvc/habs/ast.hpp"

#include <algorithm>

namespace hvc::habs {

const MethodDecl* ClassDecl::method(const std::string& n) const {
  for (const auto& m : methods)
    if (m.name == n) return &m;
  return nullptr;
}

MethodDecl* ClassDecl::method(const std::string& n) {
  for (auto& m : methods)
    if (m.name == n) return &m;
  return nullptr;
}

bool ClassDecl::is_physical(const std::string& f) const {
  return std::any_of(physical.begin(), physical.end(), [&](const PhysDecl& d) { return d.name == f; });
}

bool ClassDecl::is_field(const std::string& f) const {
  auto names = field_names();
  return std::find(names.begin(), names.end(), f) != names.end();
}

std::vector<std::string> ClassDecl::field_names() const {
  std::vector<std::string> out;
  for (const auto& p : params) out.push_back(p.name);
  for (const auto& d : physical) out.push_back(d.name);
  for (const auto& f : fields) out.push_back(f.name);
  return out;
}

std::vector<std::string> ClassDecl::physical_names() const {
  std::vector<std::string> out;
  for (const auto& d : physical) out.push_back(d.name);
  return out;
}

const ClassDecl* Program::find_class(const std::string& n) const {
  for (const auto& c : classes)
    if (c.name == n) return &c;
  return nullptr;
}

const InterfaceDecl* Program::find_interface(const std::string& n) const {
  for (const auto& i : interfaces)
    if (i.name == n) return &i;
  return nullptr;
}

const ClassDecl* Program::resolve_type(const std::string& n) const {
  if (auto c = find_class(n)) return c;
  for (const auto& c : classes)
    if (std::find(c.implements.begin(), c.implements.end(), n) != c.implements.end()) return &c;
  return nullptr;
}

std::vector<PointInfo> await_points(const Program& p) {
  std::vector<PointInfo> out;
  auto collect = [&](const Block& b, const std::string& cls, const std::string& member) {
    bool first = true;
    for_each_stmt(b, [&](const Stmt& s) {
      if (s.kind == Stmt::Kind::Await) out.push_back({s.point, cls, member, s.guard, first && &s == &b.front()});
      first = false;
    });
  };
  for (const auto& c : p.classes) {
    if (c.init_block) collect(*c.init_block, c.name, "init");
    for (const auto& m : c.methods) collect(m.body, c.name, m.name);
  }
  collect(p.main_block, "", "main");
  return out;
}

}  // namespace hvc::habs
