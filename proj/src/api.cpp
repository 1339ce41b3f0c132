#include "lambda_widget/api.hpp"

#include <map>
#include <string>

#include "lambda_widget/parser.hpp"

namespace lw {

LinTypePtr builtin_type(std::string_view name) {
  static const std::map<std::string, LinTypePtr, std::less<>> table = [] {
    std::map<std::string, LinTypePtr, std::less<>> m;
    m["newWidget"] = parse_lin_type("I ⊸ ∃(i:Id). Widget i");
    m["dropWidget"] = parse_lin_type("∀(i:Id). Widget i ⊸ I");
    m["setColor"] = parse_lin_type("∀(i:Id). Widget i ⊗ F Color ⊸ Widget i");
    m["onClick"] = parse_lin_type("∀(i:Id). Widget i ⊸ Widget i ⊗ ◇I");
    m["onKeypress"] = parse_lin_type("∀(i:Id). Widget i ⊸ Widget i ⊗ ◇(F Char)");
    m["out"] = parse_lin_type("◇A ⊸ ∃(k:Time). A @ k");
    m["into"] = parse_lin_type("(∃(k:Time). A @ k) ⊸ ◇A");
    m["split"] = parse_lin_type("∀(i:Id)(t:Time). Widget i ⊸ Prefix i t ⊗ Widget i @ t");
    m["join"] = parse_lin_type("∀(i:Id)(t:Time). Prefix i t ⊗ Widget i @ t ⊸ Widget i");
    m["vAttach"] = parse_lin_type("∀(i:Id)(j:Id). Widget i ⊸ Widget j ⊸ Widget i");
    return m;
  }();
  auto it = table.find(name);
  return it == table.end() ? nullptr : it->second;
}

int leading_foralls(const LinTypePtr& t) {
  int n = 0;
  for (LinTypePtr c = t; c && c->kind == LinType::Kind::Forall; c = c->left) ++n;
  return n;
}

}  // namespace lw
