#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lambda_widget/syntax.hpp"

namespace lw {

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(Span span, std::string message, std::vector<std::string> expected = {});

  Span span;
  std::vector<std::string> expected;
};

/// Parses a `.lw` source file: a sequence of `def name : Type = term`.
/// Binders are alpha-renamed to program-unique ids.
SourceProgram parse(std::string_view source, std::string file = "<input>");

/// Parses a single linear term. Unbound identifiers become globals/builtins.
TermPtr parse_term(std::string_view source);

LinTypePtr parse_lin_type(std::string_view source);
CartTypePtr parse_cart_type(std::string_view source);

/// Names of the Widget API builtins, as recognised by the parser.
bool is_builtin_name(std::string_view name);

}  // namespace lw
