#pragma once

#include <stdexcept>
#include <string>

#include "lambda_widget/syntax.hpp"

namespace lw {

class DesugarError : public std::runtime_error {
 public:
  DesugarError(Span span, const std::string& message);

  Span span;
};

/// Lowers nested let-patterns to core eliminators, wraps implicit quantifiers
/// in Λ, turns index-binder arguments into index applications and inserts
/// index metavariables `?n` for omitted leading ∀ arguments of builtins and
/// globals. Idempotent.
SourceProgram desugar(const SourceProgram& program);

/// Desugars a standalone term; globals are looked up in `program` when given.
TermPtr desugar_term(const TermPtr& term, const SourceProgram* program = nullptr);

}  // namespace lw
