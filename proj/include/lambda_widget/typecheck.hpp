#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lambda_widget/subst.hpp"
#include "lambda_widget/syntax.hpp"

namespace lw {

enum class TypeErrorKind {
  UnboundVariable,
  LinearVariableUnused,
  LinearVariableReused,
  LinearVariableUnavailableInSelect,
  TimeMismatch,
  SortMismatch,
  TypeMismatch,
  NonEmptyLinearContextUnderG,
  UnsolvedIndexMetavariable,
};

const char* kind_name(TypeErrorKind k);

struct TypeError {
  TypeErrorKind kind = TypeErrorKind::TypeMismatch;
  Span span;
  std::string message;
  std::string definition;  // enclosing top-level definition, if any
};

/// Thrown by the single-judgment entry points below.
class TypeErrorException : public std::runtime_error {
 public:
  explicit TypeErrorException(TypeError e);
  TypeError error;
};

struct IndexContext {
  std::vector<std::pair<Name, Sort>> entries;
};

struct CartContext {
  std::vector<std::pair<Name, CartTypePtr>> entries;
};

struct LinearEntry {
  Name name;
  LinTypePtr type;
  IndexTerm time = IndexTerm::time(0);
  bool used = false;
  Span span;
};

struct LinearContext {
  std::vector<LinearEntry> entries;
};

/// One rule application. `consumed` lists the linear entries whose usage flag
/// flipped while checking this node, rendered as "w :_x Widget i" (or "p : A"
/// at time 0) with their annotation as seen from the node's own context.
struct DerivationNode {
  std::string rule;
  Span span;
  std::vector<std::string> theta;
  std::vector<std::string> consumed;
  int branch_depth = 0;
  int entry_depth = -1;  // Var nodes: select depth at which the consumed entry was bound
  std::vector<DerivationNode> children;
};

struct CheckOptions {
  bool record_derivations = false;
};

struct CheckResult {
  std::vector<std::pair<std::string, DeclaredType>> types;  // source order
  std::vector<TypeError> errors;
  SourceProgram elaborated;  // metavariables replaced by their solutions
  std::map<std::string, DerivationNode> derivations;

  bool ok() const { return errors.empty(); }
};

/// Checks a desugared program. Errors are aggregated, one per failing
/// definition, in definition order.
CheckResult check_program(const SourceProgram& program, const CheckOptions& options = {});

/// Parses, desugars and checks. Syntax and desugaring errors propagate.
CheckResult check_source(std::string_view source, const CheckOptions& options = {});

void check_index(const IndexContext& theta, const IndexTerm& s, Sort sort);
void check_cart(const IndexContext& theta, const CartContext& gamma, const TermPtr& e, const CartTypePtr& expected,
                const SourceProgram* globals = nullptr);
/// Leftover typing: returns Δ_in with the consumed entries marked used.
/// Entries that are unused at the end are not an error here.
LinearContext check_linear(const IndexContext& theta, const CartContext& gamma, const LinearContext& delta,
                           const TermPtr& t, const LinTypePtr& expected, const IndexTerm& now = IndexTerm::time(0),
                           const SourceProgram* globals = nullptr);

/// Checks that `z` maps every variable of `from` to an index of the same sort
/// well-formed under `to`.
void check_index_subst(const IndexContext& to, const IndexContext& from, const IndexSubst& z);

/// Well-formedness of a type under Θ (bound indices, sorts, ν positivity).
void check_type(const IndexContext& theta, const LinTypePtr& t);

}  // namespace lw
