#pragma once

// Denotational evaluation over logbooks with exhaustive enumeration of event
// placements and select ties up to a finite horizon.

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lambda_widget/logbook.hpp"
#include "lambda_widget/syntax.hpp"

namespace lw {

constexpr std::uint64_t kInfinity = std::numeric_limits<std::uint64_t>::max();

struct SemValue;
using SemPtr = std::shared_ptr<const SemValue>;
struct SemEnv;
using SemEnvPtr = std::shared_ptr<const SemEnv>;

struct SemValue {
  enum class Kind {
    Unit, Pair, Closure, TClosure, Thunk, Builtin, Event, At, Widget, Prefix,
    Cart, Id, Time, Pack, Inl, Inr, Never,
  };

  Kind kind = Kind::Unit;
  SemPtr a, b;                    // Pair; Event/At/Pack/Inl/Inr payload in a
  std::uint64_t n = 0;            // Event arrival (relative), At/Time absolute, Id
  SemPtr index;                   // Pack witness
  TermPtr term;                   // Closure, TClosure, Thunk
  SemEnvPtr env;
  std::string literal;            // Cart: "Red", "'a'", "*"; Builtin name
  std::vector<SemPtr> args;       // Builtin: index then linear arguments
  std::vector<Logbook> family;    // Widget: the widget followed by attached children
  std::vector<PrefixBook> prefixes;
};

struct SemEnv {
  int id;
  SemPtr value;
  SemEnvPtr next;
};

std::string show(const SemPtr& v);

struct Outcome {
  SemPtr value;
  std::vector<std::string> choices;
  LogbookSet logbooks;
};

struct OutcomeSet {
  std::uint64_t horizon = 0;
  std::vector<Outcome> outcomes;
  /// Placements rejected because two commands at one time were incompatible.
  std::size_t dropped = 0;
  std::optional<CompatError> first_error;
};

struct DenotOptions {
  std::size_t max_outcomes = 2'000'000;
};

/// Evaluates the entry point of a checked (elaborated) program. Entry points of
/// type I ⊸ A are applied to ⟨⟩. Throws CompatError if every placement fails.
OutcomeSet eval_denot(const SourceProgram& program, std::uint64_t horizon, const DenotOptions& options = {});

/// Logbooks reachable from a final value, re-timed to absolute time.
LogbookSet final_logbooks(const SemPtr& v);

/// Canonical JSON: outcomes sorted by their serialized form.
nlohmann::json to_json(const OutcomeSet& s);

/// Keypress payload used for every enumerated keypress.
constexpr char kEnumeratedKey = 'a';

}  // namespace lw
