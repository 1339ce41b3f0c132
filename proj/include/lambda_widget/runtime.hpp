#pragma once

// Push-based event-loop interpreter. Time advances only to the next stimulus
// or scheduled delay; delayed computations wait on a timer wheel.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lambda_widget/logbook.hpp"
#include "lambda_widget/syntax.hpp"

namespace lw {

struct Stimulus {
  enum class Kind { Click, Keypress };

  std::uint64_t time = 0;
  std::uint64_t widget = 0;
  Kind kind = Kind::Click;
  char key = 'a';

  bool operator==(const Stimulus&) const = default;
};

using EventTrace = std::vector<Stimulus>;

class TraceTargetInvalid : public std::runtime_error {
 public:
  explicit TraceTargetInvalid(const Stimulus& s);
  Stimulus stimulus;
};

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One stimulus per line: {"t":5,"widget":0,"kind":"click"}.
EventTrace parse_trace(std::string_view jsonl);
nlohmann::json to_json(const Stimulus& s);

struct TiePolicy {
  enum class Kind { Left, Right, Seeded };

  Kind kind = Kind::Seeded;
  std::uint64_t seed = 0;

  static TiePolicy left() { return {Kind::Left, 0}; }
  static TiePolicy right() { return {Kind::Right, 0}; }
  static TiePolicy seeded(std::uint64_t s) { return {Kind::Seeded, s}; }
};

struct TieChoice {
  std::uint64_t time = 0;
  bool left = true;
};

struct PendingHandler {
  std::uint64_t widget = 0;
  Stimulus::Kind kind = Stimulus::Kind::Click;
  std::uint64_t registered = 0;
};

struct RunResult {
  LogbookSet logbooks;
  std::vector<TieChoice> choices;
  std::uint64_t steps = 0;
  /// Handlers whose event never arrived; their continuations never ran.
  std::vector<PendingHandler> undelivered;
};

nlohmann::json to_json(const RunResult& r);

class RuntimeState;

/// A live program instance. The clock only moves forward.
class Runtime {
 public:
  Runtime(const SourceProgram& program, std::uint64_t horizon, TiePolicy policy);
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  /// Runs every step strictly before `t`.
  void advance_to(std::uint64_t t);
  /// Delivers all stimuli of one time together, then settles that time.
  void deliver(const std::vector<Stimulus>& simultaneous);
  /// Runs all remaining steps up to the horizon.
  void finish();

  std::uint64_t clock() const;
  RunResult result() const;
  /// Logbooks of the widgets that were not dropped.
  LogbookSet logbooks() const;

 private:
  std::unique_ptr<RuntimeState> state_;
};

RunResult run(const SourceProgram& program, const EventTrace& trace, std::uint64_t horizon, TiePolicy policy);

struct ConformanceViolation {
  EventTrace trace;
  std::string policy;
  std::string detail;
};

struct ConformanceReport {
  std::uint64_t horizon = 0;
  std::size_t traces = 0;
  std::size_t runs = 0;
  std::size_t outcomes = 0;
  std::vector<ConformanceViolation> violations;

  bool ok() const { return violations.empty(); }
};

nlohmann::json to_json(const ConformanceReport& r);

/// Every trace realizable within the horizon, found by replaying prefixes and
/// extending them with stimuli for handlers still pending.
std::vector<EventTrace> realizable_traces(const SourceProgram& program, std::uint64_t horizon,
                                          std::size_t limit = 200'000);

/// Checks every realizable trace under Left and Right ties against eval_denot.
ConformanceReport conformance(const SourceProgram& program, std::uint64_t horizon);

}  // namespace lw

namespace lw {

/// Reads `-- @conform-horizon N` from a source file, if present.
std::optional<std::uint64_t> conform_horizon_pragma(std::string_view source);

}  // namespace lw
