#pragma once

// Widget objects: logbooks of timed commands and the operations that cut,
// shift and glue them.

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace lw {

enum class Color { Red, Blue, Green };

const char* color_name(Color c);
std::optional<Color> parse_color(std::string_view s);

struct Command {
  enum class Kind { SetColor, OnClick, OnKeypress, Attach };

  Kind kind = Kind::OnClick;
  Color color = Color::Red;  // SetColor
  std::uint64_t child = 0;   // Attach

  static Command set_color(Color c) { return {Kind::SetColor, c, 0}; }
  static Command on_click() { return {Kind::OnClick, Color::Red, 0}; }
  static Command on_keypress() { return {Kind::OnKeypress, Color::Red, 0}; }
  static Command attach(std::uint64_t j) { return {Kind::Attach, Color::Red, j}; }

  auto operator<=>(const Command&) const = default;
  bool operator==(const Command&) const = default;
};

std::string show(const Command& c);

struct Entry {
  std::uint64_t time = 0;
  Command cmd;

  auto operator<=>(const Entry&) const = default;
  bool operator==(const Entry&) const = default;
};

struct Logbook {
  std::uint64_t id = 0;
  std::set<Entry> entries;

  bool operator==(const Logbook&) const = default;
};

struct PrefixBook {
  std::uint64_t id = 0;
  std::uint64_t cutoff = 0;
  std::set<Entry> entries;

  bool operator==(const PrefixBook&) const = default;
};

class CompatError : public std::runtime_error {
 public:
  CompatError(std::uint64_t time, Command a, Command b);
  std::uint64_t time;
  Command first, second;
};

bool compatible(const Command& a, const Command& b);

/// Adds one entry, checking it against the entries at the same time.
void add_entry(std::set<Entry>& entries, const Entry& e);
/// Throws CompatError if two entries at one time are incompatible.
void validate(const std::set<Entry>& entries);

Logbook widget_union(const Logbook& a, const Logbook& b);
Logbook shift(std::uint64_t t, const Logbook& w);
PrefixBook prefix_of(std::uint64_t t, const Logbook& w);
std::pair<PrefixBook, Logbook> split_sem(std::uint64_t t, const Logbook& w);
Logbook join_sem(std::uint64_t t, const PrefixBook& p, const Logbook& w);

struct RenderState {
  std::optional<Color> color;
  std::vector<std::string> handlers;  // "click", "keypress"
  std::vector<std::uint64_t> children;

  bool operator==(const RenderState&) const = default;
};

RenderState render_state(const Logbook& w, std::uint64_t n);

/// A set of logbooks as a result of a run or an outcome. Kept sorted by id.
using LogbookSet = std::vector<Logbook>;

/// `[t, "setColor", "Red"]`, `[t, "onClick"]`, `[t, "attach", j]`.
nlohmann::json to_json(const Entry& e);
nlohmann::json to_json(const Logbook& w);
nlohmann::json to_json(const LogbookSet& s);
nlohmann::json to_json(const RenderState& r);

/// Renames widget ids canonically so that two sets equal up to a bijection on
/// ids become identical. Attachments form a forest; roots are ordered by the
/// structure of their subtrees.
LogbookSet canonical_ids(const LogbookSet& s);

}  // namespace lw

namespace lw {

/// A time literal or arrival lies beyond the enumeration horizon.
class HorizonExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation reached a term with no applicable rule.
class StuckTerm : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lw
