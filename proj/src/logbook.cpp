#include "lambda_widget/logbook.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace lw {

const char* color_name(Color c) {
  switch (c) {
    case Color::Red: return "Red";
    case Color::Blue: return "Blue";
    case Color::Green: return "Green";
  }
  return "?";
}

std::optional<Color> parse_color(std::string_view s) {
  if (s == "Red") return Color::Red;
  if (s == "Blue") return Color::Blue;
  if (s == "Green") return Color::Green;
  return std::nullopt;
}

std::string show(const Command& c) {
  switch (c.kind) {
    case Command::Kind::SetColor: return std::string("setColor ") + color_name(c.color);
    case Command::Kind::OnClick: return "onClick";
    case Command::Kind::OnKeypress: return "onKeypress";
    case Command::Kind::Attach: return "attach " + std::to_string(c.child);
  }
  return "?";
}

CompatError::CompatError(std::uint64_t t, Command a, Command b)
    : std::runtime_error("incompatible commands at time " + std::to_string(t) + ": " + show(a) + " and " + show(b)),
      time(t),
      first(a),
      second(b) {}

bool compatible(const Command& a, const Command& b) {
  return !(a.kind == Command::Kind::SetColor && b.kind == Command::Kind::SetColor);
}

void add_entry(std::set<Entry>& entries, const Entry& e) {
  auto lo = entries.lower_bound(Entry{e.time, Command::set_color(Color::Red)});
  for (auto it = lo; it != entries.end() && it->time == e.time; ++it)
    if (it->cmd != e.cmd && !compatible(it->cmd, e.cmd)) throw CompatError(e.time, it->cmd, e.cmd);
  entries.insert(e);
}

void validate(const std::set<Entry>& entries) {
  std::set<Entry> seen;
  for (const Entry& e : entries) add_entry(seen, e);
}

Logbook widget_union(const Logbook& a, const Logbook& b) {
  Logbook r = a;
  for (const Entry& e : b.entries) add_entry(r.entries, e);
  return r;
}

Logbook shift(std::uint64_t t, const Logbook& w) {
  Logbook r{w.id, {}};
  for (const Entry& e : w.entries)
    if (e.time >= t) r.entries.insert(Entry{e.time - t, e.cmd});
  return r;
}

PrefixBook prefix_of(std::uint64_t t, const Logbook& w) {
  PrefixBook p{w.id, t, {}};
  for (const Entry& e : w.entries)
    if (e.time < t) p.entries.insert(e);
  return p;
}

std::pair<PrefixBook, Logbook> split_sem(std::uint64_t t, const Logbook& w) {
  return {prefix_of(t, w), shift(t, w)};
}

Logbook join_sem(std::uint64_t t, const PrefixBook& p, const Logbook& w) {
  Logbook r{w.id, p.entries};
  for (const Entry& e : w.entries) add_entry(r.entries, Entry{e.time + t, e.cmd});
  return r;
}

RenderState render_state(const Logbook& w, std::uint64_t n) {
  RenderState s;
  std::set<std::string> handlers;
  for (const Entry& e : w.entries) {
    if (e.time > n) break;
    switch (e.cmd.kind) {
      case Command::Kind::SetColor: s.color = e.cmd.color; break;
      case Command::Kind::OnClick: handlers.insert("click"); break;
      case Command::Kind::OnKeypress: handlers.insert("keypress"); break;
      case Command::Kind::Attach: s.children.push_back(e.cmd.child); break;
    }
  }
  s.handlers.assign(handlers.begin(), handlers.end());
  return s;
}

nlohmann::json to_json(const Entry& e) {
  switch (e.cmd.kind) {
    case Command::Kind::SetColor: return {e.time, "setColor", color_name(e.cmd.color)};
    case Command::Kind::OnClick: return {e.time, "onClick"};
    case Command::Kind::OnKeypress: return {e.time, "onKeypress"};
    case Command::Kind::Attach: return {e.time, "attach", e.cmd.child};
  }
  return nullptr;
}

nlohmann::json to_json(const Logbook& w) {
  nlohmann::json entries = nlohmann::json::array();
  for (const Entry& e : w.entries) entries.push_back(to_json(e));
  return {{"entries", entries}, {"id", w.id}};
}

nlohmann::json to_json(const LogbookSet& s) {
  nlohmann::json a = nlohmann::json::array();
  for (const Logbook& w : s) a.push_back(to_json(w));
  return a;
}

nlohmann::json to_json(const RenderState& r) {
  nlohmann::json j;
  j["color"] = r.color ? nlohmann::json(color_name(*r.color)) : nlohmann::json(nullptr);
  j["handlers"] = r.handlers;
  j["children"] = r.children;
  return j;
}

LogbookSet canonical_ids(const LogbookSet& s) {
  std::map<std::uint64_t, const Logbook*> by_id;
  std::set<std::uint64_t> attached;
  for (const Logbook& w : s) {
    by_id[w.id] = &w;
    for (const Entry& e : w.entries)
      if (e.cmd.kind == Command::Kind::Attach) attached.insert(e.cmd.child);
  }
  std::map<std::uint64_t, std::string> sig;
  std::set<std::uint64_t> visiting;
  std::function<std::string(std::uint64_t)> signature = [&](std::uint64_t id) -> std::string {
    if (auto it = sig.find(id); it != sig.end()) return it->second;
    auto w = by_id.find(id);
    if (w == by_id.end() || visiting.count(id)) return "?";
    visiting.insert(id);
    std::string r = "(";
    for (const Entry& e : w->second->entries) {
      r += std::to_string(e.time) + ":";
      r += e.cmd.kind == Command::Kind::Attach ? "attach" + signature(e.cmd.child) : show(e.cmd);
      r += ";";
    }
    r += ")";
    visiting.erase(id);
    return sig[id] = r;
  };
  std::vector<std::uint64_t> roots;
  for (const Logbook& w : s)
    if (!attached.count(w.id)) roots.push_back(w.id);
  for (const Logbook& w : s)
    if (attached.count(w.id) && !by_id.count(w.id)) roots.push_back(w.id);
  std::stable_sort(roots.begin(), roots.end(),
                   [&](std::uint64_t a, std::uint64_t b) { return signature(a) < signature(b); });

  std::map<std::uint64_t, std::uint64_t> rename;
  std::function<void(std::uint64_t)> number = [&](std::uint64_t id) {
    if (rename.count(id)) return;
    std::uint64_t n = rename.size();
    rename[id] = n;
    auto w = by_id.find(id);
    if (w == by_id.end()) return;
    for (const Entry& e : w->second->entries)
      if (e.cmd.kind == Command::Kind::Attach) number(e.cmd.child);
  };
  for (std::uint64_t r : roots) number(r);
  for (const Logbook& w : s) number(w.id);

  LogbookSet out;
  for (const Logbook& w : s) {
    Logbook c{rename.at(w.id), {}};
    for (Entry e : w.entries) {
      if (e.cmd.kind == Command::Kind::Attach) {
        auto it = rename.find(e.cmd.child);
        if (it == rename.end()) {
          std::uint64_t n = rename.size();
          it = rename.emplace(e.cmd.child, n).first;
        }
        e.cmd.child = it->second;
      }
      c.entries.insert(e);
    }
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const Logbook& a, const Logbook& b) { return a.id < b.id; });
  return out;
}

}  // namespace lw
