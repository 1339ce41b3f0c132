#pragma once

// Helpers shared by the test binaries and the acceptance runner: corpus
// access, a random generator of well-typed programs and the index
// substitution harness.

#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lambda_widget/desugar.hpp"
#include "lambda_widget/logbook.hpp"
#include "lambda_widget/parser.hpp"
#include "lambda_widget/pretty.hpp"
#include "lambda_widget/subst.hpp"
#include "lambda_widget/typecheck.hpp"

namespace lwtest {

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string corpus_path(const std::string& name) { return std::string(LW_CORPUS_DIR) + "/" + name; }
inline std::string corpus(const std::string& name) { return slurp(corpus_path(name)); }

/// Well-typed corpus files, i.e. everything the semantics can run.
inline const std::vector<std::string>& runnable_corpus() {
  static const std::vector<std::string> files = {
      "turn_red.lw",  "turn_red_core.lw", "keep_red.lw",   "change_color.lw", "interleave.lw",  "stream_map.lw",
      "button_stack.lw", "s43.lw",        "set_color_at.lw", "probe_once.lw", "probe_keep.lw", "double_set.lw",
  };
  return files;
}

inline lw::SourceProgram elaborate(const std::string& source) {
  lw::CheckResult r = lw::check_source(source);
  if (!r.ok()) throw std::runtime_error("program does not typecheck: " + r.errors.front().message);
  return r.elaborated;
}

// ---------------------------------------------------------------------------
// Random well-typed programs.

struct GenType {
  enum class Kind { Unit, Tensor, Diamond, Color, Widget, Packed, Sum };

  Kind kind = Kind::Unit;
  std::shared_ptr<const GenType> l, r;
  std::string index;  // Widget

  std::string text() const {
    auto wrap = [](const GenType& t) {
      return t.kind == Kind::Unit || t.kind == Kind::Widget ? t.text() : "(" + t.text() + ")";
    };
    switch (kind) {
      case Kind::Unit: return "I";
      case Kind::Tensor: return wrap(*l) + " ⊗ " + wrap(*r);
      case Kind::Sum: return wrap(*l) + " ⊕ " + wrap(*r);
      case Kind::Diamond: return "◇" + wrap(*l);
      case Kind::Color: return "F Color";
      case Kind::Widget: return "Widget " + index;
      case Kind::Packed: return "∃(" + index + ":Id). Widget " + index;
    }
    return "?";
  }
};

using GenTypePtr = std::shared_ptr<const GenType>;

inline GenTypePtr gt(GenType::Kind k, GenTypePtr l = nullptr, GenTypePtr r = nullptr, std::string index = "") {
  auto t = std::make_shared<GenType>();
  t->kind = k;
  t->l = std::move(l);
  t->r = std::move(r);
  t->index = std::move(index);
  return t;
}

struct Generated {
  std::string source;  // one definition named `main`
  std::string result_type;
  std::vector<std::string> binders;  // every linear binder, each used once
  bool has_select = false;
};

/// Builds `main : I ⊸ T` as a chain of lets over a pool of linear variables;
/// every binder is consumed exactly once by construction.
class ProgramGenerator {
 public:
  explicit ProgramGenerator(std::uint64_t seed) : rng_(seed) {}

  Generated next(int steps = 12) {
    pool_.clear();
    counter_ = 0;
    Generated g;
    std::string body;
    binders_ = &g.binders;
    g.binders.push_back("u");
    body += "let () = u in\n";
    for (int s = 0; s < steps; ++s) body += step(g);
    std::string result;
    GenTypePtr type;
    close(result, type);
    g.result_type = type->text();
    g.source = "def main : I ⊸ " + (type->kind == GenType::Kind::Unit ? "I" : "(" + g.result_type + ")") +
               " =\n  λu.\n" + body + result + "\n";
    return g;
  }

 private:
  struct Slot {
    std::string name;
    GenTypePtr type;
  };

  std::mt19937_64 rng_;
  std::vector<Slot> pool_;
  int counter_ = 0;
  std::vector<std::string>* binders_ = nullptr;

  std::string fresh(const char* base) {
    std::string n = base + std::to_string(counter_++);
    binders_->push_back(n);
    return n;
  }

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  Slot take(std::size_t k) {
    Slot s = pool_[k];
    pool_.erase(pool_.begin() + static_cast<long>(k));
    return s;
  }

  std::vector<std::size_t> with(GenType::Kind k) {
    std::vector<std::size_t> r;
    for (std::size_t i = 0; i < pool_.size(); ++i)
      if (pool_[i].type->kind == k) r.push_back(i);
    return r;
  }

  std::string step(Generated& g) {
    using K = GenType::Kind;
    for (;;) {
      switch (pick(11)) {
        case 0: {
          std::string v = fresh("v");
          pool_.push_back({v, gt(K::Unit)});
          return "let " + v + " = () in\n";
        }
        case 1: {
          std::string v = fresh("v");
          pool_.push_back({v, gt(K::Color)});
          return "let " + v + " = F " + std::string(pick(2) ? "Red" : "Blue") + " in\n";
        }
        case 2: {
          if (pool_.size() < 2) break;
          Slot a = take(static_cast<std::size_t>(pick(static_cast<int>(pool_.size()))));
          Slot b = take(static_cast<std::size_t>(pick(static_cast<int>(pool_.size()))));
          if (a.type->kind == K::Widget || b.type->kind == K::Widget) {
            pool_.push_back(a);
            pool_.push_back(b);
            break;
          }
          std::string v = fresh("v");
          pool_.push_back({v, gt(K::Tensor, a.type, b.type)});
          return "let " + v + " = (" + a.name + ", " + b.name + ") in\n";
        }
        case 3: {
          auto c = with(K::Tensor);
          if (c.empty()) break;
          Slot x = take(c[static_cast<std::size_t>(pick(static_cast<int>(c.size())))]);
          std::string a = fresh("a"), b = fresh("b");
          pool_.push_back({a, x.type->l});
          pool_.push_back({b, x.type->r});
          return "let (" + a + ", " + b + ") = " + x.name + " in\n";
        }
        case 4: {
          auto c = with(K::Unit);
          if (c.empty()) break;
          Slot x = take(c[static_cast<std::size_t>(pick(static_cast<int>(c.size())))]);
          return "let () = " + x.name + " in\n";
        }
        case 5: {
          if (pool_.empty()) break;
          Slot x = take(static_cast<std::size_t>(pick(static_cast<int>(pool_.size()))));
          if (x.type->kind == K::Widget) {
            pool_.push_back(x);
            break;
          }
          std::string v = fresh("v");
          pool_.push_back({v, gt(K::Diamond, x.type)});
          return "let " + v + " = evt " + x.name + " in\n";
        }
        case 6: {
          if (pool_.empty()) break;
          Slot x = take(static_cast<std::size_t>(pick(static_cast<int>(pool_.size()))));
          std::string z = fresh("z"), v = fresh("v");
          pool_.push_back({v, x.type});
          std::string t = x.type->text();
          return "let " + v + " = ((λ" + z + ". " + z + ") : (" + t + ") ⊸ (" + t + ")) " + x.name + " in\n";
        }
        case 7: {
          auto c = with(K::Diamond);
          if (c.empty()) break;
          Slot x = take(c[static_cast<std::size_t>(pick(static_cast<int>(c.size())))]);
          std::string a = fresh("a"), v = fresh("v");
          pool_.push_back({v, gt(K::Diamond, gt(K::Tensor, x.type->l, gt(K::Unit)))});
          return "let " + v + " = (let evt " + a + " = " + x.name + " in evt (" + a + ", ())) in\n";
        }
        case 8: {
          auto c = with(K::Diamond);
          if (c.size() < 2) break;
          std::size_t i = c[static_cast<std::size_t>(pick(static_cast<int>(c.size())))];
          Slot e1 = take(i);
          c = with(K::Diamond);
          Slot e2 = take(c[static_cast<std::size_t>(pick(static_cast<int>(c.size())))]);
          std::string a = fresh("a"), b = fresh("b"), v = fresh("v");
          g.has_select = true;
          GenTypePtr left = gt(K::Tensor, e1.type->l, e2.type);
          GenTypePtr right = gt(K::Tensor, e1.type, e2.type->l);
          GenTypePtr sum = gt(K::Sum, left, right);
          pool_.push_back({v, gt(K::Diamond, sum)});
          std::string ann = " : (" + sum->text() + ")";
          return "let " + v + " = select " + e1.name + " as " + a + " => (evt ((inl (" + a + ", " + e2.name + "))" +
                 ann + "))\n  | " + e2.name + " as " + b + " => (evt ((inr (" + e1.name + ", " + b + "))" + ann +
                 ")) in\n";
        }
        case 9: {
          if (pool_.empty()) break;
          Slot x = take(static_cast<std::size_t>(pick(static_cast<int>(pool_.size()))));
          std::string d = fresh("d"), w = fresh("v");
          pool_.push_back({w, x.type});
          return "let " + d + " = " + x.name + " @ 0 in let " + w + " @ 0 = " + d + " in\n";
        }
        case 10: {
          auto ws = with(K::Widget);
          if (!ws.empty() && pick(3) > 0) {
            Slot w = take(ws[static_cast<std::size_t>(pick(static_cast<int>(ws.size())))]);
            std::string w2 = fresh("w");
            if (pick(2)) {
              std::string c = fresh("c");
              pool_.push_back({w2, w.type});
              pool_.push_back({c, gt(K::Diamond, gt(K::Unit))});
              return "let (" + w2 + ", " + c + ") = onClick " + w.name + " in\n";
            }
            pool_.push_back({w2, w.type});
            return "let " + w2 + " = setColor (" + w.name + ", F Green) in\n";
          }
          std::string k = "k" + std::to_string(counter_++), w = fresh("w");
          pool_.push_back({w, gt(K::Widget, nullptr, nullptr, k)});
          return "let (" + k + ", " + w + ") = newWidget () in\n";
        }
      }
    }
  }

  void close(std::string& result, GenTypePtr& type) {
    using K = GenType::Kind;
    if (pool_.empty()) {
      result = "  ()";
      type = gt(K::Unit);
      return;
    }
    std::vector<std::pair<std::string, GenTypePtr>> parts;
    for (const Slot& s : pool_) {
      if (s.type->kind == K::Widget)
        parts.push_back({"pack(" + s.type->index + ", " + s.name + ")", gt(K::Packed, nullptr, nullptr, s.type->index)});
      else
        parts.push_back({s.name, s.type});
    }
    result = parts.back().first;
    type = parts.back().second;
    for (std::size_t k = parts.size() - 1; k-- > 0;) {
      result = "(" + parts[k].first + ", " + result + ")";
      type = gt(K::Tensor, parts[k].second, type);
    }
    result = "  " + result;
  }
};

// ---------------------------------------------------------------------------
// Logbook oracles, written from the formulas over plain entry sets.

using Entries = std::set<lw::Entry>;

inline const std::vector<lw::Command>& commands() {
  static const std::vector<lw::Command> cs = {
      lw::Command::set_color(lw::Color::Red), lw::Command::set_color(lw::Color::Blue),
      lw::Command::set_color(lw::Color::Green), lw::Command::on_click(), lw::Command::on_keypress(),
      lw::Command::attach(1)};
  return cs;
}

inline bool oracle_compatible(const std::vector<lw::Entry>& es) {
  for (std::size_t a = 0; a < es.size(); ++a)
    for (std::size_t b = a + 1; b < es.size(); ++b)
      if (es[a].time == es[b].time && es[a].cmd.kind == lw::Command::Kind::SetColor &&
          es[b].cmd.kind == lw::Command::Kind::SetColor)
        return false;
  return true;
}

inline Entries oracle_shift(std::uint64_t t, const Entries& w) {
  Entries out;
  for (const lw::Entry& x : w)
    if (t <= x.time) out.insert({x.time - t, x.cmd});
  return out;
}

inline Entries oracle_prefix(std::uint64_t t, const Entries& w) {
  Entries out;
  for (const lw::Entry& x : w)
    if (x.time < t) out.insert(x);
  return out;
}

inline std::optional<lw::Color> oracle_color(const Entries& w, std::uint64_t n) {
  std::optional<lw::Color> c;
  std::uint64_t best = 0;
  for (const lw::Entry& x : w)
    if (x.cmd.kind == lw::Command::Kind::SetColor && x.time <= n && (!c || x.time >= best)) {
      c = x.cmd.color;
      best = x.time;
    }
  return c;
}

inline Entries random_entries(std::mt19937_64& rng, std::uint64_t max_time, int max_entries) {
  Entries out;
  int n = std::uniform_int_distribution<int>(0, max_entries)(rng);
  for (int k = 0; k < n; ++k) {
    lw::Entry x{std::uniform_int_distribution<std::uint64_t>(0, max_time)(rng),
                commands()[std::uniform_int_distribution<std::size_t>(0, commands().size() - 1)(rng)]};
    std::vector<lw::Entry> all(out.begin(), out.end());
    all.push_back(x);
    if (oracle_compatible(all)) out.insert(x);
  }
  return out;
}

// Every compatible set of at most `max` entries with times in [0, horizon].
inline std::vector<Entries> all_books(std::uint64_t horizon, std::size_t max) {
  std::vector<lw::Entry> universe;
  for (std::uint64_t t = 0; t <= horizon; ++t)
    for (const lw::Command& c : commands()) universe.push_back({t, c});
  std::vector<Entries> out;
  std::vector<lw::Entry> cur;
  auto rec = [&](auto&& self, std::size_t from) -> void {
    if (oracle_compatible(cur)) out.push_back(Entries(cur.begin(), cur.end()));
    else return;
    if (cur.size() == max) return;
    for (std::size_t k = from; k < universe.size(); ++k) {
      cur.push_back(universe[k]);
      self(self, k + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Index substitution harness.

struct SubstOutcome {
  bool ok = true;
  std::string message;
};

/// Strips the leading Λs of a definition, maps each bound index to a random
/// index of the same sort over a fresh context and rechecks the body against
/// the substituted type.
inline SubstOutcome check_random_subst(const lw::SourceProgram& program, const lw::Definition& def,
                                       std::mt19937_64& rng) {
  using namespace lw;
  if (!def.type.lin) return {};
  std::vector<std::pair<Name, Sort>> term_binders;
  TermPtr body = def.body;
  while (body->kind == TermKind::TLam) {
    term_binders.push_back({body->binds[0], body->sort});
    body = body->subs[0];
  }
  LinTypePtr type = def.type.lin;
  std::vector<Name> type_binders;
  for (std::size_t k = 0; k < term_binders.size(); ++k) {
    if (type->kind != LinType::Kind::Forall) return {false, "Λ without matching ∀"};
    type_binders.push_back(type->binder);
    type = type->left;
  }

  IndexContext target;
  std::uniform_int_distribution<int> coin(0, 2);
  int nvars = coin(rng) + 1;
  for (int k = 0; k < nvars; ++k) {
    Sort s = coin(rng) == 0 ? Sort::Time : Sort::Id;
    target.entries.push_back({Name{(s == Sort::Time ? "s" : "j") + std::to_string(k), fresh_id()}, s});
  }
  IndexContext from;
  IndexSubst z;
  for (std::size_t k = 0; k < term_binders.size(); ++k) {
    Sort s = term_binders[k].second;
    std::vector<IndexTerm> choices;
    for (const auto& [n, sort] : target.entries)
      if (sort == s) choices.push_back(IndexTerm::variable(n));
    std::uint64_t lit = std::uniform_int_distribution<std::uint64_t>(0, 9)(rng);
    choices.push_back(s == Sort::Time ? IndexTerm::time(lit) : IndexTerm::ident(lit));
    IndexTerm image = choices[std::uniform_int_distribution<std::size_t>(0, choices.size() - 1)(rng)];
    z[term_binders[k].first.id] = image;
    z[type_binders[k].id] = image;
    from.entries.push_back(term_binders[k]);
  }
  try {
    IndexSubst zt;
    for (const auto& [n, s] : from.entries) zt[n.id] = z.at(n.id);
    check_index_subst(target, from, zt);
    LinTypePtr want = subst_index(z, type);
    LinearContext out = check_linear(target, {}, {}, subst_index(z, body), want, IndexTerm::time(0), &program);
    (void)out;
  } catch (const TypeErrorException& e) {
    return {false, def.name + ": " + kind_name(e.error.kind) + " " + e.error.message};
  }
  return {};
}

}  // namespace lwtest
