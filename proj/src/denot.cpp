#include "lambda_widget/denot.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

namespace lw {

namespace {

using K = SemValue::Kind;

SemPtr make(SemValue v) { return std::make_shared<const SemValue>(std::move(v)); }

SemPtr unit_v() {
  static const SemPtr u = make(SemValue{});
  return u;
}

SemPtr never_v() {
  static const SemPtr n = [] {
    SemValue v;
    v.kind = K::Never;
    return make(v);
  }();
  return n;
}

SemPtr pair_v(SemPtr a, SemPtr b) {
  SemValue v;
  v.kind = K::Pair;
  v.a = std::move(a);
  v.b = std::move(b);
  return make(std::move(v));
}

SemPtr wrap(K k, std::uint64_t n, SemPtr a) {
  SemValue v;
  v.kind = k;
  v.n = n;
  v.a = std::move(a);
  return make(std::move(v));
}

SemPtr event_v(std::uint64_t k, SemPtr payload) { return wrap(K::Event, k, k == kInfinity ? never_v() : payload); }
SemPtr at_v(std::uint64_t t, SemPtr payload) { return wrap(K::At, t, t == kInfinity ? never_v() : payload); }
SemPtr time_v(std::uint64_t t) { return wrap(K::Time, t, nullptr); }
SemPtr id_v(std::uint64_t i) { return wrap(K::Id, i, nullptr); }

SemPtr pack_v(SemPtr witness, SemPtr body) {
  SemValue v;
  v.kind = K::Pack;
  v.index = std::move(witness);
  v.a = std::move(body);
  return make(std::move(v));
}

SemPtr cart_v(std::string lit) {
  SemValue v;
  v.kind = K::Cart;
  v.literal = std::move(lit);
  return make(std::move(v));
}

SemPtr widget_v(std::vector<Logbook> family) {
  SemValue v;
  v.kind = K::Widget;
  v.family = std::move(family);
  return make(std::move(v));
}

SemPtr prefix_v(std::vector<PrefixBook> p) {
  SemValue v;
  v.kind = K::Prefix;
  v.prefixes = std::move(p);
  return make(std::move(v));
}

std::uint64_t add_time(std::uint64_t a, std::uint64_t b) {
  return a == kInfinity || b == kInfinity ? kInfinity : a + b;
}

int builtin_arity(const std::string& name) { return name == "vAttach" ? 2 : 1; }

/// Replays a prefix of recorded decisions, then takes the first alternative.
struct Chooser {
  std::vector<int> script;
  std::vector<int> made;
  std::vector<int> alternatives;
  std::vector<std::string> labels;

  int choose(int n, const std::function<std::string(int)>& label) {
    std::size_t pos = made.size();
    int c = pos < script.size() ? script[pos] : 0;
    made.push_back(c);
    alternatives.push_back(n);
    labels.push_back(label(c));
    return c;
  }
};

class Evaluator {
 public:
  Evaluator(const SourceProgram& p, std::uint64_t horizon, Chooser& chooser)
      : program_(p), horizon_(horizon), chooser_(chooser) {}

  SemPtr entry() {
    const Definition* d = program_.find(program_.entry);
    if (!d) throw StuckTerm("no entry point");
    SemPtr v = eval(d->body, nullptr, 0);
    if (d->type.lin && d->type.lin->kind == LinType::Kind::Lolli && d->type.lin->left->kind == LinType::Kind::Unit)
      v = apply(v, unit_v(), 0);
    return v;
  }

 private:
  const SourceProgram& program_;
  std::uint64_t horizon_;
  Chooser& chooser_;
  std::uint64_t next_id_ = 0;

  static SemEnvPtr bind(SemEnvPtr env, const Name& n, SemPtr v) {
    return std::make_shared<const SemEnv>(SemEnv{n.id, std::move(v), std::move(env)});
  }

  static SemPtr lookup(const SemEnvPtr& env, const Name& n) {
    for (const SemEnv* e = env.get(); e; e = e->next.get())
      if (e->id == n.id) return e->value;
    throw StuckTerm("unbound variable '" + n.text + "'");
  }

  SemPtr index(const IndexTerm& i, const SemEnvPtr& env, std::uint64_t now) {
    switch (i.kind) {
      case IndexTerm::Kind::Var: return lookup(env, i.var);
      case IndexTerm::Kind::TimeLit: return time_v(now + i.value);
      case IndexTerm::Kind::IdLit: return id_v(i.value);
      case IndexTerm::Kind::Infinity: return time_v(kInfinity);
      case IndexTerm::Kind::Meta: break;
    }
    throw StuckTerm("unsolved index metavariable");
  }

  std::uint64_t time_of(const IndexTerm& i, const SemEnvPtr& env, std::uint64_t now) {
    SemPtr v = index(i, env, now);
    if (v->kind != K::Time) throw StuckTerm("expected a time index");
    return v->n;
  }

  /// Absolute frame for evaluating under a delay to `t`.
  std::uint64_t enter(std::uint64_t t, std::uint64_t now) {
    if (t == kInfinity) return t;
    if (t > horizon_) throw HorizonExceeded("time " + std::to_string(t) + " is beyond horizon " + std::to_string(horizon_));
    if (t < now) throw StuckTerm("delay into the past");
    return t;
  }

  static SemPtr part(const SemPtr& v, bool second) {
    if (v->kind == K::Never) return v;
    if (v->kind != K::Pair) throw StuckTerm("expected a pair");
    return second ? v->b : v->a;
  }

  SemPtr eval(const TermPtr& t, SemEnvPtr env, std::uint64_t now) {
    switch (t->kind) {
      case TermKind::Var: return lookup(env, t->ref);
      case TermKind::Global: {
        const Definition* d = program_.find(t->ref.text);
        if (!d) throw StuckTerm("unknown definition '" + t->ref.text + "'");
        return eval(d->body, nullptr, now);
      }
      case TermKind::Builtin: {
        SemValue v;
        v.kind = K::Builtin;
        v.literal = t->ref.text;
        return make(std::move(v));
      }
      case TermKind::Lam:
      case TermKind::TLam:
      case TermKind::GIntro: {
        SemValue v;
        v.kind = t->kind == TermKind::Lam ? K::Closure : t->kind == TermKind::TLam ? K::TClosure : K::Thunk;
        v.term = t;
        v.env = env;
        return make(std::move(v));
      }
      case TermKind::App: {
        SemPtr f = eval(t->subs[0], env, now);
        return apply(f, eval(t->subs[1], env, now), now);
      }
      case TermKind::IndexApp: {
        SemPtr f = eval(t->subs[0], env, now);
        SemPtr i = index(t->index, env, now);
        if (f->kind == K::TClosure) return eval(f->term->subs[0], bind(f->env, f->term->binds[0], i), now);
        if (f->kind == K::Builtin) return extend(f, i, now);
        throw StuckTerm("index application of a non-abstraction");
      }
      case TermKind::Unit:
      case TermKind::Star: return t->kind == TermKind::Star ? cart_v("*") : unit_v();
      case TermKind::Color: return cart_v(t->literal);
      case TermKind::Char: return cart_v(t->literal);
      case TermKind::LetUnit:
        eval(t->subs[0], env, now);
        return eval(t->subs[1], env, now);
      case TermKind::Pair: {
        SemPtr a = eval(t->subs[0], env, now);
        return pair_v(a, eval(t->subs[1], env, now));
      }
      case TermKind::LetPair: {
        SemPtr p = eval(t->subs[0], env, now);
        env = bind(env, t->binds[0], part(p, false));
        env = bind(env, t->binds[1], part(p, true));
        return eval(t->subs[1], env, now);
      }
      case TermKind::Evt: return event_v(0, eval(t->subs[0], env, now));
      case TermKind::LetEvt: {
        SemPtr e = eval(t->subs[0], env, now);
        if (e->kind == K::Never || e->n == kInfinity) return event_v(kInfinity, nullptr);
        std::uint64_t at = now + e->n;
        SemPtr r = eval(t->subs[1], bind(env, t->binds[0], e->a), at);
        if (r->kind != K::Event) throw StuckTerm("event body did not produce an event");
        return event_v(add_time(e->n, r->n), r->a);
      }
      case TermKind::AtIntro: {
        std::uint64_t at = enter(time_of(t->index, env, now), now);
        if (at == kInfinity) return at_v(kInfinity, nullptr);
        return at_v(at, eval(t->subs[0], env, at));
      }
      case TermKind::LetAt: {
        SemPtr v = eval(t->subs[0], env, now);
        SemPtr payload = v->kind == K::At ? v->a : v->kind == K::Never ? v : nullptr;
        if (!payload) throw StuckTerm("expected a delayed value");
        return eval(t->subs[1], bind(env, t->binds[0], payload), now);
      }
      case TermKind::LetUnitAt:
      case TermKind::LetPairAt: {
        std::uint64_t at = enter(time_of(t->index, env, now), now);
        SemPtr v = at == kInfinity ? never_v() : eval(t->subs[0], env, at);
        if (t->kind == TermKind::LetPairAt) {
          env = bind(env, t->binds[0], part(v, false));
          env = bind(env, t->binds[1], part(v, true));
        }
        return eval(t->subs[1], env, now);
      }
      case TermKind::RunG: {
        SemPtr g = eval(t->subs[0], env, now);
        if (g->kind != K::Thunk) throw StuckTerm("runG of a non-thunk");
        return eval(g->term->subs[0], g->env, now);
      }
      case TermKind::FIntro:
      case TermKind::Fold:
      case TermKind::Unfold:
      case TermKind::Annot: return eval(t->subs[0], env, now);
      case TermKind::LetF:
      case TermKind::Let:
        return eval(t->subs[1], bind(env, t->binds[0], eval(t->subs[0], env, now)), now);
      case TermKind::Pack: return pack_v(index(t->index, env, now), eval(t->subs[0], env, now));
      case TermKind::LetPack: {
        SemPtr p = eval(t->subs[0], env, now);
        if (p->kind != K::Pack) throw StuckTerm("expected a package");
        env = bind(env, t->binds[0], p->index);
        env = bind(env, t->binds[1], p->a);
        return eval(t->subs[1], env, now);
      }
      case TermKind::Inl:
      case TermKind::Inr: return wrap(t->kind == TermKind::Inl ? K::Inl : K::Inr, 0, eval(t->subs[0], env, now));
      case TermKind::Case: {
        SemPtr s = eval(t->subs[0], env, now);
        if (s->kind != K::Inl && s->kind != K::Inr) throw StuckTerm("case on a non-sum");
        bool left = s->kind == K::Inl;
        return eval(t->subs[left ? 1 : 2], bind(env, t->binds[left ? 0 : 1], s->a), now);
      }
      case TermKind::Select: return select(t, env, now);
      case TermKind::LetPattern: break;
    }
    throw StuckTerm("no rule for term");
  }

  SemPtr select(const TermPtr& t, SemEnvPtr env, std::uint64_t now) {
    SemPtr e1 = lookup(env, t->refs[0]);
    SemPtr e2 = lookup(env, t->refs[1]);
    std::uint64_t k1 = e1->kind == K::Never ? kInfinity : e1->n;
    std::uint64_t k2 = e2->kind == K::Never ? kInfinity : e2->n;
    if (k1 == kInfinity && k2 == kInfinity) return event_v(kInfinity, nullptr);
    bool first;
    if (k1 != k2) {
      first = k1 < k2;
    } else {
      first = chooser_.choose(2, [&](int c) {
        return std::string("tie@") + std::to_string(now + k1) + (c == 0 ? ":left" : ":right");
      }) == 0;
    }
    const SemPtr& won = first ? e1 : e2;
    const SemPtr& other = first ? e2 : e1;
    std::uint64_t k = won->n;
    SemPtr rest = other->n == kInfinity ? event_v(kInfinity, nullptr) : event_v(other->n - k, other->a);
    int base = first ? 0 : 2;
    env = bind(env, t->binds[base], won->a);
    env = bind(env, t->binds[base + 1], rest);
    SemPtr r = eval(t->subs[first ? 0 : 1], env, now + k);
    if (r->kind != K::Event) throw StuckTerm("select branch did not produce an event");
    return event_v(add_time(k, r->n), r->a);
  }

  SemPtr apply(const SemPtr& f, const SemPtr& arg, std::uint64_t now) {
    if (f->kind == K::Closure) return eval(f->term->subs[0], bind(f->env, f->term->binds[0], arg), now);
    if (f->kind == K::Builtin) return extend(f, arg, now);
    throw StuckTerm("application of a non-function");
  }

  SemPtr extend(const SemPtr& f, const SemPtr& arg, std::uint64_t now) {
    SemValue v = *f;
    v.args.push_back(arg);
    int linear = 0;
    for (const SemPtr& a : v.args)
      if (a->kind != K::Time && a->kind != K::Id) ++linear;
    if (linear < builtin_arity(v.literal)) return make(std::move(v));
    try {
      return run_builtin(v.literal, v.args, now);
    } catch (const CompatError& e) {
      throw CompatError(e.time + now, e.first, e.second);
    }
  }

  static SemPtr with_entry(const SemPtr& w, Command c) {
    if (w->kind != K::Widget) throw StuckTerm("expected a widget");
    std::vector<Logbook> fam = w->family;
    add_entry(fam[0].entries, Entry{0, c});
    return widget_v(std::move(fam));
  }

  std::uint64_t arrival(const std::string& what, std::uint64_t id, std::uint64_t now) {
    std::uint64_t slots = now >= horizon_ ? 0 : horizon_ - now;
    int c = chooser_.choose(static_cast<int>(slots + 1), [&](int c) {
      std::string at = static_cast<std::uint64_t>(c) < slots ? std::to_string(now + 1 + c) : "inf";
      return what + "#" + std::to_string(id) + "@" + at;
    });
    return static_cast<std::uint64_t>(c) < slots ? 1 + c : kInfinity;
  }

  SemPtr run_builtin(const std::string& name, const std::vector<SemPtr>& args, std::uint64_t now) {
    std::vector<SemPtr> idx, lin;
    for (const SemPtr& a : args) (a->kind == K::Time || a->kind == K::Id ? idx : lin).push_back(a);
    const SemPtr& x = lin[0];
    if (name == "newWidget") {
      std::uint64_t id = next_id_++;
      return pack_v(id_v(id), widget_v({Logbook{id, {}}}));
    }
    if (name == "dropWidget") return unit_v();
    if (name == "setColor") {
      auto c = parse_color(part(x, true)->literal);
      if (!c) throw StuckTerm("setColor expects a color");
      return with_entry(part(x, false), Command::set_color(*c));
    }
    if (name == "onClick" || name == "onKeypress") {
      bool click = name == "onClick";
      SemPtr w = with_entry(x, click ? Command::on_click() : Command::on_keypress());
      std::uint64_t k = arrival(click ? "click" : "keypress", w->family[0].id, now);
      SemPtr payload = click ? unit_v() : cart_v(std::string("'") + kEnumeratedKey + "'");
      return pair_v(w, event_v(k, payload));
    }
    if (name == "out") {
      if (x->kind == K::Never || x->n == kInfinity) return pack_v(time_v(kInfinity), at_v(kInfinity, nullptr));
      std::uint64_t t = now + x->n;
      return pack_v(time_v(t), at_v(t, x->a));
    }
    if (name == "into") {
      std::uint64_t t = x->index->n;
      if (t == kInfinity) return event_v(kInfinity, nullptr);
      return event_v(t - now, x->a->a);
    }
    if (name == "split") {
      if (x->kind != K::Widget || idx.size() < 2) throw StuckTerm("split expects a widget");
      std::uint64_t t = idx[1]->n;
      std::vector<PrefixBook> pre;
      std::vector<Logbook> rest;
      for (const Logbook& w : x->family) {
        if (t == kInfinity) {
          pre.push_back(PrefixBook{w.id, kInfinity, w.entries});
          rest.push_back(Logbook{w.id, {}});
        } else {
          auto [p, r] = split_sem(enter(t, now) - now, w);
          pre.push_back(std::move(p));
          rest.push_back(std::move(r));
        }
      }
      return pair_v(prefix_v(std::move(pre)), at_v(t, widget_v(std::move(rest))));
    }
    if (name == "join") {
      SemPtr p = part(x, false), d = part(x, true);
      if (p->kind != K::Prefix || d->kind != K::At) throw StuckTerm("join expects a prefix and a delayed widget");
      std::uint64_t t = d->n;
      std::vector<Logbook> fam;
      for (const PrefixBook& pb : p->prefixes) fam.push_back(Logbook{pb.id, pb.entries});
      if (t != kInfinity) {
        const SemPtr& w = d->a;
        for (const Logbook& l : w->family) {
          auto it = std::find_if(fam.begin(), fam.end(), [&](const Logbook& f) { return f.id == l.id; });
          if (it == fam.end()) it = fam.insert(fam.end(), Logbook{l.id, {}});
          *it = join_sem(t - now, PrefixBook{it->id, t - now, it->entries}, l);
        }
      }
      return widget_v(std::move(fam));
    }
    if (name == "vAttach") {
      const SemPtr& child = lin[1];
      if (child->kind != K::Widget) throw StuckTerm("vAttach expects widgets");
      SemPtr w = with_entry(x, Command::attach(child->family[0].id));
      std::vector<Logbook> fam = w->family;
      fam.insert(fam.end(), child->family.begin(), child->family.end());
      return widget_v(std::move(fam));
    }
    throw StuckTerm("unknown builtin '" + name + "'");
  }
};

void collect(const SemPtr& v, std::uint64_t offset, std::map<std::uint64_t, Logbook>& out) {
  if (!v || offset == kInfinity) return;
  auto add = [&](std::uint64_t id, const std::set<Entry>& entries) {
    auto [it, fresh] = out.try_emplace(id, Logbook{id, {}});
    for (const Entry& e : entries) add_entry(it->second.entries, Entry{e.time + offset, e.cmd});
  };
  switch (v->kind) {
    case K::Widget:
      for (const Logbook& l : v->family) add(l.id, l.entries);
      break;
    case K::Prefix:
      for (const PrefixBook& p : v->prefixes) add(p.id, p.entries);
      break;
    case K::Pair:
      collect(v->a, offset, out);
      collect(v->b, offset, out);
      break;
    case K::Event: collect(v->a, add_time(offset, v->n), out); break;
    case K::At: collect(v->a, v->n, out); break;
    case K::Pack:
    case K::Inl:
    case K::Inr: collect(v->a, offset, out); break;
    default: break;
  }
}

}  // namespace

LogbookSet final_logbooks(const SemPtr& v) {
  std::map<std::uint64_t, Logbook> m;
  collect(v, 0, m);
  LogbookSet s;
  for (auto& [id, l] : m) s.push_back(std::move(l));
  return s;
}

std::string show(const SemPtr& v) {
  if (!v) return "?";
  auto time = [](std::uint64_t t) { return t == kInfinity ? std::string("∞") : std::to_string(t); };
  switch (v->kind) {
    case K::Unit: return "⟨⟩";
    case K::Pair: return "(" + show(v->a) + ", " + show(v->b) + ")";
    case K::Closure:
    case K::TClosure:
    case K::Builtin: return "<fun>";
    case K::Thunk: return "<G>";
    case K::Event: return "evt@+" + time(v->n) + "(" + show(v->a) + ")";
    case K::At: return show(v->a) + " @ " + time(v->n);
    case K::Widget: return "widget " + std::to_string(v->family[0].id);
    case K::Prefix: return "prefix " + std::to_string(v->prefixes[0].id);
    case K::Cart: return v->literal;
    case K::Id: return "#" + std::to_string(v->n);
    case K::Time: return time(v->n);
    case K::Pack: return "pack(" + show(v->index) + ", " + show(v->a) + ")";
    case K::Inl: return "inl " + show(v->a);
    case K::Inr: return "inr " + show(v->a);
    case K::Never: return "never";
  }
  return "?";
}

OutcomeSet eval_denot(const SourceProgram& program, std::uint64_t horizon, const DenotOptions& options) {
  OutcomeSet set;
  set.horizon = horizon;
  std::vector<int> script;
  for (;;) {
    Chooser ch;
    ch.script = script;
    try {
      Evaluator ev(program, horizon, ch);
      SemPtr v = ev.entry();
      set.outcomes.push_back(Outcome{v, ch.labels, final_logbooks(v)});
    } catch (const CompatError& e) {
      ++set.dropped;
      if (!set.first_error) set.first_error = e;
    }
    if (set.outcomes.size() + set.dropped > options.max_outcomes)
      throw HorizonExceeded("more than " + std::to_string(options.max_outcomes) + " outcomes");
    std::size_t p = ch.made.size();
    while (p > 0 && ch.made[p - 1] + 1 >= ch.alternatives[p - 1]) --p;
    if (p == 0) break;
    script.assign(ch.made.begin(), ch.made.begin() + (p - 1));
    script.push_back(ch.made[p - 1] + 1);
  }
  if (set.outcomes.empty() && set.first_error) throw *set.first_error;
  return set;
}

nlohmann::json to_json(const OutcomeSet& s) {
  std::vector<std::string> rows;
  for (const Outcome& o : s.outcomes) {
    nlohmann::json j;
    j["choices"] = o.choices;
    j["logbooks"] = to_json(o.logbooks);
    j["value"] = show(o.value);
    rows.push_back(j.dump());
  }
  std::sort(rows.begin(), rows.end());
  nlohmann::json out;
  out["horizon"] = s.horizon;
  out["dropped"] = s.dropped;
  out["outcomes"] = nlohmann::json::array();
  for (const std::string& r : rows) out["outcomes"].push_back(nlohmann::json::parse(r));
  return out;
}

}  // namespace lw
