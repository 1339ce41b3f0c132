#include "lambda_widget/runtime.hpp"

#include <deque>
#include <functional>
#include <random>
#include <set>
#include <sstream>

namespace lw {

namespace {

struct RtValue;
using RtPtr = std::shared_ptr<const RtValue>;
struct RtEnv;
using RtEnvPtr = std::shared_ptr<const RtEnv>;

struct RtEnv {
  int id;
  RtPtr value;
  RtEnvPtr next;
};

struct TimeCell {
  std::optional<std::uint64_t> at;
  std::vector<std::function<void(std::uint64_t)>> waiters;
};

struct EventCell {
  std::optional<std::uint64_t> fired;
  RtPtr payload;
  std::vector<std::function<void()>> waiters;
};

/// A value that exists from `time` on: either computed from `body` at that
/// time or filled in by an arriving event.
struct AtCell {
  std::shared_ptr<TimeCell> time;
  std::optional<RtPtr> value;
  TermPtr body;
  RtEnvPtr env;
  bool running = false;
};

struct RtValue {
  enum class Kind {
    Unit, Pair, Closure, TClosure, Thunk, Builtin, Cart, Id, Time, Pack, Inl, Inr,
    Widget, Prefix, Event, At, Deferred,
  };

  Kind kind = Kind::Unit;
  RtPtr a, b;
  std::uint64_t n = 0;  // Id, Widget, Prefix
  int path = -1;        // Deferred: -1 whole value, 0/1 pair component
  std::shared_ptr<TimeCell> time;
  std::shared_ptr<EventCell> event;
  std::shared_ptr<AtCell> cell;
  TermPtr term;
  RtEnvPtr env;
  std::string literal;
  std::vector<RtPtr> args;
};

using K = RtValue::Kind;

RtPtr mk(RtValue v) { return std::make_shared<const RtValue>(std::move(v)); }

RtPtr unit_r() {
  static const RtPtr u = mk(RtValue{});
  return u;
}

RtPtr pair_r(RtPtr a, RtPtr b) {
  RtValue v;
  v.kind = K::Pair;
  v.a = std::move(a);
  v.b = std::move(b);
  return mk(std::move(v));
}

RtPtr cart_r(std::string lit) {
  RtValue v;
  v.kind = K::Cart;
  v.literal = std::move(lit);
  return mk(std::move(v));
}

RtPtr num_r(K k, std::uint64_t n) {
  RtValue v;
  v.kind = k;
  v.n = n;
  return mk(std::move(v));
}

RtPtr time_r(std::shared_ptr<TimeCell> c) {
  RtValue v;
  v.kind = K::Time;
  v.time = std::move(c);
  return mk(std::move(v));
}

RtPtr event_r(std::shared_ptr<EventCell> c) {
  RtValue v;
  v.kind = K::Event;
  v.event = std::move(c);
  return mk(std::move(v));
}

RtPtr at_r(std::shared_ptr<AtCell> c) {
  RtValue v;
  v.kind = K::At;
  v.cell = std::move(c);
  return mk(std::move(v));
}

RtPtr deferred_r(std::shared_ptr<AtCell> c, int path) {
  RtValue v;
  v.kind = K::Deferred;
  v.cell = std::move(c);
  v.path = path;
  return mk(std::move(v));
}

RtPtr pack_r(RtPtr witness, RtPtr body) {
  RtValue v;
  v.kind = K::Pack;
  v.a = std::move(witness);
  v.b = std::move(body);
  return mk(std::move(v));
}

std::shared_ptr<TimeCell> known(std::uint64_t t) {
  auto c = std::make_shared<TimeCell>();
  c->at = t;
  return c;
}

struct Handler {
  PendingHandler info;
  std::shared_ptr<EventCell> cell;
};

struct SelectState {
  TermPtr term;
  RtEnvPtr env;
  std::shared_ptr<EventCell> e1, e2, result;
  bool armed = false;
};

}  // namespace

class RuntimeState {
 public:
  RuntimeState(const SourceProgram& p, std::uint64_t horizon, TiePolicy policy)
      : program_(p), horizon_(horizon), policy_(policy), rng_(policy.seed) {}

  void start() {
    const Definition* d = program_.find(program_.entry);
    if (!d) throw StuckTerm("no entry point");
    RtPtr v = eval(d->body, nullptr, 0);
    if (d->type.lin && d->type.lin->kind == LinType::Kind::Lolli && d->type.lin->left->kind == LinType::Kind::Unit)
      v = apply(v, unit_r(), 0);
    settle();
  }

  void advance_to(std::uint64_t t) {
    while (!wheel_.empty() && wheel_.begin()->first < t && wheel_.begin()->first <= horizon_) {
      clock_ = wheel_.begin()->first;
      flush_wheel();
      settle();
    }
  }

  void deliver(const std::vector<Stimulus>& stims) {
    if (stims.empty()) return;
    std::uint64_t t = stims.front().time;
    if (t > horizon_) throw HorizonExceeded("stimulus at " + std::to_string(t) + " is beyond the horizon");
    if (t < clock_) throw TraceFormatError("stimulus at " + std::to_string(t) + " is in the past");
    advance_to(t);
    clock_ = t;
    std::vector<std::shared_ptr<EventCell>> targets;
    std::vector<RtPtr> payloads;
    for (const Stimulus& s : stims) {
      if (s.time != t) throw TraceFormatError("stimuli delivered together must share a time");
      bool any = false;
      for (Handler& h : handlers_) {
        if (h.cell->fired || h.info.widget != s.widget || h.info.kind != s.kind || h.info.registered >= t) continue;
        if (dropped_.count(s.widget)) continue;
        any = true;
        targets.push_back(h.cell);
        payloads.push_back(s.kind == Stimulus::Kind::Click ? unit_r() : cart_r(std::string("'") + s.key + "'"));
      }
      if (!any) throw TraceTargetInvalid(s);
    }
    for (std::size_t k = 0; k < targets.size(); ++k) fire(targets[k], t, payloads[k]);
    flush_wheel();
    settle();
  }

  RunResult result() const {
    RunResult r;
    r.logbooks = logbooks();
    r.choices = choices_;
    r.steps = steps_;
    for (const Handler& h : handlers_)
      if (!h.cell->fired) r.undelivered.push_back(h.info);
    return r;
  }

  LogbookSet logbooks() const {
    LogbookSet s;
    for (const auto& [id, l] : store_)
      if (!dropped_.count(id)) s.push_back(l);
    return s;
  }

  std::uint64_t clock() const { return clock_; }
  std::uint64_t horizon() const { return horizon_; }

 private:
  const SourceProgram& program_;
  std::uint64_t horizon_;
  TiePolicy policy_;
  std::mt19937_64 rng_;
  std::uint64_t clock_ = 0;
  std::uint64_t steps_ = 0;
  std::uint64_t next_id_ = 0;
  std::map<std::uint64_t, Logbook> store_;
  std::set<std::uint64_t> dropped_;
  std::vector<Handler> handlers_;
  std::deque<std::function<void()>> queue_;
  std::map<std::uint64_t, std::vector<std::function<void()>>> wheel_;
  std::vector<std::shared_ptr<SelectState>> armed_;
  std::vector<TieChoice> choices_;

  void flush_wheel() {
    auto it = wheel_.find(clock_);
    if (it == wheel_.end()) return;
    for (auto& f : it->second) queue_.push_back(std::move(f));
    wheel_.erase(it);
  }

  void settle() {
    for (;;) {
      while (!queue_.empty()) {
        auto f = std::move(queue_.front());
        queue_.pop_front();
        f();
      }
      if (armed_.empty()) break;
      auto sel = armed_.front();
      armed_.erase(armed_.begin());
      resolve(sel);
    }
  }

  void schedule(std::uint64_t t, std::function<void()> f) {
    if (t == clock_) {
      queue_.push_back(std::move(f));
    } else if (t < clock_) {
      throw StuckTerm("delay into the past");
    } else if (t <= horizon_) {
      wheel_[t].push_back(std::move(f));
    }
  }

  void when_resolved(const std::shared_ptr<TimeCell>& c, std::function<void(std::uint64_t)> f) {
    if (c->at) {
      f(*c->at);
    } else {
      c->waiters.push_back(std::move(f));
    }
  }

  void resolve_time(const std::shared_ptr<TimeCell>& c, std::uint64_t t) {
    c->at = t;
    auto ws = std::move(c->waiters);
    for (auto& w : ws) w(t);
  }

  void on_fire(const std::shared_ptr<EventCell>& e, std::function<void()> f) {
    if (e->fired) {
      f();
    } else {
      e->waiters.push_back(std::move(f));
    }
  }

  void fire(const std::shared_ptr<EventCell>& e, std::uint64_t t, RtPtr payload) {
    if (e->fired) throw StuckTerm("an event continuation fired twice");
    e->fired = t;
    e->payload = std::move(payload);
    auto ws = std::move(e->waiters);
    for (auto& w : ws) w();
  }

  std::shared_ptr<EventCell> fired_now(RtPtr payload) {
    auto e = std::make_shared<EventCell>();
    e->fired = clock_;
    e->payload = std::move(payload);
    return e;
  }

  void check_horizon(const std::shared_ptr<TimeCell>& c) {
    if (c->at && *c->at > horizon_)
      throw HorizonExceeded("time " + std::to_string(*c->at) + " is beyond horizon " + std::to_string(horizon_));
  }

  static RtEnvPtr bind(RtEnvPtr env, const Name& n, RtPtr v) {
    return std::make_shared<const RtEnv>(RtEnv{n.id, std::move(v), std::move(env)});
  }

  RtPtr force(const RtPtr& v) {
    if (v->kind != K::Deferred) return v;
    auto& c = *v->cell;
    if (!c.value) {
      if (!c.body || c.running || !c.time->at) throw StuckTerm("delayed value is not available yet");
      c.running = true;
      c.value = eval(c.body, c.env, *c.time->at);
    }
    RtPtr r = *c.value;
    if (v->path < 0) return r;
    if (r->kind != K::Pair) throw StuckTerm("expected a delayed pair");
    return v->path == 0 ? r->a : r->b;
  }

  RtPtr lookup(const RtEnvPtr& env, const Name& n) {
    for (const RtEnv* e = env.get(); e; e = e->next.get())
      if (e->id == n.id) return force(e->value);
    throw StuckTerm("unbound variable '" + n.text + "'");
  }

  RtPtr index(const IndexTerm& i, const RtEnvPtr& env, std::uint64_t now) {
    switch (i.kind) {
      case IndexTerm::Kind::Var: return lookup(env, i.var);
      case IndexTerm::Kind::TimeLit: return time_r(known(now + i.value));
      case IndexTerm::Kind::IdLit: return num_r(K::Id, i.value);
      case IndexTerm::Kind::Infinity: return time_r(std::make_shared<TimeCell>());
      case IndexTerm::Kind::Meta: break;
    }
    throw StuckTerm("unsolved index metavariable");
  }

  std::shared_ptr<TimeCell> time_of(const IndexTerm& i, const RtEnvPtr& env, std::uint64_t now) {
    RtPtr v = index(i, env, now);
    if (v->kind != K::Time) throw StuckTerm("expected a time index");
    check_horizon(v->time);
    return v->time;
  }

  /// Creates a cell computing `body` at time `t` and schedules it.
  std::shared_ptr<AtCell> delay(const std::shared_ptr<TimeCell>& t, const TermPtr& body, const RtEnvPtr& env) {
    auto cell = std::make_shared<AtCell>();
    cell->time = t;
    cell->body = body;
    cell->env = env;
    when_resolved(t, [this, cell](std::uint64_t at) {
      schedule(at, [this, cell] { force(deferred_r(cell, -1)); });
    });
    return cell;
  }

  static RtPtr part(const RtPtr& v, bool second) {
    if (v->kind != K::Pair) throw StuckTerm("expected a pair");
    return second ? v->b : v->a;
  }

  RtPtr eval(const TermPtr& t, RtEnvPtr env, std::uint64_t now) {
    ++steps_;
    switch (t->kind) {
      case TermKind::Var: return lookup(env, t->ref);
      case TermKind::Global: {
        const Definition* d = program_.find(t->ref.text);
        if (!d) throw StuckTerm("unknown definition '" + t->ref.text + "'");
        return eval(d->body, nullptr, now);
      }
      case TermKind::Builtin: {
        RtValue v;
        v.kind = K::Builtin;
        v.literal = t->ref.text;
        return mk(std::move(v));
      }
      case TermKind::Lam:
      case TermKind::TLam:
      case TermKind::GIntro: {
        RtValue v;
        v.kind = t->kind == TermKind::Lam ? K::Closure : t->kind == TermKind::TLam ? K::TClosure : K::Thunk;
        v.term = t;
        v.env = env;
        return mk(std::move(v));
      }
      case TermKind::App: {
        RtPtr f = eval(t->subs[0], env, now);
        return apply(f, eval(t->subs[1], env, now), now);
      }
      case TermKind::IndexApp: {
        RtPtr f = eval(t->subs[0], env, now);
        RtPtr i = index(t->index, env, now);
        if (f->kind == K::TClosure) return eval(f->term->subs[0], bind(f->env, f->term->binds[0], i), now);
        if (f->kind == K::Builtin) return extend(f, i, now);
        throw StuckTerm("index application of a non-abstraction");
      }
      case TermKind::Unit: return unit_r();
      case TermKind::Star: return cart_r("*");
      case TermKind::Color:
      case TermKind::Char: return cart_r(t->literal);
      case TermKind::LetUnit:
        eval(t->subs[0], env, now);
        return eval(t->subs[1], env, now);
      case TermKind::Pair: {
        RtPtr a = eval(t->subs[0], env, now);
        return pair_r(a, eval(t->subs[1], env, now));
      }
      case TermKind::LetPair: {
        RtPtr p = eval(t->subs[0], env, now);
        env = bind(env, t->binds[0], part(p, false));
        env = bind(env, t->binds[1], part(p, true));
        return eval(t->subs[1], env, now);
      }
      case TermKind::Evt: return event_r(fired_now(eval(t->subs[0], env, now)));
      case TermKind::LetEvt: {
        RtPtr e = eval(t->subs[0], env, now);
        if (e->kind != K::Event) throw StuckTerm("expected an event");
        auto src = e->event;
        auto out = std::make_shared<EventCell>();
        TermPtr body = t->subs[1];
        Name a = t->binds[0];
        on_fire(src, [this, src, out, body, a, env] {
          queue_.push_back([this, src, out, body, a, env] {
            RtPtr r = eval(body, bind(env, a, src->payload), *src->fired);
            if (r->kind != K::Event) throw StuckTerm("event body did not produce an event");
            auto inner = r->event;
            on_fire(inner, [this, inner, out] { fire(out, *inner->fired, inner->payload); });
          });
        });
        return event_r(out);
      }
      case TermKind::AtIntro: return at_r(delay(time_of(t->index, env, now), t->subs[0], env));
      case TermKind::LetAt: {
        RtPtr v = eval(t->subs[0], env, now);
        if (v->kind != K::At) throw StuckTerm("expected a delayed value");
        return eval(t->subs[1], bind(env, t->binds[0], deferred_r(v->cell, -1)), now);
      }
      case TermKind::LetUnitAt:
      case TermKind::LetPairAt: {
        auto cell = delay(time_of(t->index, env, now), t->subs[0], env);
        if (t->kind == TermKind::LetPairAt) {
          env = bind(env, t->binds[0], deferred_r(cell, 0));
          env = bind(env, t->binds[1], deferred_r(cell, 1));
        }
        return eval(t->subs[1], env, now);
      }
      case TermKind::RunG: {
        RtPtr g = eval(t->subs[0], env, now);
        if (g->kind != K::Thunk) throw StuckTerm("runG of a non-thunk");
        return eval(g->term->subs[0], g->env, now);
      }
      case TermKind::FIntro:
      case TermKind::Fold:
      case TermKind::Unfold:
      case TermKind::Annot: return eval(t->subs[0], env, now);
      case TermKind::LetF:
      case TermKind::Let: return eval(t->subs[1], bind(env, t->binds[0], eval(t->subs[0], env, now)), now);
      case TermKind::Pack: {
        RtPtr w = index(t->index, env, now);
        return pack_r(w, eval(t->subs[0], env, now));
      }
      case TermKind::LetPack: {
        RtPtr p = eval(t->subs[0], env, now);
        if (p->kind != K::Pack) throw StuckTerm("expected a package");
        env = bind(env, t->binds[0], p->a);
        env = bind(env, t->binds[1], p->b);
        return eval(t->subs[1], env, now);
      }
      case TermKind::Inl:
      case TermKind::Inr: {
        RtValue v;
        v.kind = t->kind == TermKind::Inl ? K::Inl : K::Inr;
        v.a = eval(t->subs[0], env, now);
        return mk(std::move(v));
      }
      case TermKind::Case: {
        RtPtr s = eval(t->subs[0], env, now);
        if (s->kind != K::Inl && s->kind != K::Inr) throw StuckTerm("case on a non-sum");
        bool left = s->kind == K::Inl;
        return eval(t->subs[left ? 1 : 2], bind(env, t->binds[left ? 0 : 1], s->a), now);
      }
      case TermKind::Select: {
        auto sel = std::make_shared<SelectState>();
        sel->term = t;
        sel->env = env;
        RtPtr e1 = lookup(env, t->refs[0]), e2 = lookup(env, t->refs[1]);
        if (e1->kind != K::Event || e2->kind != K::Event) throw StuckTerm("select on non-events");
        sel->e1 = e1->event;
        sel->e2 = e2->event;
        sel->result = std::make_shared<EventCell>();
        auto arm = [this, sel] {
          if (sel->armed) return;
          sel->armed = true;
          armed_.push_back(sel);
        };
        on_fire(sel->e1, arm);
        on_fire(sel->e2, arm);
        return event_r(sel->result);
      }
      case TermKind::LetPattern: break;
    }
    throw StuckTerm("no rule for term");
  }

  void resolve(const std::shared_ptr<SelectState>& sel) {
    bool f1 = sel->e1->fired.has_value(), f2 = sel->e2->fired.has_value();
    bool first = f1;
    if (f1 && f2 && *sel->e1->fired == *sel->e2->fired) {
      switch (policy_.kind) {
        case TiePolicy::Kind::Left: first = true; break;
        case TiePolicy::Kind::Right: first = false; break;
        case TiePolicy::Kind::Seeded: first = (rng_() & 1) == 0; break;
      }
      choices_.push_back(TieChoice{clock_, first});
    } else if (f1 && f2) {
      first = *sel->e1->fired < *sel->e2->fired;
    }
    const auto& won = first ? sel->e1 : sel->e2;
    const auto& other = first ? sel->e2 : sel->e1;
    const TermPtr& t = sel->term;
    int base = first ? 0 : 2;
    RtEnvPtr env = bind(sel->env, t->binds[base], won->payload);
    env = bind(env, t->binds[base + 1], event_r(other));
    RtPtr r = eval(t->subs[first ? 0 : 1], env, *won->fired);
    if (r->kind != K::Event) throw StuckTerm("select branch did not produce an event");
    auto inner = r->event;
    auto out = sel->result;
    on_fire(inner, [this, inner, out] { fire(out, *inner->fired, inner->payload); });
  }

  RtPtr apply(const RtPtr& f, const RtPtr& arg, std::uint64_t now) {
    if (f->kind == K::Closure) return eval(f->term->subs[0], bind(f->env, f->term->binds[0], arg), now);
    if (f->kind == K::Builtin) return extend(f, arg, now);
    throw StuckTerm("application of a non-function");
  }

  RtPtr extend(const RtPtr& f, const RtPtr& arg, std::uint64_t now) {
    RtValue v = *f;
    v.args.push_back(arg);
    int linear = 0;
    for (const RtPtr& a : v.args)
      if (a->kind != K::Time && a->kind != K::Id) ++linear;
    if (linear < (v.literal == "vAttach" ? 2 : 1)) return mk(std::move(v));
    return builtin(v.literal, v.args, now);
  }

  Logbook& book(const RtPtr& w) {
    if (w->kind != K::Widget) throw StuckTerm("expected a widget");
    return store_.at(w->n);
  }

  RtPtr builtin(const std::string& name, const std::vector<RtPtr>& args, std::uint64_t now) {
    std::vector<RtPtr> idx, lin;
    for (const RtPtr& a : args) (a->kind == K::Time || a->kind == K::Id ? idx : lin).push_back(a);
    const RtPtr& x = lin[0];
    if (name == "newWidget") {
      std::uint64_t id = next_id_++;
      store_[id] = Logbook{id, {}};
      return pack_r(num_r(K::Id, id), num_r(K::Widget, id));
    }
    if (name == "dropWidget") {
      book(x);
      dropped_.insert(x->n);
      return unit_r();
    }
    if (name == "setColor") {
      auto c = parse_color(part(x, true)->literal);
      if (!c) throw StuckTerm("setColor expects a color");
      RtPtr w = part(x, false);
      add_entry(book(w).entries, Entry{now, Command::set_color(*c)});
      return w;
    }
    if (name == "onClick" || name == "onKeypress") {
      bool click = name == "onClick";
      add_entry(book(x).entries, Entry{now, click ? Command::on_click() : Command::on_keypress()});
      auto cell = std::make_shared<EventCell>();
      handlers_.push_back(Handler{{x->n, click ? Stimulus::Kind::Click : Stimulus::Kind::Keypress, now}, cell});
      return pair_r(x, event_r(cell));
    }
    if (name == "out") {
      if (x->kind != K::Event) throw StuckTerm("out expects an event");
      auto e = x->event;
      auto t = std::make_shared<TimeCell>();
      auto cell = std::make_shared<AtCell>();
      cell->time = t;
      on_fire(e, [this, e, t, cell] {
        cell->value = e->payload;
        resolve_time(t, *e->fired);
      });
      return pack_r(time_r(t), at_r(cell));
    }
    if (name == "into") {
      if (x->kind != K::Pack || x->b->kind != K::At) throw StuckTerm("into expects a package");
      auto result = std::make_shared<EventCell>();
      RtPtr d = deferred_r(x->b->cell, -1);
      when_resolved(x->a->time, [this, result, d](std::uint64_t at) {
        schedule(at, [this, result, d, at] { fire(result, at, force(d)); });
      });
      return event_r(result);
    }
    if (name == "split") {
      if (idx.size() < 2 || idx[1]->kind != K::Time) throw StuckTerm("split expects a time");
      book(x);
      check_horizon(idx[1]->time);
      auto cell = std::make_shared<AtCell>();
      cell->time = idx[1]->time;
      cell->value = x;
      return pair_r(num_r(K::Prefix, x->n), at_r(cell));
    }
    if (name == "join") {
      RtPtr p = part(x, false);
      if (p->kind != K::Prefix) throw StuckTerm("join expects a prefix");
      return num_r(K::Widget, p->n);
    }
    if (name == "vAttach") {
      const RtPtr& child = lin[1];
      book(child);
      add_entry(book(x).entries, Entry{now, Command::attach(child->n)});
      return x;
    }
    throw StuckTerm("unknown builtin '" + name + "'");
  }
};

TraceTargetInvalid::TraceTargetInvalid(const Stimulus& s)
    : std::runtime_error("no pending " + std::string(s.kind == Stimulus::Kind::Click ? "click" : "keypress") +
                         " handler on widget " + std::to_string(s.widget) + " at time " + std::to_string(s.time)),
      stimulus(s) {}

EventTrace parse_trace(std::string_view jsonl) {
  EventTrace trace;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& why) {
      throw TraceFormatError("trace line " + std::to_string(lineno) + ": " + why);
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(e.what());
    }
    if (!j.is_object() || !j.contains("t") || !j.contains("widget") || !j.contains("kind")) fail("missing field");
    if (!j["t"].is_number_unsigned() || !j["widget"].is_number_unsigned()) fail("t and widget must be naturals");
    Stimulus s;
    s.time = j["t"].get<std::uint64_t>();
    s.widget = j["widget"].get<std::uint64_t>();
    std::string kind = j["kind"].is_string() ? j["kind"].get<std::string>() : "";
    if (kind == "click") {
      s.kind = Stimulus::Kind::Click;
    } else if (kind == "keypress") {
      s.kind = Stimulus::Kind::Keypress;
      if (!j.contains("char") || !j["char"].is_string() || j["char"].get<std::string>().size() != 1)
        fail("keypress needs a single char");
      s.key = j["char"].get<std::string>()[0];
    } else {
      fail("unknown kind '" + kind + "'");
    }
    if (!trace.empty() && s.time < trace.back().time) fail("times must be nondecreasing");
    trace.push_back(s);
  }
  return trace;
}

nlohmann::json to_json(const Stimulus& s) {
  nlohmann::json j{{"t", s.time}, {"widget", s.widget}};
  if (s.kind == Stimulus::Kind::Click) {
    j["kind"] = "click";
  } else {
    j["kind"] = "keypress";
    j["char"] = std::string(1, s.key);
  }
  return j;
}

nlohmann::json to_json(const RunResult& r) {
  nlohmann::json j;
  j["logbooks"] = to_json(r.logbooks);
  j["choices"] = nlohmann::json::array();
  for (const TieChoice& c : r.choices) j["choices"].push_back({c.time, c.left ? "left" : "right"});
  j["steps"] = r.steps;
  j["undelivered"] = nlohmann::json::array();
  for (const PendingHandler& h : r.undelivered)
    j["undelivered"].push_back({{"kind", h.kind == Stimulus::Kind::Click ? "click" : "keypress"},
                                {"registered", h.registered},
                                {"widget", h.widget}});
  return j;
}

Runtime::Runtime(const SourceProgram& program, std::uint64_t horizon, TiePolicy policy)
    : state_(std::make_unique<RuntimeState>(program, horizon, policy)) {
  state_->start();
}

Runtime::~Runtime() = default;

void Runtime::advance_to(std::uint64_t t) { state_->advance_to(t); }
void Runtime::deliver(const std::vector<Stimulus>& simultaneous) { state_->deliver(simultaneous); }
void Runtime::finish() { state_->advance_to(state_->horizon() + 1); }
std::uint64_t Runtime::clock() const { return state_->clock(); }
RunResult Runtime::result() const { return state_->result(); }
LogbookSet Runtime::logbooks() const { return state_->logbooks(); }

RunResult run(const SourceProgram& program, const EventTrace& trace, std::uint64_t horizon, TiePolicy policy) {
  Runtime rt(program, horizon, policy);
  for (std::size_t k = 0; k < trace.size();) {
    std::size_t e = k;
    while (e < trace.size() && trace[e].time == trace[k].time) ++e;
    rt.deliver(std::vector<Stimulus>(trace.begin() + k, trace.begin() + e));
    k = e;
  }
  rt.finish();
  return rt.result();
}

}  // namespace lw
