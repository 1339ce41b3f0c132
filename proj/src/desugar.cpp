#include "lambda_widget/desugar.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "lambda_widget/api.hpp"

namespace lw {

DesugarError::DesugarError(Span s, const std::string& message)
    : std::runtime_error(std::to_string(s.line) + ":" + std::to_string(s.col) + ": " + message), span(s) {}

namespace {

int max_meta(const TermPtr& t) {
  int m = t->index.is_meta() ? t->index.meta : -1;
  for (const auto& s : t->subs) m = std::max(m, max_meta(s));
  return m;
}

void pattern_names(const PatternPtr& p, std::vector<const Pattern*>& out) {
  if (p->kind == Pattern::Kind::Var || p->kind == Pattern::Kind::Pack) out.push_back(p.get());
  for (const auto& s : p->subs) pattern_names(s, out);
}

class Desugarer {
 public:
  Desugarer(const SourceProgram* program, int next_meta) : program_(program), next_meta_(next_meta) {}

  TermPtr go(const TermPtr& t) {
    switch (t->kind) {
      case TermKind::App:
      case TermKind::IndexApp:
      case TermKind::Builtin:
      case TermKind::Global: return spine(t);
      case TermKind::TLam: index_ids_.insert(t->binds[0].id); break;
      case TermKind::LetPack: index_ids_.insert(t->binds[0].id); break;
      case TermKind::LetPair: {
        TermPtr scrut = go(t->subs[0]);
        auto n = copy(t);
        n->subs[0] = scrut;
        if (returns_exists(scrut)) {
          n->kind = TermKind::LetPack;
          index_ids_.insert(t->binds[0].id);
        }
        n->subs[1] = go(t->subs[1]);
        return n;
      }
      case TermKind::LetPattern: {
        check_binders(t->pattern);
        TermPtr scrut = go(t->subs[0]);
        const TermPtr& body = t->subs[1];
        return lower(t->pattern, scrut, t->span, [&] { return go(body); }, true);
      }
      default: break;
    }
    if (t->subs.empty()) return t;
    auto n = copy(t);
    for (auto& s : n->subs) s = go(s);
    return n;
  }

  bool returns_exists(const TermPtr& t) const {
    if (t->kind == TermKind::Annot) return t->lin_annot && t->lin_annot->kind == LinType::Kind::Exists;
    int args = 0;
    const Term* h = t.get();
    while (h->kind == TermKind::App || h->kind == TermKind::IndexApp) {
      if (h->kind == TermKind::App) ++args;
      h = h->subs[0].get();
    }
    LinTypePtr ty = head_type(*h);
    if (!ty) return false;
    while (ty->kind == LinType::Kind::Forall) ty = ty->left;
    for (; args > 0; --args) {
      if (ty->kind != LinType::Kind::Lolli) return false;
      ty = ty->right;
    }
    return ty->kind == LinType::Kind::Exists;
  }

 private:
  const SourceProgram* program_;
  int next_meta_;
  std::set<int> index_ids_;

  static std::shared_ptr<Term> copy(const TermPtr& t) { return std::make_shared<Term>(*t); }

  static std::shared_ptr<Term> node(TermKind k, Span s, std::vector<TermPtr> subs) {
    auto t = std::make_shared<Term>();
    t->kind = k;
    t->span = s;
    t->subs = std::move(subs);
    return t;
  }

  static TermPtr var(const Name& n, Span s) {
    auto t = node(TermKind::Var, s, {});
    t->ref = n;
    return t;
  }

  static Name fresh() {
    int id = fresh_id();
    return Name{"_d" + std::to_string(id), id};
  }

  LinTypePtr head_type(const Term& h) const {
    if (h.kind == TermKind::Builtin) return builtin_type(h.ref.text);
    if (h.kind == TermKind::Global && program_)
      if (const Definition* d = program_->find(h.ref.text)) return d->type.lin;
    return nullptr;
  }

  TermPtr spine(const TermPtr& t) {
    struct Arg {
      bool is_index;
      IndexTerm index;
      TermPtr term;
      Span span;
    };
    std::vector<Arg> args;
    const TermPtr* h = &t;
    while ((*h)->kind == TermKind::App || (*h)->kind == TermKind::IndexApp) {
      const Term& n = **h;
      if (n.kind == TermKind::IndexApp) {
        args.push_back({true, n.index, nullptr, n.span});
      } else if (n.subs[1]->kind == TermKind::Var && index_ids_.count(n.subs[1]->ref.id)) {
        args.push_back({true, IndexTerm::variable(n.subs[1]->ref), nullptr, n.span});
      } else {
        args.push_back({false, {}, n.subs[1], n.span});
      }
      h = &n.subs[0];
    }
    std::reverse(args.begin(), args.end());
    TermPtr head = *h;
    if (head->kind != TermKind::Builtin && head->kind != TermKind::Global) head = go(head);
    if (LinTypePtr ty = head_type(*head)) {
      int want = leading_foralls(ty);
      int have = 0;
      while (have < static_cast<int>(args.size()) && args[have].is_index) ++have;
      std::vector<Arg> metas;
      for (int k = have; k < want; ++k) metas.push_back({true, IndexTerm::metavar(next_meta_++), nullptr, head->span});
      args.insert(args.begin() + have, metas.begin(), metas.end());
    }
    TermPtr out = head;
    for (auto& a : args) {
      if (a.is_index) {
        auto n = node(TermKind::IndexApp, a.span, {out});
        n->index = a.index;
        out = n;
      } else {
        out = node(TermKind::App, a.span, {out, go(a.term)});
      }
    }
    return out;
  }

  void check_binders(const PatternPtr& p) const {
    std::vector<const Pattern*> names;
    pattern_names(p, names);
    for (std::size_t i = 0; i < names.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (names[i]->name.text == names[j]->name.text && names[i]->name.text != "_")
          throw DesugarError(names[i]->span, "variable '" + names[i]->name.text + "' bound twice in pattern");
  }

  using Cont = std::function<TermPtr()>;

  static TermPtr let(TermKind k, Span s, std::vector<Name> binds, TermPtr scrut, TermPtr body) {
    auto t = node(k, s, {std::move(scrut), std::move(body)});
    t->binds = std::move(binds);
    return t;
  }

  static bool is_var(const PatternPtr& p) { return p->kind == Pattern::Kind::Var; }

  // Binds each component of a pair: variables directly, anything else through
  // a fresh name that `bind_rest` destructures afterwards.
  static Name component_name(const PatternPtr& p) { return is_var(p) ? p->name : fresh(); }

  TermPtr lower(const PatternPtr& p, TermPtr scrut, Span s, const Cont& k, bool outer) {
    using PK = Pattern::Kind;
    switch (p->kind) {
      case PK::Var: return let(TermKind::Let, s, {p->name}, scrut, k());
      case PK::Unit: return let(TermKind::LetUnit, s, {}, scrut, k());
      case PK::Evt: {
        if (!outer) throw DesugarError(p->span, "an evt pattern must be the outermost pattern of a let");
        const PatternPtr& sub = p->subs[0];
        if (is_var(sub)) return let(TermKind::LetEvt, s, {sub->name}, scrut, k());
        Name v = fresh();
        return let(TermKind::LetEvt, s, {v}, scrut, lower(sub, var(v, s), s, k, false));
      }
      case PK::F: {
        const PatternPtr& sub = p->subs[0];
        if (!is_var(sub)) throw DesugarError(sub->span, "an F pattern must bind a variable");
        return let(TermKind::LetF, s, {sub->name}, scrut, k());
      }
      case PK::Pack: return lower_pack(p->name, p->subs[0], scrut, s, k);
      case PK::Pair: {
        const PatternPtr& a = p->subs[0];
        const PatternPtr& b = p->subs[1];
        if (is_var(a) && returns_exists(scrut)) return lower_pack(a->name, b, scrut, s, k);
        Name na = component_name(a), nb = component_name(b);
        return let(TermKind::LetPair, s, {na, nb}, scrut, [&] {
          Cont inner = [&] { return is_var(b) ? k() : lower(b, var(nb, s), s, k, false); };
          return is_var(a) ? inner() : lower(a, var(na, s), s, inner, false);
        }());
      }
      case PK::At: return lower_at(p, scrut, s, k, outer);
    }
    throw DesugarError(p->span, "unsupported pattern");
  }

  TermPtr lower_pack(const Name& k_name, const PatternPtr& sub, TermPtr scrut, Span s, const Cont& k) {
    index_ids_.insert(k_name.id);
    if (is_var(sub)) return let(TermKind::LetPack, s, {k_name, sub->name}, scrut, k());
    Name v = fresh();
    return let(TermKind::LetPack, s, {k_name, v}, scrut, lower(sub, var(v, s), s, k, false));
  }

  TermPtr lower_at(const PatternPtr& p, TermPtr scrut, Span s, const Cont& k, bool outer) {
    using PK = Pattern::Kind;
    const PatternPtr& sub = p->subs[0];
    const IndexTerm& tau = p->time;
    if (is_var(sub)) {
      auto t = let(TermKind::LetAt, s, {sub->name}, scrut, k());
      std::const_pointer_cast<Term>(t)->index = tau;
      return t;
    }
    if (outer && (sub->kind == PK::Unit || sub->kind == PK::Pair)) return under_at(sub, tau, scrut, s, k);
    if (sub->kind != PK::Unit && sub->kind != PK::Pair)
      throw DesugarError(p->span, "only variables, () and pairs may appear under @ in a pattern");
    Name v = fresh();
    auto t = std::const_pointer_cast<Term>(let(TermKind::LetAt, s, {v}, scrut, under_at(sub, tau, var(v, s), s, k)));
    t->index = tau;
    return t;
  }

  // `scrut` is checked under the delay τ.
  TermPtr under_at(const PatternPtr& p, const IndexTerm& tau, TermPtr scrut, Span s, const Cont& k) {
    using PK = Pattern::Kind;
    std::shared_ptr<Term> t;
    if (p->kind == PK::Unit) {
      t = std::const_pointer_cast<Term>(let(TermKind::LetUnitAt, s, {}, scrut, k()));
    } else if (p->kind == PK::Pair) {
      const PatternPtr& a = p->subs[0];
      const PatternPtr& b = p->subs[1];
      for (const auto& c : {a, b})
        if (!is_var(c) && c->kind != PK::Unit && c->kind != PK::Pair)
          throw DesugarError(c->span, "only variables, () and pairs may appear under @ in a pattern");
      Name na = component_name(a), nb = component_name(b);
      Cont inner = [&] { return is_var(b) ? k() : under_at(b, tau, var(nb, s), s, k); };
      TermPtr body = is_var(a) ? inner() : under_at(a, tau, var(na, s), s, inner);
      t = std::const_pointer_cast<Term>(let(TermKind::LetPairAt, s, {na, nb}, scrut, body));
    } else {
      throw DesugarError(p->span, "only variables, () and pairs may appear under @ in a pattern");
    }
    t->index = tau;
    return t;
  }
};

}  // namespace

SourceProgram desugar(const SourceProgram& program) {
  int next_meta = 0;
  for (const auto& d : program.definitions) next_meta = std::max(next_meta, max_meta(d.body) + 1);
  SourceProgram out = program;
  for (auto& d : out.definitions) {
    Desugarer ds(&program, next_meta);
    TermPtr body = d.body;
    if (!d.implicit_indices.empty()) {
      LinTypePtr ty = d.type.lin;
      std::vector<Sort> sorts;
      for (std::size_t k = 0; k < d.implicit_indices.size(); ++k, ty = ty->left) sorts.push_back(ty->sort);
      for (std::size_t k = d.implicit_indices.size(); k-- > 0;) {
        auto t = std::make_shared<Term>();
        t->kind = TermKind::TLam;
        t->span = body->span;
        t->binds = {d.implicit_indices[k]};
        t->sort = sorts[k];
        t->subs = {body};
        body = t;
      }
      d.implicit_indices.clear();
    }
    d.body = ds.go(body);
    next_meta = std::max(next_meta, max_meta(d.body) + 1);
  }
  return out;
}

TermPtr desugar_term(const TermPtr& term, const SourceProgram* program) {
  Desugarer ds(program, max_meta(term) + 1);
  return ds.go(term);
}

}  // namespace lw
