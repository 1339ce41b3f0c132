#include "lambda_widget/subst.hpp"

#include <functional>
#include <set>

namespace lw {

namespace {

// Rebuilds a type, mapping index terms and type variables. Binders whose id is
// in `avoid` are renamed first.
struct TypeMap {
  std::function<IndexTerm(const IndexTerm&)> index;
  std::function<LinTypePtr(const LinTypePtr&)> var;  // nullptr result keeps the node
  std::set<int> avoid;
  IndexSubst renames;

  IndexTerm idx(const IndexTerm& i) {
    if (i.is_var()) {
      auto it = renames.find(i.var.id);
      if (it != renames.end()) return it->second;
    }
    return index ? index(i) : i;
  }

  LinTypePtr lin(const LinTypePtr& t) {
    using K = LinType::Kind;
    auto n = std::make_shared<LinType>(*t);
    switch (t->kind) {
      case K::Unit:
      case K::Meta: return t;
      case K::Var:
        if (var)
          if (LinTypePtr r = var(t)) return r;
        return t;
      case K::Tensor:
      case K::Lolli:
      case K::Sum:
        n->left = lin(t->left);
        n->right = lin(t->right);
        return n;
      case K::Diamond:
      case K::Nu: n->left = lin(t->left); return n;
      case K::At:
        n->left = lin(t->left);
        n->index = idx(t->index);
        return n;
      case K::F: n->cart = cart(t->cart); return n;
      case K::Forall:
      case K::Exists:
        if (avoid.count(t->binder.id)) {
          Name fresh{t->binder.text, fresh_id()};
          renames[t->binder.id] = IndexTerm::variable(fresh);
          n->binder = fresh;
        }
        n->left = lin(t->left);
        return n;
      case K::Widget: n->index = idx(t->index); return n;
      case K::Prefix:
        n->index = idx(t->index);
        n->index2 = idx(t->index2);
        return n;
    }
    return t;
  }

  CartTypePtr cart(const CartTypePtr& t) {
    if (t->kind == CartType::Kind::Unit || t->kind == CartType::Kind::Base) return t;
    auto n = std::make_shared<CartType>(*t);
    if (t->kind == CartType::Kind::G) {
      n->body = lin(t->body);
    } else {
      n->dom = cart(t->dom);
      n->cod = cart(t->cod);
    }
    return n;
  }
};

std::set<int> range_vars(const IndexSubst& z) {
  std::set<int> out;
  for (auto& [k, v] : z)
    if (v.is_var()) out.insert(v.var.id);
  return out;
}

TypeMap index_map(const IndexSubst& z) {
  TypeMap m;
  m.index = [&z](const IndexTerm& i) {
    if (!i.is_var()) return i;
    auto it = z.find(i.var.id);
    return it == z.end() ? i : it->second;
  };
  m.avoid = range_vars(z);
  return m;
}

std::shared_ptr<Term> clone(const TermPtr& t) { return std::make_shared<Term>(*t); }

PatternPtr subst_pattern(const IndexSubst& z, const PatternPtr& p) {
  if (!p) return p;
  auto n = std::make_shared<Pattern>(*p);
  if (p->kind == Pattern::Kind::At) n->time = subst_index(z, p->time);
  for (auto& s : n->subs) s = subst_pattern(z, s);
  return n;
}

}  // namespace

IndexTerm subst_index(const IndexSubst& z, const IndexTerm& i) {
  if (!i.is_var()) return i;
  auto it = z.find(i.var.id);
  return it == z.end() ? i : it->second;
}

LinTypePtr subst_index(const IndexSubst& z, const LinTypePtr& t) {
  if (z.empty() || !t) return t;
  return index_map(z).lin(t);
}

CartTypePtr subst_index(const IndexSubst& z, const CartTypePtr& t) {
  if (z.empty() || !t) return t;
  return index_map(z).cart(t);
}

TermPtr subst_index(const IndexSubst& z, const TermPtr& t) {
  if (z.empty()) return t;
  std::set<int> avoid = range_vars(z);
  auto n = clone(t);
  IndexSubst inner = z;
  // Index binders of the term: Λ and unpacking. Rename if captured.
  bool binds_index = t->kind == TermKind::TLam || t->kind == TermKind::LetPack;
  if (binds_index && avoid.count(t->binds[0].id)) {
    Name fresh{t->binds[0].text, fresh_id()};
    inner[t->binds[0].id] = IndexTerm::variable(fresh);
    n->binds[0] = fresh;
  }
  switch (t->kind) {
    case TermKind::IndexApp:
    case TermKind::AtIntro:
    case TermKind::LetAt:
    case TermKind::LetUnitAt:
    case TermKind::LetPairAt:
    case TermKind::Pack: n->index = subst_index(z, t->index); break;
    default: break;
  }
  n->lin_annot = subst_index(z, t->lin_annot);
  n->cart_annot = subst_index(z, t->cart_annot);
  n->pattern = subst_pattern(z, t->pattern);
  for (std::size_t k = 0; k < n->subs.size(); ++k) {
    // The scrutinee of an unpacking is outside the binder's scope.
    bool scoped = !(t->kind == TermKind::LetPack && k == 0);
    n->subs[k] = subst_index(scoped ? inner : z, t->subs[k]);
  }
  return n;
}

LinTypePtr subst_type_var(const LinTypePtr& t, int var_id, const LinTypePtr& r) {
  TypeMap m;
  m.var = [&](const LinTypePtr& v) -> LinTypePtr { return v->binder.id == var_id ? r : nullptr; };
  return m.lin(t);
}

LinTypePtr subst_atoms(const LinTypePtr& t, const std::map<std::string, LinTypePtr>& atoms) {
  if (atoms.empty()) return t;
  TypeMap m;
  m.var = [&](const LinTypePtr& v) -> LinTypePtr {
    if (v->binder.id >= 0) return nullptr;
    auto it = atoms.find(v->binder.text);
    return it == atoms.end() ? nullptr : it->second;
  };
  return m.lin(t);
}

CartTypePtr subst_atoms(const CartTypePtr& t, const std::map<std::string, LinTypePtr>& atoms) {
  if (atoms.empty()) return t;
  TypeMap m;
  m.var = [&](const LinTypePtr& v) -> LinTypePtr {
    if (v->binder.id >= 0) return nullptr;
    auto it = atoms.find(v->binder.text);
    return it == atoms.end() ? nullptr : it->second;
  };
  return m.cart(t);
}

namespace {

void free_term_vars(const TermPtr& t, std::set<int>& out) {
  if (t->kind == TermKind::Var) out.insert(t->ref.id);
  for (const auto& r : t->refs) out.insert(r.id);
  for (const auto& s : t->subs) free_term_vars(s, out);
}

// Which subterms each binder scopes over.
std::vector<std::size_t> scope_of(const Term& t, std::size_t bind) {
  switch (t.kind) {
    case TermKind::Lam:
    case TermKind::TLam: return {0};
    case TermKind::Select: return {bind < 2 ? std::size_t{0} : std::size_t{1}};
    case TermKind::Case: return {bind + 1};
    default: return {1};
  }
}

struct TermSubst {
  int x;
  TermPtr s;
  std::set<int> fv;

  TermPtr go(const TermPtr& t) {
    if (t->kind == TermKind::Var) return t->ref.id == x ? s : t;
    auto n = clone(t);
    for (auto& r : n->refs)
      if (r.id == x && s->kind == TermKind::Var) r = s->ref;
    std::vector<bool> blocked(t->subs.size(), false);
    for (std::size_t b = 0; b < t->binds.size(); ++b) {
      const Name& name = t->binds[b];
      if (name.id == x) {
        for (auto k : scope_of(*t, b)) blocked[k] = true;
      } else if (fv.count(name.id)) {
        Name fresh{name.text, fresh_id()};
        auto v = std::make_shared<Term>();
        v->kind = TermKind::Var;
        v->span = t->span;
        v->ref = fresh;
        for (auto k : scope_of(*t, b)) {
          TermSubst rename{name.id, v, {fresh.id}};
          n->subs[k] = rename.go(n->subs[k]);
        }
        n->binds[b] = fresh;
      }
    }
    for (std::size_t k = 0; k < n->subs.size(); ++k)
      if (!blocked[k]) n->subs[k] = go(n->subs[k]);
    return n;
  }
};

}  // namespace

TermPtr subst_term(TermSubstKind, const Name& x, const TermPtr& s, const TermPtr& t) {
  TermSubst ts{x.id, s, {}};
  free_term_vars(s, ts.fv);
  return ts.go(t);
}

}  // namespace lw
