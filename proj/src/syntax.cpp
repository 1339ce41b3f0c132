#include "lambda_widget/syntax.hpp"

#include <algorithm>
#include <atomic>

namespace lw {

const char* sort_name(Sort s) { return s == Sort::Id ? "Id" : "Time"; }

int fresh_id() {
  static std::atomic<int> next{1};
  return next.fetch_add(1);
}

bool operator==(const IndexTerm& a, const IndexTerm& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case IndexTerm::Kind::Var: return a.var.same(b.var);
    case IndexTerm::Kind::TimeLit:
    case IndexTerm::Kind::IdLit: return a.value == b.value;
    case IndexTerm::Kind::Infinity: return true;
    case IndexTerm::Kind::Meta: return a.meta == b.meta;
  }
  return false;
}

namespace ty {
namespace {
template <typename T>
std::shared_ptr<T> make() {
  return std::make_shared<T>();
}
}  // namespace

CartTypePtr one() {
  static const CartTypePtr u = make<CartType>();
  return u;
}
CartTypePtr arrow(CartTypePtr a, CartTypePtr b) {
  auto t = make<CartType>();
  t->kind = CartType::Kind::Arrow;
  t->dom = std::move(a);
  t->cod = std::move(b);
  return t;
}
CartTypePtr g(LinTypePtr a) {
  auto t = make<CartType>();
  t->kind = CartType::Kind::G;
  t->body = std::move(a);
  return t;
}
CartTypePtr base(std::string name) {
  auto t = make<CartType>();
  t->kind = CartType::Kind::Base;
  t->base = std::move(name);
  return t;
}

LinTypePtr unit() {
  static const LinTypePtr u = make<LinType>();
  return u;
}
namespace {
LinTypePtr binary(LinType::Kind k, LinTypePtr a, LinTypePtr b) {
  auto t = make<LinType>();
  t->kind = k;
  t->left = std::move(a);
  t->right = std::move(b);
  return t;
}
LinTypePtr unary(LinType::Kind k, LinTypePtr a) {
  auto t = make<LinType>();
  t->kind = k;
  t->left = std::move(a);
  return t;
}
}  // namespace
LinTypePtr tensor(LinTypePtr a, LinTypePtr b) { return binary(LinType::Kind::Tensor, a, b); }
LinTypePtr lolli(LinTypePtr a, LinTypePtr b) { return binary(LinType::Kind::Lolli, a, b); }
LinTypePtr sum(LinTypePtr a, LinTypePtr b) { return binary(LinType::Kind::Sum, a, b); }
LinTypePtr diamond(LinTypePtr a) { return unary(LinType::Kind::Diamond, a); }
LinTypePtr at(LinTypePtr a, IndexTerm t) {
  auto r = make<LinType>();
  r->kind = LinType::Kind::At;
  r->left = std::move(a);
  r->index = std::move(t);
  return r;
}
LinTypePtr f(CartTypePtr x) {
  auto r = make<LinType>();
  r->kind = LinType::Kind::F;
  r->cart = std::move(x);
  return r;
}
LinTypePtr forall(Name i, Sort s, LinTypePtr a) {
  auto r = unary(LinType::Kind::Forall, a);
  auto m = std::const_pointer_cast<LinType>(r);
  m->binder = std::move(i);
  m->sort = s;
  return r;
}
LinTypePtr exists(Name i, Sort s, LinTypePtr a) {
  auto r = unary(LinType::Kind::Exists, a);
  auto m = std::const_pointer_cast<LinType>(r);
  m->binder = std::move(i);
  m->sort = s;
  return r;
}
LinTypePtr widget(IndexTerm i) {
  auto r = make<LinType>();
  r->kind = LinType::Kind::Widget;
  r->index = std::move(i);
  return r;
}
LinTypePtr prefix(IndexTerm i, IndexTerm t) {
  auto r = make<LinType>();
  r->kind = LinType::Kind::Prefix;
  r->index = std::move(i);
  r->index2 = std::move(t);
  return r;
}
LinTypePtr nu(Name a, LinTypePtr body) {
  auto r = make<LinType>();
  r->kind = LinType::Kind::Nu;
  r->binder = std::move(a);
  r->left = std::move(body);
  return r;
}
LinTypePtr var(Name a) {
  auto r = make<LinType>();
  r->kind = LinType::Kind::Var;
  r->binder = std::move(a);
  return r;
}
LinTypePtr meta(int m) {
  auto r = make<LinType>();
  r->kind = LinType::Kind::Meta;
  r->meta = m;
  return r;
}
LinTypePtr stream(LinTypePtr elem) {
  Name alpha{"α", fresh_id()};
  return nu(alpha, diamond(tensor(std::move(elem), var(alpha))));
}
}  // namespace ty

namespace {

struct BinderMap {
  std::vector<std::pair<int, int>> pairs;

  // 1: both bound and matching, 0: both free, -1: mismatch
  int lookup(const Name& a, const Name& b) const {
    for (auto it = pairs.rbegin(); it != pairs.rend(); ++it) {
      bool la = a.id >= 0 && it->first == a.id;
      bool lb = b.id >= 0 && it->second == b.id;
      if (la || lb) return (la && lb) ? 1 : -1;
    }
    return 0;
  }
};

bool index_eq(const IndexTerm& a, const IndexTerm& b, const BinderMap& m) {
  if (a.kind != b.kind) return false;
  if (a.kind != IndexTerm::Kind::Var) return a == b;
  int r = m.lookup(a.var, b.var);
  if (r != 0) return r == 1;
  return a.var.same(b.var);
}

bool lin_eq(const LinTypePtr& a, const LinTypePtr& b, BinderMap& m);

bool cart_eq(const CartTypePtr& a, const CartTypePtr& b, BinderMap& m) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case CartType::Kind::Unit: return true;
    case CartType::Kind::Arrow: return cart_eq(a->dom, b->dom, m) && cart_eq(a->cod, b->cod, m);
    case CartType::Kind::G: return lin_eq(a->body, b->body, m);
    case CartType::Kind::Base: return a->base == b->base;
  }
  return false;
}

bool lin_eq(const LinTypePtr& a, const LinTypePtr& b, BinderMap& m) {
  if (a.get() == b.get() && m.pairs.empty()) return true;
  if (a->kind != b->kind) return false;
  using K = LinType::Kind;
  switch (a->kind) {
    case K::Unit: return true;
    case K::Tensor:
    case K::Lolli:
    case K::Sum: return lin_eq(a->left, b->left, m) && lin_eq(a->right, b->right, m);
    case K::Diamond: return lin_eq(a->left, b->left, m);
    case K::At: return index_eq(a->index, b->index, m) && lin_eq(a->left, b->left, m);
    case K::F: return cart_eq(a->cart, b->cart, m);
    case K::Forall:
    case K::Exists: {
      if (a->sort != b->sort) return false;
      m.pairs.emplace_back(a->binder.id, b->binder.id);
      bool r = lin_eq(a->left, b->left, m);
      m.pairs.pop_back();
      return r;
    }
    case K::Nu: {
      m.pairs.emplace_back(a->binder.id, b->binder.id);
      bool r = lin_eq(a->left, b->left, m);
      m.pairs.pop_back();
      return r;
    }
    case K::Widget: return index_eq(a->index, b->index, m);
    case K::Prefix: return index_eq(a->index, b->index, m) && index_eq(a->index2, b->index2, m);
    case K::Var: {
      int r = m.lookup(a->binder, b->binder);
      if (r != 0) return r == 1;
      return a->binder.same(b->binder);
    }
    case K::Meta: return a->meta == b->meta;
  }
  return false;
}

}  // namespace

bool alpha_eq(const LinTypePtr& a, const LinTypePtr& b) {
  BinderMap m;
  return lin_eq(a, b, m);
}

bool alpha_eq(const CartTypePtr& a, const CartTypePtr& b) {
  BinderMap m;
  return cart_eq(a, b, m);
}

namespace {

bool optional_types_eq(const Term& a, const Term& b, BinderMap& m) {
  if ((a.lin_annot == nullptr) != (b.lin_annot == nullptr)) return false;
  if ((a.cart_annot == nullptr) != (b.cart_annot == nullptr)) return false;
  if (a.lin_annot && !lin_eq(a.lin_annot, b.lin_annot, m)) return false;
  if (a.cart_annot && !cart_eq(a.cart_annot, b.cart_annot, m)) return false;
  return true;
}

// Pattern binders are pushed on `m` and stay there for the let body.
bool pattern_eq(const PatternPtr& a, const PatternPtr& b, BinderMap& m) {
  if (!a || !b) return a == b;
  if (a->kind != b->kind || a->subs.size() != b->subs.size()) return false;
  if (a->kind == Pattern::Kind::Var || a->kind == Pattern::Kind::Pack)
    m.pairs.emplace_back(a->name.id, b->name.id);
  for (std::size_t i = 0; i < a->subs.size(); ++i)
    if (!pattern_eq(a->subs[i], b->subs[i], m)) return false;
  if (a->kind == Pattern::Kind::At && !index_eq(a->time, b->time, m)) return false;
  return true;
}

bool term_eq(const TermPtr& a, const TermPtr& b, BinderMap& m) {
  if (a->kind != b->kind) return false;
  if (a->subs.size() != b->subs.size() || a->binds.size() != b->binds.size() ||
      a->refs.size() != b->refs.size())
    return false;
  if (a->literal != b->literal) return false;
  if (!optional_types_eq(*a, *b, m)) return false;
  switch (a->kind) {
    case TermKind::Var: {
      int r = m.lookup(a->ref, b->ref);
      if (r != 0) return r == 1;
      return a->ref.same(b->ref);
    }
    case TermKind::Global:
    case TermKind::Builtin: return a->ref.text == b->ref.text;
    case TermKind::TLam:
      if (a->sort != b->sort) return false;
      break;
    case TermKind::IndexApp:
    case TermKind::AtIntro:
    case TermKind::LetAt:
    case TermKind::LetUnitAt:
    case TermKind::LetPairAt:
    case TermKind::Pack:
      if (!index_eq(a->index, b->index, m)) return false;
      break;
    case TermKind::LetPattern: {
      if (!term_eq(a->subs[0], b->subs[0], m)) return false;
      std::size_t mark = m.pairs.size();
      bool ok = pattern_eq(a->pattern, b->pattern, m) && term_eq(a->subs[1], b->subs[1], m);
      m.pairs.resize(mark);
      return ok;
    }
    default: break;
  }
  for (std::size_t i = 0; i < a->refs.size(); ++i) {
    int r = m.lookup(a->refs[i], b->refs[i]);
    if (r == -1 || (r == 0 && !a->refs[i].same(b->refs[i]))) return false;
  }
  // Binders scope over every subterm after the first for let-forms, and over
  // all subterms otherwise; mapping them up front is equivalent because ids are
  // unique.
  std::size_t mark = m.pairs.size();
  for (std::size_t i = 0; i < a->binds.size(); ++i)
    m.pairs.emplace_back(a->binds[i].id, b->binds[i].id);
  bool ok = true;
  for (std::size_t i = 0; i < a->subs.size() && ok; ++i) ok = term_eq(a->subs[i], b->subs[i], m);
  m.pairs.resize(mark);
  return ok;
}

}  // namespace

bool term_alpha_eq(const TermPtr& a, const TermPtr& b) {
  BinderMap m;
  return term_eq(a, b, m);
}

const Definition* SourceProgram::find(const std::string& name) const {
  for (const auto& d : definitions)
    if (d.name == name) return &d;
  return nullptr;
}

namespace {
bool index_mentions(const IndexTerm& t, int id) { return t.kind == IndexTerm::Kind::Var && t.var.id == id; }

bool occurs_cart(const CartTypePtr& t, int id);

bool occurs_lin(const LinTypePtr& t, int id) {
  using K = LinType::Kind;
  switch (t->kind) {
    case K::Unit:
    case K::Var:
    case K::Meta: return false;
    case K::Tensor:
    case K::Lolli:
    case K::Sum: return occurs_lin(t->left, id) || occurs_lin(t->right, id);
    case K::Diamond:
    case K::Nu: return occurs_lin(t->left, id);
    case K::At: return index_mentions(t->index, id) || occurs_lin(t->left, id);
    case K::F: return occurs_cart(t->cart, id);
    case K::Forall:
    case K::Exists: return t->binder.id != id && occurs_lin(t->left, id);
    case K::Widget: return index_mentions(t->index, id);
    case K::Prefix: return index_mentions(t->index, id) || index_mentions(t->index2, id);
  }
  return false;
}

bool occurs_cart(const CartTypePtr& t, int id) {
  switch (t->kind) {
    case CartType::Kind::Arrow: return occurs_cart(t->dom, id) || occurs_cart(t->cod, id);
    case CartType::Kind::G: return occurs_lin(t->body, id);
    default: return false;
  }
}

void atoms_cart(const CartTypePtr& t, std::vector<std::string>& out);

void atoms_lin(const LinTypePtr& t, std::vector<std::string>& out) {
  using K = LinType::Kind;
  switch (t->kind) {
    case K::Var:
      if (t->binder.id < 0 && std::find(out.begin(), out.end(), t->binder.text) == out.end())
        out.push_back(t->binder.text);
      return;
    case K::Tensor:
    case K::Lolli:
    case K::Sum:
      atoms_lin(t->left, out);
      atoms_lin(t->right, out);
      return;
    case K::Diamond:
    case K::At:
    case K::Forall:
    case K::Exists:
    case K::Nu: atoms_lin(t->left, out); return;
    case K::F: atoms_cart(t->cart, out); return;
    default: return;
  }
}

void atoms_cart(const CartTypePtr& t, std::vector<std::string>& out) {
  switch (t->kind) {
    case CartType::Kind::Arrow:
      atoms_cart(t->dom, out);
      atoms_cart(t->cod, out);
      return;
    case CartType::Kind::G: atoms_lin(t->body, out); return;
    default: return;
  }
}
}  // namespace

bool occurs_free(const LinTypePtr& t, int index_binder_id) { return occurs_lin(t, index_binder_id); }

void free_atoms(const LinTypePtr& t, std::vector<std::string>& out) { atoms_lin(t, out); }

}  // namespace lw
