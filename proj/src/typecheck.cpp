#include "lambda_widget/typecheck.hpp"

#include <algorithm>
#include <set>

#include "lambda_widget/api.hpp"
#include "lambda_widget/desugar.hpp"
#include "lambda_widget/parser.hpp"
#include "lambda_widget/pretty.hpp"

namespace lw {

const char* kind_name(TypeErrorKind k) {
  switch (k) {
    case TypeErrorKind::UnboundVariable: return "UnboundVariable";
    case TypeErrorKind::LinearVariableUnused: return "LinearVariableUnused";
    case TypeErrorKind::LinearVariableReused: return "LinearVariableReused";
    case TypeErrorKind::LinearVariableUnavailableInSelect: return "LinearVariableUnavailableInSelect";
    case TypeErrorKind::TimeMismatch: return "TimeMismatch";
    case TypeErrorKind::SortMismatch: return "SortMismatch";
    case TypeErrorKind::TypeMismatch: return "TypeMismatch";
    case TypeErrorKind::NonEmptyLinearContextUnderG: return "NonEmptyLinearContextUnderG";
    case TypeErrorKind::UnsolvedIndexMetavariable: return "UnsolvedIndexMetavariable";
  }
  return "?";
}

TypeErrorException::TypeErrorException(TypeError e)
    : std::runtime_error(std::string(kind_name(e.kind)) + ": " + e.message), error(std::move(e)) {}

namespace {

[[noreturn]] void fail(TypeErrorKind k, Span s, std::string msg) {
  throw TypeErrorException(TypeError{k, s, std::move(msg), {}});
}

enum class Hidden { None, Select, G, Evt, Time };

struct Entry {
  LinearEntry e;
  Hidden hidden = Hidden::None;
  int depth = 0;
};

using Usage = std::vector<bool>;

class Checker {
 public:
  Checker(const SourceProgram* globals, bool record) : globals_(globals), record_(record) {}

  IndexContext theta;
  CartContext gamma;
  std::vector<Entry> delta;

  // ---- zonking ------------------------------------------------------------

  IndexTerm zonk(const IndexTerm& i) const {
    IndexTerm cur = i;
    while (cur.is_meta()) {
      auto it = index_solution_.find(cur.meta);
      if (it == index_solution_.end()) break;
      cur = it->second;
    }
    return cur;
  }

  LinTypePtr zonk(const LinTypePtr& t) const {
    using K = LinType::Kind;
    if (!t) return t;
    switch (t->kind) {
      case K::Meta: {
        auto it = type_solution_.find(t->meta);
        return it == type_solution_.end() ? t : zonk(it->second);
      }
      case K::Unit:
      case K::Var: return t;
      default: break;
    }
    auto n = std::make_shared<LinType>(*t);
    if (t->left) n->left = zonk(t->left);
    if (t->right) n->right = zonk(t->right);
    if (t->cart) n->cart = zonk(t->cart);
    n->index = zonk(t->index);
    n->index2 = zonk(t->index2);
    return n;
  }

  CartTypePtr zonk(const CartTypePtr& t) const {
    if (!t || t->kind == CartType::Kind::Unit || t->kind == CartType::Kind::Base) return t;
    auto n = std::make_shared<CartType>(*t);
    if (t->kind == CartType::Kind::G) {
      n->body = zonk(t->body);
    } else {
      n->dom = zonk(t->dom);
      n->cod = zonk(t->cod);
    }
    return n;
  }

  TermPtr zonk(const TermPtr& t) const {
    auto n = std::make_shared<Term>(*t);
    n->index = zonk(t->index);
    for (auto& s : n->subs) s = zonk(s);
    return n;
  }

  // ---- metavariables ------------------------------------------------------

  LinTypePtr fresh_type_meta() {
    int m = next_type_meta_++;
    type_meta_scope_[m] = theta.entries.size();
    return ty::meta(m);
  }

  LinTypePtr instantiate(const LinTypePtr& t) {
    std::vector<std::string> atoms;
    free_atoms(t, atoms);
    if (atoms.empty()) return t;
    std::map<std::string, LinTypePtr> m;
    for (auto& a : atoms) m[a] = fresh_type_meta();
    return subst_atoms(t, m);
  }

  CartTypePtr instantiate(const CartTypePtr& t) {
    std::vector<std::string> atoms;
    collect_cart_atoms(t, atoms);
    if (atoms.empty()) return t;
    std::map<std::string, LinTypePtr> m;
    for (auto& a : atoms) m[a] = fresh_type_meta();
    return subst_atoms(t, m);
  }

  void note_meta(int m, Sort s, Span span) {
    auto it = meta_sort_.find(m);
    if (it != meta_sort_.end() && it->second != s)
      fail(TypeErrorKind::SortMismatch, span,
           "metavariable ?" + std::to_string(m) + " used at sorts " + sort_name(it->second) + " and " + sort_name(s));
    meta_sort_[m] = s;
    if (!meta_scope_.count(m)) {
      meta_scope_[m] = theta.entries.size();
      meta_span_[m] = span;
      meta_order_.push_back(m);
    }
  }

  void check_metas_solved() const {
    for (int m : meta_order_) {
      IndexTerm z = zonk(IndexTerm::metavar(m));
      if (z.is_meta())
        fail(TypeErrorKind::UnsolvedIndexMetavariable, meta_span_.at(m),
             "cannot infer the index argument ?" + std::to_string(m));
    }
  }

  // ---- index judgments ----------------------------------------------------

  int theta_pos(int id) const {
    for (std::size_t k = theta.entries.size(); k-- > 0;)
      if (theta.entries[k].first.id == id) return static_cast<int>(k);
    return -1;
  }

  std::optional<Sort> sort_of(const IndexTerm& raw) const {
    IndexTerm i = zonk(raw);
    switch (i.kind) {
      case IndexTerm::Kind::TimeLit:
      case IndexTerm::Kind::Infinity: return Sort::Time;
      case IndexTerm::Kind::IdLit: return Sort::Id;
      case IndexTerm::Kind::Var: {
        int p = theta_pos(i.var.id);
        if (p < 0) return std::nullopt;
        return theta.entries[p].second;
      }
      case IndexTerm::Kind::Meta: {
        auto it = meta_sort_.find(i.meta);
        if (it == meta_sort_.end()) return std::nullopt;
        return it->second;
      }
    }
    return std::nullopt;
  }

  void index(const IndexTerm& raw, Sort s, Span span) {
    IndexTerm i = zonk(raw);
    switch (i.kind) {
      case IndexTerm::Kind::Var: {
        int p = theta_pos(i.var.id);
        if (p < 0) fail(TypeErrorKind::UnboundVariable, span, "unbound index variable '" + i.var.text + "'");
        if (theta.entries[p].second != s)
          fail(TypeErrorKind::SortMismatch, span,
               "index '" + i.var.text + "' has sort " + sort_name(theta.entries[p].second) + ", expected " +
                   sort_name(s));
        return;
      }
      case IndexTerm::Kind::Meta: note_meta(i.meta, s, span); return;
      default: {
        Sort got = *sort_of(i);
        if (got != s)
          fail(TypeErrorKind::SortMismatch, span,
               "index " + show(i) + " has sort " + sort_name(got) + ", expected " + sort_name(s));
      }
    }
  }

  // ---- unification --------------------------------------------------------

  bool unify_index(const IndexTerm& ra, const IndexTerm& rb, Span span) {
    IndexTerm a = zonk(ra), b = zonk(rb);
    if (a == b) return true;
    if (b.is_meta() && !a.is_meta()) std::swap(a, b);
    if (!a.is_meta()) return false;
    auto sa = sort_of(a), sb = sort_of(b);
    if (sa && sb && *sa != *sb)
      fail(TypeErrorKind::SortMismatch, span, "cannot unify " + show(a) + " with " + show(b) + ": sorts differ");
    std::size_t scope = meta_scope_.count(a.meta) ? meta_scope_[a.meta] : theta.entries.size();
    if (b.is_var()) {
      int p = theta_pos(b.var.id);
      if (p < 0 || static_cast<std::size_t>(p) >= scope) return false;
    } else if (b.is_meta()) {
      auto it = meta_scope_.find(b.meta);
      if (it == meta_scope_.end() || it->second > scope) meta_scope_[b.meta] = scope;
      if (sa && !sb) meta_sort_[b.meta] = *sa;
    }
    index_solution_[a.meta] = b;
    return true;
  }

  void free_index_vars(const LinTypePtr& t, std::set<int>& bound, std::vector<int>& out) const {
    using K = LinType::Kind;
    auto idx = [&](const IndexTerm& i) {
      if (i.is_var() && !bound.count(i.var.id)) out.push_back(i.var.id);
    };
    switch (t->kind) {
      case K::Forall:
      case K::Exists: {
        bool fresh = bound.insert(t->binder.id).second;
        free_index_vars(t->left, bound, out);
        if (fresh) bound.erase(t->binder.id);
        return;
      }
      case K::At: idx(t->index); break;
      case K::Widget: idx(t->index); return;
      case K::Prefix:
        idx(t->index);
        idx(t->index2);
        return;
      case K::F: free_index_vars_cart(t->cart, bound, out); return;
      default: break;
    }
    if (t->left) free_index_vars(t->left, bound, out);
    if (t->right) free_index_vars(t->right, bound, out);
  }

  void free_index_vars_cart(const CartTypePtr& t, std::set<int>& bound, std::vector<int>& out) const {
    if (t->kind == CartType::Kind::G) free_index_vars(t->body, bound, out);
    if (t->kind == CartType::Kind::Arrow) {
      free_index_vars_cart(t->dom, bound, out);
      free_index_vars_cart(t->cod, bound, out);
    }
  }

  bool occurs_meta(int m, const LinTypePtr& t) const {
    if (t->kind == LinType::Kind::Meta) return t->meta == m;
    if (t->kind == LinType::Kind::F) return occurs_meta_cart(m, t->cart);
    return (t->left && occurs_meta(m, t->left)) || (t->right && occurs_meta(m, t->right));
  }
  bool occurs_meta_cart(int m, const CartTypePtr& t) const {
    if (t->kind == CartType::Kind::G) return occurs_meta(m, t->body);
    if (t->kind == CartType::Kind::Arrow) return occurs_meta_cart(m, t->dom) || occurs_meta_cart(m, t->cod);
    return false;
  }

  bool bind_type_meta(int m, const LinTypePtr& t) {
    if (occurs_meta(m, t)) return false;
    std::set<int> bound;
    std::vector<int> vars;
    free_index_vars(t, bound, vars);
    std::size_t scope = type_meta_scope_[m];
    for (int v : vars) {
      int p = theta_pos(v);
      if (p < 0 || static_cast<std::size_t>(p) >= scope) return false;
    }
    type_solution_[m] = t;
    return true;
  }

  bool unify(const LinTypePtr& ra, const LinTypePtr& rb, Span span) {
    using K = LinType::Kind;
    LinTypePtr a = zonk(ra), b = zonk(rb);
    if (a->kind == K::Meta && b->kind == K::Meta && a->meta == b->meta) return true;
    if (a->kind == K::Meta) return bind_type_meta(a->meta, b);
    if (b->kind == K::Meta) return bind_type_meta(b->meta, a);
    if (a->kind != b->kind) return false;
    switch (a->kind) {
      case K::Unit: return true;
      case K::Tensor:
      case K::Lolli:
      case K::Sum: return unify(a->left, b->left, span) && unify(a->right, b->right, span);
      case K::Diamond: return unify(a->left, b->left, span);
      case K::At: return unify_index(a->index, b->index, span) && unify(a->left, b->left, span);
      case K::F: return unify_cart(a->cart, b->cart, span);
      case K::Widget: return unify_index(a->index, b->index, span);
      case K::Prefix: return unify_index(a->index, b->index, span) && unify_index(a->index2, b->index2, span);
      case K::Forall:
      case K::Exists: {
        if (a->sort != b->sort) return false;
        IndexSubst z{{b->binder.id, IndexTerm::variable(a->binder)}};
        theta.entries.emplace_back(a->binder, a->sort);
        bool ok = unify(a->left, subst_index(z, b->left), span);
        theta.entries.pop_back();
        return ok;
      }
      case K::Nu: return unify(a->left, subst_type_var(b->left, b->binder.id, ty::var(a->binder)), span);
      case K::Var: return a->binder.same(b->binder);
      case K::Meta: return false;
    }
    return false;
  }

  bool unify_cart(const CartTypePtr& a, const CartTypePtr& b, Span span) {
    if (a->kind != b->kind) return false;
    switch (a->kind) {
      case CartType::Kind::Unit: return true;
      case CartType::Kind::Base: return a->base == b->base;
      case CartType::Kind::G: return unify(a->body, b->body, span);
      case CartType::Kind::Arrow: return unify_cart(a->dom, b->dom, span) && unify_cart(a->cod, b->cod, span);
    }
    return false;
  }

  void expect(const LinTypePtr& got, const LinTypePtr& want, Span span) {
    if (!unify(got, want, span))
      fail(TypeErrorKind::TypeMismatch, span, "expected " + show(zonk(want)) + ", found " + show(zonk(got)));
  }

  void expect_cart(const CartTypePtr& got, const CartTypePtr& want, Span span) {
    if (!unify_cart(zonk(got), zonk(want), span))
      fail(TypeErrorKind::TypeMismatch, span, "expected " + show(zonk(want)) + ", found " + show(zonk(got)));
  }

  // Resolves a type to the given head constructor, refining a metavariable
  // if necessary.
  LinTypePtr as(LinType::Kind k, const LinTypePtr& raw, Span span, const char* what) {
    using K = LinType::Kind;
    LinTypePtr t = zonk(raw);
    if (t->kind == k) return t;
    if (t->kind == K::Meta) {
      LinTypePtr shape;
      switch (k) {
        case K::Tensor: shape = ty::tensor(fresh_type_meta(), fresh_type_meta()); break;
        case K::Lolli: shape = ty::lolli(fresh_type_meta(), fresh_type_meta()); break;
        case K::Sum: shape = ty::sum(fresh_type_meta(), fresh_type_meta()); break;
        case K::Diamond: shape = ty::diamond(fresh_type_meta()); break;
        default: fail(TypeErrorKind::TypeMismatch, span, std::string("cannot infer ") + what + "; add an annotation");
      }
      expect(t, shape, span);
      return zonk(shape);
    }
    fail(TypeErrorKind::TypeMismatch, span, std::string("expected ") + what + ", found " + show(t));
  }

  // ---- well-formedness ----------------------------------------------------

  void well_formed(const LinTypePtr& t, Span span) {
    using K = LinType::Kind;
    switch (t->kind) {
      case K::Unit:
      case K::Var:
      case K::Meta: return;
      case K::Tensor:
      case K::Lolli:
      case K::Sum:
        well_formed(t->left, span);
        well_formed(t->right, span);
        return;
      case K::Diamond: well_formed(t->left, span); return;
      case K::At:
        index(t->index, Sort::Time, span);
        well_formed(t->left, span);
        return;
      case K::F: well_formed(t->cart, span); return;
      case K::Forall:
      case K::Exists:
        theta.entries.emplace_back(t->binder, t->sort);
        well_formed(t->left, span);
        theta.entries.pop_back();
        return;
      case K::Widget: index(t->index, Sort::Id, span); return;
      case K::Prefix:
        index(t->index, Sort::Id, span);
        index(t->index2, Sort::Time, span);
        return;
      case K::Nu:
        positive(t->left, t->binder.id, true, span);
        well_formed(t->left, span);
        return;
    }
  }

  void well_formed(const CartTypePtr& t, Span span) {
    if (t->kind == CartType::Kind::G) well_formed(t->body, span);
    if (t->kind == CartType::Kind::Arrow) {
      well_formed(t->dom, span);
      well_formed(t->cod, span);
    }
  }

  void positive(const LinTypePtr& t, int alpha, bool pos, Span span) {
    using K = LinType::Kind;
    switch (t->kind) {
      case K::Var:
        if (t->binder.id == alpha && !pos)
          fail(TypeErrorKind::TypeMismatch, span, "recursive type variable '" + t->binder.text + "' occurs negatively");
        return;
      case K::Lolli:
        positive(t->left, alpha, !pos, span);
        positive(t->right, alpha, pos, span);
        return;
      case K::F: positive_cart(t->cart, alpha, pos, span); return;
      default: break;
    }
    if (t->left) positive(t->left, alpha, pos, span);
    if (t->right) positive(t->right, alpha, pos, span);
  }

  void positive_cart(const CartTypePtr& t, int alpha, bool pos, Span span) {
    if (t->kind == CartType::Kind::G) positive(t->body, alpha, pos, span);
    if (t->kind == CartType::Kind::Arrow) {
      positive_cart(t->dom, alpha, !pos, span);
      positive_cart(t->cod, alpha, pos, span);
    }
  }

  // ---- judgments (second half of the file) --------------------------------

  LinTypePtr lin(const TermPtr& t, const LinTypePtr& expected);
  CartTypePtr cart(const TermPtr& t, const CartTypePtr& expected);

  DerivationNode take_root() {
    DerivationNode n = roots_.empty() ? DerivationNode{} : std::move(roots_.back());
    roots_.clear();
    return n;
  }

  std::vector<int> metas_seen() const { return meta_order_; }

 private:
  const SourceProgram* globals_;
  bool record_;
  int branch_depth_ = 0;

  std::map<int, IndexTerm> index_solution_;
  std::map<int, Sort> meta_sort_;
  std::map<int, std::size_t> meta_scope_;
  std::map<int, Span> meta_span_;
  std::vector<int> meta_order_;

  std::map<int, LinTypePtr> type_solution_;
  std::map<int, std::size_t> type_meta_scope_;
  int next_type_meta_ = 0;

  std::vector<DerivationNode> stack_;
  std::vector<Usage> usage_stack_;
  std::vector<DerivationNode> roots_;

  static void collect_cart_atoms(const CartTypePtr& t, std::vector<std::string>& out) {
    if (t->kind == CartType::Kind::G) free_atoms(t->body, out);
    if (t->kind == CartType::Kind::Arrow) {
      collect_cart_atoms(t->dom, out);
      collect_cart_atoms(t->cod, out);
    }
  }

  // Derivation recording. A Node is opened per rule application.
  struct Node {
    Checker& c;
    explicit Node(Checker& ch, const char* rule, Span span) : c(ch) {
      if (!c.record_) return;
      DerivationNode n;
      n.rule = rule;
      n.span = span;
      n.branch_depth = c.branch_depth_;
      for (auto& [name, s] : c.theta.entries) n.theta.push_back(name.text + ":" + sort_name(s));
      Usage u;
      for (auto& e : c.delta) u.push_back(e.e.used);
      c.stack_.push_back(std::move(n));
      c.usage_stack_.push_back(std::move(u));
    }
    ~Node() {
      if (!c.record_) return;
      DerivationNode n = std::move(c.stack_.back());
      Usage before = std::move(c.usage_stack_.back());
      c.stack_.pop_back();
      c.usage_stack_.pop_back();
      for (std::size_t k = 0; k < before.size() && k < c.delta.size(); ++k)
        if (!before[k] && c.delta[k].e.used) n.consumed.push_back(c.render(c.delta[k].e));
      if (c.stack_.empty())
        c.roots_.push_back(std::move(n));
      else
        c.stack_.back().children.push_back(std::move(n));
    }
    void entry_depth(int d) {
      if (c.record_) c.stack_.back().entry_depth = d;
    }
  };

  std::string render(const LinearEntry& e) const {
    IndexTerm t = zonk(e.time);
    std::string colon = (t.kind == IndexTerm::Kind::TimeLit && t.value == 0) ? " : " : " :_" + show(t) + " ";
    return e.name.text + colon + show(zonk(e.type));
  }

  // ---- context operations -------------------------------------------------

  struct Saved {
    std::vector<std::pair<Hidden, IndexTerm>> v;
  };

  Saved save() const {
    Saved s;
    for (auto& e : delta) s.v.emplace_back(e.hidden, e.e.time);
    return s;
  }

  void restore(const Saved& s) {
    for (std::size_t k = 0; k < s.v.size() && k < delta.size(); ++k) {
      delta[k].hidden = s.v[k].first;
      delta[k].e.time = s.v[k].second;
    }
  }

  void hide_all(Hidden why) {
    for (auto& e : delta)
      if (e.hidden == Hidden::None) e.hidden = why;
  }

  // The delay rule: entries annotated τ become current, everything else is
  // out of reach.
  void shift_to(const IndexTerm& raw_tau) {
    IndexTerm tau = zonk(raw_tau);
    for (auto& e : delta) {
      if (e.hidden != Hidden::None || e.e.used) continue;
      if (zonk(e.e.time) == tau)
        e.e.time = IndexTerm::time(0);
      else
        e.hidden = Hidden::Time;
    }
  }

  void push(const Name& n, const LinTypePtr& t, Span span, IndexTerm time = IndexTerm::time(0)) {
    Entry e;
    e.e.name = n;
    e.e.type = t;
    e.e.time = time;
    e.e.span = span;
    e.depth = branch_depth_;
    delta.push_back(std::move(e));
  }

  void pop(std::size_t count = 1) {
    std::size_t first = delta.size() - count;
    for (std::size_t k = first; k < delta.size(); ++k)
      if (!delta[k].e.used)
        fail(TypeErrorKind::LinearVariableUnused, delta[k].e.span,
             "linear variable '" + delta[k].e.name.text + "' is never used");
    delta.resize(first);
  }

  LinTypePtr consume(const Name& n, Span span, Node* node) {
    for (std::size_t k = delta.size(); k-- > 0;) {
      Entry& e = delta[k];
      if (e.e.name.id != n.id) continue;
      switch (e.hidden) {
        case Hidden::Select:
          fail(TypeErrorKind::LinearVariableUnavailableInSelect, span,
               "linear variable '" + n.text + "' from outside the select cannot be used in a branch");
        case Hidden::G:
          fail(TypeErrorKind::NonEmptyLinearContextUnderG, span,
               "linear variable '" + n.text + "' cannot be used under G");
        case Hidden::Evt:
          fail(TypeErrorKind::TimeMismatch, span,
               "linear variable '" + n.text + "' is not available after waiting for an event");
        case Hidden::Time:
          fail(TypeErrorKind::TimeMismatch, span,
               "linear variable '" + n.text + "' is available at time " + show(zonk(e.e.time)) +
                   ", not at the current time");
        case Hidden::None: break;
      }
      if (e.e.used) fail(TypeErrorKind::LinearVariableReused, span, "linear variable '" + n.text + "' used twice");
      IndexTerm t = zonk(e.e.time);
      if (!(t.kind == IndexTerm::Kind::TimeLit && t.value == 0))
        fail(TypeErrorKind::TimeMismatch, span,
             "linear variable '" + n.text + "' is available at time " + show(t) + ", not now");
      e.e.used = true;
      if (node) node->entry_depth(e.depth);
      return e.e.type;
    }
    for (auto it = gamma.entries.rbegin(); it != gamma.entries.rend(); ++it)
      if (it->first.id == n.id)
        fail(TypeErrorKind::TypeMismatch, span,
             "Cartesian variable '" + n.text + "' of type " + show(it->second) + " used where a linear value is expected");
    fail(TypeErrorKind::UnboundVariable, span, "unbound variable '" + n.text + "'");
  }

  const Definition* global(const Name& n, Span span) const {
    const Definition* d = globals_ ? globals_->find(n.text) : nullptr;
    if (!d) fail(TypeErrorKind::UnboundVariable, span, "unbound variable '" + n.text + "'");
    return d;
  }
};

const char* rule_name(TermKind k) {
  switch (k) {
    case TermKind::Var: return "Var";
    case TermKind::Global: return "Global";
    case TermKind::Builtin: return "Builtin";
    case TermKind::Lam: return "⊸-I";
    case TermKind::App: return "⊸-E";
    case TermKind::IndexApp: return "∀-E";
    case TermKind::TLam: return "∀-I";
    case TermKind::Unit: return "I-I";
    case TermKind::LetUnit: return "I-E";
    case TermKind::Pair: return "⊗-I";
    case TermKind::LetPair: return "⊗-E";
    case TermKind::Evt: return "◇-I";
    case TermKind::LetEvt: return "◇-E";
    case TermKind::AtIntro: return "@-I";
    case TermKind::LetAt: return "@-E";
    case TermKind::LetUnitAt: return "I_τ-E";
    case TermKind::LetPairAt: return "⊗_τ-E";
    case TermKind::GIntro: return "G-I";
    case TermKind::RunG: return "G-E";
    case TermKind::FIntro: return "F-I";
    case TermKind::LetF: return "F-E";
    case TermKind::Pack: return "∃-I";
    case TermKind::LetPack: return "∃-E";
    case TermKind::Select: return "select";
    case TermKind::Fold: return "fold";
    case TermKind::Unfold: return "unfold";
    case TermKind::Inl: return "⊕-I₁";
    case TermKind::Inr: return "⊕-I₂";
    case TermKind::Case: return "⊕-E";
    case TermKind::Let: return "let";
    case TermKind::Star: return "1-I";
    case TermKind::Color: return "Color";
    case TermKind::Char: return "Char";
    case TermKind::Annot: return "annot";
    case TermKind::LetPattern: return "pattern";
  }
  return "?";
}

LinTypePtr Checker::lin(const TermPtr& t, const LinTypePtr& expected) {
  using K = LinType::Kind;
  Node node(*this, rule_name(t->kind), t->span);
  const Span sp = t->span;
  LinTypePtr exp = expected ? zonk(expected) : nullptr;
  auto done = [&](const LinTypePtr& got) {
    if (exp) expect(got, exp, sp);
    return exp ? zonk(exp) : zonk(got);
  };
  auto need = [&](const char* what) {
    if (!exp) fail(TypeErrorKind::TypeMismatch, sp, std::string("cannot infer the type of ") + what + "; add an annotation");
  };
  switch (t->kind) {
    case TermKind::Var: return done(consume(t->ref, sp, &node));
    case TermKind::Global: {
      const Definition* d = global(t->ref, sp);
      if (d->type.cartesian())
        fail(TypeErrorKind::TypeMismatch, sp,
             "'" + d->name + "' has Cartesian type " + show(d->type.cart) + " and cannot be used as a linear value");
      return done(instantiate(d->type.lin));
    }
    case TermKind::Builtin: return done(instantiate(builtin_type(t->ref.text)));
    case TermKind::Lam: {
      if (t->cart_annot) fail(TypeErrorKind::TypeMismatch, sp, "linear λ-binder annotated with a Cartesian type");
      LinTypePtr dom = t->lin_annot, cod;
      if (dom) well_formed(dom, sp);
      if (exp) {
        LinTypePtr f = as(K::Lolli, exp, sp, "a linear function");
        if (dom) expect(dom, f->left, sp);
        dom = f->left;
        cod = f->right;
      }
      if (!dom) need("λ-abstraction");
      push(t->binds[0], dom, sp);
      LinTypePtr body = lin(t->subs[0], cod);
      pop();
      return done(ty::lolli(dom, body));
    }
    case TermKind::App: {
      LinTypePtr f = as(K::Lolli, lin(t->subs[0], nullptr), t->subs[0]->span, "a linear function");
      lin(t->subs[1], f->left);
      return done(f->right);
    }
    case TermKind::IndexApp: {
      LinTypePtr f = zonk(lin(t->subs[0], nullptr));
      if (f->kind != K::Forall)
        fail(TypeErrorKind::TypeMismatch, sp, "index application to a term of type " + show(f));
      index(t->index, f->sort, sp);
      return done(subst_index({{f->binder.id, zonk(t->index)}}, f->left));
    }
    case TermKind::TLam: {
      theta.entries.emplace_back(t->binds[0], t->sort);
      LinTypePtr body;
      if (exp) {
        if (exp->kind != K::Forall || exp->sort != t->sort) {
          theta.entries.pop_back();
          fail(TypeErrorKind::TypeMismatch, sp,
               std::string("expected ") + show(exp) + ", found a Λ over " + sort_name(t->sort));
        }
        lin(t->subs[0], subst_index({{exp->binder.id, IndexTerm::variable(t->binds[0])}}, exp->left));
        theta.entries.pop_back();
        return exp;
      }
      body = lin(t->subs[0], nullptr);
      theta.entries.pop_back();
      return ty::forall(t->binds[0], t->sort, zonk(body));
    }
    case TermKind::Unit: return done(ty::unit());
    case TermKind::LetUnit: {
      lin(t->subs[0], ty::unit());
      return lin(t->subs[1], exp);
    }
    case TermKind::Pair: {
      LinTypePtr l, r;
      if (exp && exp->kind == K::Tensor) {
        l = exp->left;
        r = exp->right;
      }
      LinTypePtr a = lin(t->subs[0], l);
      LinTypePtr b = lin(t->subs[1], r);
      return done(ty::tensor(a, b));
    }
    case TermKind::LetPair: {
      LinTypePtr p = as(K::Tensor, lin(t->subs[0], nullptr), t->subs[0]->span, "a pair");
      push(t->binds[0], p->left, sp);
      push(t->binds[1], p->right, sp);
      LinTypePtr r = lin(t->subs[1], exp);
      pop(2);
      return r;
    }
    case TermKind::Evt: {
      LinTypePtr inner = exp && exp->kind == K::Diamond ? exp->left : nullptr;
      return done(ty::diamond(lin(t->subs[0], inner)));
    }
    case TermKind::LetEvt: {
      LinTypePtr e = as(K::Diamond, lin(t->subs[0], nullptr), t->subs[0]->span, "an event");
      if (exp) as(K::Diamond, exp, sp, "an event");
      Saved s = save();
      hide_all(Hidden::Evt);
      push(t->binds[0], e->left, sp);
      LinTypePtr r = lin(t->subs[1], exp);
      pop();
      restore(s);
      as(K::Diamond, r, t->subs[1]->span, "an event");
      return zonk(r);
    }
    case TermKind::AtIntro: {
      index(t->index, Sort::Time, sp);
      LinTypePtr inner;
      if (exp && exp->kind == K::At) {
        if (!unify_index(exp->index, t->index, sp))
          fail(TypeErrorKind::TimeMismatch, sp,
               "expected a value at time " + show(zonk(exp->index)) + ", found one at " + show(zonk(t->index)));
        inner = exp->left;
      }
      Saved s = save();
      shift_to(t->index);
      LinTypePtr a = lin(t->subs[0], inner);
      restore(s);
      return done(ty::at(a, zonk(t->index)));
    }
    case TermKind::LetAt: {
      index(t->index, Sort::Time, sp);
      LinTypePtr a = zonk(lin(t->subs[0], nullptr));
      if (a->kind == K::Meta) {
        LinTypePtr shape = ty::at(fresh_type_meta(), t->index);
        expect(a, shape, sp);
        a = zonk(shape);
      }
      if (a->kind != K::At)
        fail(TypeErrorKind::TypeMismatch, t->subs[0]->span, "expected a value of type _ @ " + show(t->index) + ", found " + show(a));
      if (!unify_index(a->index, t->index, sp))
        fail(TypeErrorKind::TimeMismatch, sp,
             "value is available at time " + show(zonk(a->index)) + ", pattern expects " + show(zonk(t->index)));
      push(t->binds[0], a->left, sp, zonk(t->index));
      LinTypePtr r = lin(t->subs[1], exp);
      pop();
      return r;
    }
    case TermKind::LetUnitAt: {
      index(t->index, Sort::Time, sp);
      Saved s = save();
      shift_to(t->index);
      lin(t->subs[0], ty::unit());
      restore(s);
      return lin(t->subs[1], exp);
    }
    case TermKind::LetPairAt: {
      index(t->index, Sort::Time, sp);
      Saved s = save();
      shift_to(t->index);
      LinTypePtr p = as(K::Tensor, lin(t->subs[0], nullptr), t->subs[0]->span, "a pair");
      restore(s);
      push(t->binds[0], p->left, sp, zonk(t->index));
      push(t->binds[1], p->right, sp, zonk(t->index));
      LinTypePtr r = lin(t->subs[1], exp);
      pop(2);
      return r;
    }
    case TermKind::RunG: {
      CartTypePtr g = zonk(cart(t->subs[0], nullptr));
      if (g->kind != CartType::Kind::G)
        fail(TypeErrorKind::TypeMismatch, t->subs[0]->span, "runG expects a value of type G A, found " + show(g));
      return done(g->body);
    }
    case TermKind::FIntro: {
      CartTypePtr x = exp && exp->kind == K::F ? exp->cart : nullptr;
      return done(ty::f(cart(t->subs[0], x)));
    }
    case TermKind::LetF: {
      LinTypePtr f = zonk(lin(t->subs[0], nullptr));
      if (f->kind != K::F) fail(TypeErrorKind::TypeMismatch, t->subs[0]->span, "expected F X, found " + show(f));
      gamma.entries.emplace_back(t->binds[0], f->cart);
      LinTypePtr r = lin(t->subs[1], exp);
      gamma.entries.pop_back();
      return r;
    }
    case TermKind::Pack: {
      need("pack");
      if (exp->kind != K::Exists) fail(TypeErrorKind::TypeMismatch, sp, "expected " + show(exp) + ", found a pack");
      index(t->index, exp->sort, sp);
      lin(t->subs[0], subst_index({{exp->binder.id, zonk(t->index)}}, exp->left));
      return zonk(exp);
    }
    case TermKind::LetPack: {
      LinTypePtr e = zonk(lin(t->subs[0], nullptr));
      if (e->kind != K::Exists)
        fail(TypeErrorKind::TypeMismatch, t->subs[0]->span, "expected an existential package, found " + show(e));
      const Name& k = t->binds[0];
      theta.entries.emplace_back(k, e->sort);
      push(t->binds[1], subst_index({{e->binder.id, IndexTerm::variable(k)}}, e->left), sp);
      LinTypePtr r = zonk(lin(t->subs[1], exp));
      pop();
      if (occurs_free(r, k.id))
        fail(TypeErrorKind::TypeMismatch, sp, "index variable '" + k.text + "' escapes in result type " + show(r));
      theta.entries.pop_back();
      return r;
    }
    case TermKind::Select: {
      LinTypePtr e1 = as(K::Diamond, consume(t->refs[0], sp, nullptr), sp, "an event");
      LinTypePtr e2 = as(K::Diamond, consume(t->refs[1], sp, nullptr), sp, "an event");
      if (exp) as(K::Diamond, exp, sp, "an event");
      auto branch = [&](const TermPtr& body, const Name& bound, const LinTypePtr& bt, const Name& other,
                        const LinTypePtr& ot, const LinTypePtr& want) {
        Saved s = save();
        hide_all(Hidden::Select);
        ++branch_depth_;
        push(bound, bt, body->span);
        push(other, ot, body->span);
        LinTypePtr r = lin(body, want);
        pop(2);
        --branch_depth_;
        restore(s);
        as(K::Diamond, r, body->span, "an event");
        return zonk(r);
      };
      LinTypePtr r1 = branch(t->subs[0], t->binds[0], e1->left, t->binds[1], e2, exp);
      LinTypePtr r2 = branch(t->subs[1], t->binds[2], e2->left, t->binds[3], e1, exp ? exp : r1);
      expect(r2, r1, t->subs[1]->span);
      return zonk(r1);
    }
    case TermKind::Fold: {
      need("fold");
      if (exp->kind != K::Nu) fail(TypeErrorKind::TypeMismatch, sp, "expected " + show(exp) + ", found a fold");
      lin(t->subs[0], subst_type_var(exp->left, exp->binder.id, exp));
      return exp;
    }
    case TermKind::Unfold: {
      LinTypePtr n = zonk(lin(t->subs[0], nullptr));
      if (n->kind != K::Nu) fail(TypeErrorKind::TypeMismatch, t->subs[0]->span, "expected a recursive type, found " + show(n));
      return done(subst_type_var(n->left, n->binder.id, n));
    }
    case TermKind::Inl:
    case TermKind::Inr: {
      need("injection");
      LinTypePtr s = as(K::Sum, exp, sp, "a sum");
      lin(t->subs[0], t->kind == TermKind::Inl ? s->left : s->right);
      return zonk(s);
    }
    case TermKind::Case: {
      LinTypePtr s = as(K::Sum, lin(t->subs[0], nullptr), t->subs[0]->span, "a sum");
      Usage before;
      for (auto& e : delta) before.push_back(e.e.used);
      push(t->binds[0], s->left, sp);
      LinTypePtr r1 = lin(t->subs[1], exp);
      pop();
      Usage left;
      for (auto& e : delta) left.push_back(e.e.used);
      for (std::size_t k = 0; k < delta.size(); ++k) delta[k].e.used = before[k];
      push(t->binds[1], s->right, sp);
      LinTypePtr r2 = lin(t->subs[2], exp ? exp : r1);
      pop();
      expect(r2, r1, t->subs[2]->span);
      for (std::size_t k = 0; k < delta.size(); ++k)
        if (delta[k].e.used != left[k])
          fail(TypeErrorKind::LinearVariableUnused, delta[k].e.span,
               "linear variable '" + delta[k].e.name.text + "' is used in only one branch of case");
      return zonk(r1);
    }
    case TermKind::Let: {
      LinTypePtr a = lin(t->subs[0], nullptr);
      push(t->binds[0], zonk(a), sp);
      LinTypePtr r = lin(t->subs[1], exp);
      pop();
      return r;
    }
    case TermKind::Annot: {
      if (!t->lin_annot) fail(TypeErrorKind::TypeMismatch, sp, "Cartesian annotation in a linear position");
      well_formed(t->lin_annot, sp);
      lin(t->subs[0], t->lin_annot);
      return done(t->lin_annot);
    }
    case TermKind::GIntro:
    case TermKind::Star:
    case TermKind::Color:
    case TermKind::Char:
      fail(TypeErrorKind::TypeMismatch, sp, "Cartesian term used where a linear value is expected");
    case TermKind::LetPattern: fail(TypeErrorKind::TypeMismatch, sp, "pattern let survived desugaring");
  }
  fail(TypeErrorKind::TypeMismatch, sp, "unsupported term");
}

CartTypePtr Checker::cart(const TermPtr& t, const CartTypePtr& expected) {
  using CK = CartType::Kind;
  Node node(*this, rule_name(t->kind), t->span);
  const Span sp = t->span;
  CartTypePtr exp = expected ? zonk(expected) : nullptr;
  auto done = [&](const CartTypePtr& got) {
    if (exp) expect_cart(got, exp, sp);
    return zonk(exp ? exp : got);
  };
  switch (t->kind) {
    case TermKind::Star: return done(ty::one());
    case TermKind::Color: return done(ty::base("Color"));
    case TermKind::Char: return done(ty::base("Char"));
    case TermKind::Var: {
      for (auto it = gamma.entries.rbegin(); it != gamma.entries.rend(); ++it)
        if (it->first.id == t->ref.id) return done(it->second);
      for (auto it = delta.rbegin(); it != delta.rend(); ++it)
        if (it->e.name.id == t->ref.id) {
          if (it->hidden == Hidden::G)
            fail(TypeErrorKind::NonEmptyLinearContextUnderG, sp,
                 "linear variable '" + t->ref.text + "' cannot be used under G");
          fail(TypeErrorKind::TypeMismatch, sp,
               "linear variable '" + t->ref.text + "' used where a Cartesian value is expected");
        }
      fail(TypeErrorKind::UnboundVariable, sp, "unbound variable '" + t->ref.text + "'");
    }
    case TermKind::Global: {
      const Definition* d = global(t->ref, sp);
      if (!d->type.cartesian())
        fail(TypeErrorKind::TypeMismatch, sp, "'" + d->name + "' has linear type " + show(d->type.lin) + "; wrap it with G");
      return done(instantiate(d->type.cart));
    }
    case TermKind::Lam: {
      if (t->lin_annot) fail(TypeErrorKind::TypeMismatch, sp, "Cartesian λ-binder annotated with a linear type");
      CartTypePtr dom = t->cart_annot, cod;
      if (exp) {
        if (exp->kind != CK::Arrow) fail(TypeErrorKind::TypeMismatch, sp, "expected " + show(exp) + ", found a function");
        if (dom) expect_cart(dom, exp->dom, sp);
        dom = exp->dom;
        cod = exp->cod;
      }
      if (!dom) fail(TypeErrorKind::TypeMismatch, sp, "cannot infer the type of λ-abstraction; add an annotation");
      gamma.entries.emplace_back(t->binds[0], dom);
      CartTypePtr body = cart(t->subs[0], cod);
      gamma.entries.pop_back();
      return done(ty::arrow(dom, body));
    }
    case TermKind::App: {
      CartTypePtr f = zonk(cart(t->subs[0], nullptr));
      if (f->kind != CK::Arrow) fail(TypeErrorKind::TypeMismatch, t->subs[0]->span, "expected a function, found " + show(f));
      cart(t->subs[1], f->dom);
      return done(f->cod);
    }
    case TermKind::GIntro: {
      LinTypePtr inner = exp && exp->kind == CK::G ? exp->body : nullptr;
      Saved s = save();
      hide_all(Hidden::G);
      LinTypePtr a = lin(t->subs[0], inner);
      restore(s);
      return done(ty::g(a));
    }
    case TermKind::Annot: {
      if (!t->cart_annot) fail(TypeErrorKind::TypeMismatch, sp, "linear annotation in a Cartesian position");
      well_formed(t->cart_annot, sp);
      cart(t->subs[0], t->cart_annot);
      return done(t->cart_annot);
    }
    default: fail(TypeErrorKind::TypeMismatch, sp, "linear term used where a Cartesian value is expected");
  }
}

// ---- program driver -------------------------------------------------------

void global_refs(const TermPtr& t, std::set<std::string>& out) {
  if (t->kind == TermKind::Global) out.insert(t->ref.text);
  for (const auto& s : t->subs) global_refs(s, out);
}

bool function_like(const DeclaredType& d) {
  if (d.cartesian()) return true;
  LinTypePtr t = d.lin;
  while (t->kind == LinType::Kind::Forall) t = t->left;
  return t->kind == LinType::Kind::Lolli;
}

// Definitions that can reach themselves through global references.
std::set<std::string> recursive_definitions(const SourceProgram& p) {
  std::map<std::string, std::set<std::string>> edges;
  for (const auto& d : p.definitions) global_refs(d.body, edges[d.name]);
  std::set<std::string> out;
  for (const auto& d : p.definitions) {
    std::set<std::string> seen;
    std::vector<std::string> work(edges[d.name].begin(), edges[d.name].end());
    while (!work.empty()) {
      std::string n = work.back();
      work.pop_back();
      if (n == d.name) {
        out.insert(d.name);
        break;
      }
      if (!seen.insert(n).second) continue;
      for (const auto& m : edges[n]) work.push_back(m);
    }
  }
  return out;
}

}  // namespace

CheckResult check_program(const SourceProgram& program, const CheckOptions& options) {
  CheckResult out;
  out.elaborated = program;
  std::set<std::string> recursive = recursive_definitions(program);
  for (std::size_t k = 0; k < program.definitions.size(); ++k) {
    const Definition& d = program.definitions[k];
    out.types.emplace_back(d.name, d.type);
    Checker c(&program, options.record_derivations);
    try {
      if (d.type.cartesian())
        c.well_formed(d.type.cart, d.span);
      else
        c.well_formed(d.type.lin, d.span);
      if (recursive.count(d.name) && !function_like(d.type))
        fail(TypeErrorKind::TypeMismatch, d.span,
             "recursive definition '" + d.name + "' must have a function or Cartesian type");
      if (d.type.cartesian())
        c.cart(d.body, d.type.cart);
      else
        c.lin(d.body, d.type.lin);
      c.check_metas_solved();
      out.elaborated.definitions[k].body = c.zonk(d.body);
    } catch (TypeErrorException& e) {
      e.error.definition = d.name;
      out.errors.push_back(e.error);
    }
    if (options.record_derivations) out.derivations[d.name] = c.take_root();
  }
  return out;
}

CheckResult check_source(std::string_view source, const CheckOptions& options) {
  return check_program(desugar(parse(source)), options);
}

void check_index(const IndexContext& theta, const IndexTerm& s, Sort sort) {
  Checker c(nullptr, false);
  c.theta = theta;
  c.index(s, sort, Span{});
}

void check_type(const IndexContext& theta, const LinTypePtr& t) {
  Checker c(nullptr, false);
  c.theta = theta;
  c.well_formed(t, Span{});
}

void check_cart(const IndexContext& theta, const CartContext& gamma, const TermPtr& e, const CartTypePtr& expected,
                const SourceProgram* globals) {
  Checker c(globals, false);
  c.theta = theta;
  c.gamma = gamma;
  c.cart(e, expected);
  c.check_metas_solved();
}

/// Free identifiers parsed as globals refer to context entries of that name.
TermPtr resolve_free(const TermPtr& t, const std::vector<Name>& names) {
  if (!t) return t;
  if (t->kind == TermKind::Global) {
    for (const Name& n : names)
      if (n.text == t->ref.text) {
        auto v = std::make_shared<Term>(*t);
        v->kind = TermKind::Var;
        v->ref = n;
        return v;
      }
    return t;
  }
  auto copy = std::make_shared<Term>(*t);
  bool changed = false;
  for (auto& sub : copy->subs) {
    TermPtr r = resolve_free(sub, names);
    changed = changed || r != sub;
    sub = r;
  }
  if (t->kind == TermKind::Select)
    for (Name& r : copy->refs)
      for (const Name& n : names)
        if (r.id < 0 && n.text == r.text) {
          r = n;
          changed = true;
        }
  return changed ? copy : t;
}

LinearContext check_linear(const IndexContext& theta, const CartContext& gamma, const LinearContext& delta,
                           const TermPtr& t, const LinTypePtr& expected, const IndexTerm& now,
                           const SourceProgram* globals) {
  Checker c(globals, false);
  c.theta = theta;
  c.gamma = gamma;
  c.index(now, Sort::Time, t->span);
  bool shifted = now != IndexTerm::time(0);
  std::vector<Name> names;
  for (const auto& e : delta.entries) {
    Entry en;
    en.e = e;
    // Judging at `now` is judging the shifted context at 0.
    if (e.time == now)
      en.e.time = IndexTerm::time(0);
    else if (shifted && !e.used)
      en.hidden = Hidden::Time;
    c.delta.push_back(en);
    names.push_back(e.name);
  }
  for (const auto& [n, ty] : gamma.entries) names.push_back(n);
  c.lin(resolve_free(t, names), expected);
  c.check_metas_solved();
  LinearContext out = delta;
  for (std::size_t k = 0; k < out.entries.size(); ++k) out.entries[k].used = c.delta[k].e.used;
  return out;
}

void check_index_subst(const IndexContext& to, const IndexContext& from, const IndexSubst& z) {
  for (const auto& [name, sort] : from.entries) {
    auto it = z.find(name.id);
    IndexTerm image = it == z.end() ? IndexTerm::variable(name) : it->second;
    check_index(to, image, sort);
  }
}

}  // namespace lw
