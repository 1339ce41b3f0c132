#include "lambda_widget/pretty.hpp"

#include <map>
#include <set>

namespace lw {

namespace {

class Printer {
 public:
  std::string index(const IndexTerm& i) const {
    switch (i.kind) {
      case IndexTerm::Kind::Var: return name(i.var);
      case IndexTerm::Kind::TimeLit: return std::to_string(i.value);
      case IndexTerm::Kind::IdLit: return "#" + std::to_string(i.value);
      case IndexTerm::Kind::Infinity: return "∞";
      case IndexTerm::Kind::Meta: return "?" + std::to_string(i.meta);
    }
    return "?";
  }

  // Levels: 0 binders and ⊸, 1 ⊕, 2 ⊗, 3 ◇, 4 @ and Str, 5 atoms.
  std::string lin(const LinTypePtr& t, int level) {
    using K = LinType::Kind;
    auto wrap = [&](int mine, std::string s) { return mine < level ? "(" + s + ")" : s; };
    switch (t->kind) {
      case K::Unit: return "I";
      case K::Widget: return "Widget " + index(t->index);
      case K::Prefix: return "Prefix " + index(t->index) + " " + index(t->index2);
      case K::F:
        if (t->cart->kind == CartType::Kind::G) return wrap(4, "F (" + cart(t->cart, 0) + ")");
        return wrap(4, "F " + cart(t->cart, 1));
      case K::Var: return name(t->binder);
      case K::Meta: return "?T" + std::to_string(t->meta);
      case K::Diamond: return wrap(3, "◇" + lin(t->left, 3));
      case K::At: {
        std::string inner = t->left->kind == K::At ? lin(t->left, 4) : lin(t->left, 5);
        return wrap(4, inner + " @ " + index(t->index));
      }
      case K::Tensor: return wrap(2, lin(t->left, 3) + " ⊗ " + lin(t->right, 2));
      case K::Sum: return wrap(1, lin(t->left, 2) + " ⊕ " + lin(t->right, 1));
      case K::Lolli: return wrap(0, lin(t->left, 1) + " ⊸ " + lin(t->right, 0));
      case K::Forall:
      case K::Exists: {
        std::string s = t->kind == K::Forall ? "∀" : "∃";
        std::size_t mark = names_.size();
        LinTypePtr cur = t;
        while (cur->kind == t->kind) {
          s += "(" + bind(cur->binder) + ":" + sort_name(cur->sort) + ")";
          cur = cur->left;
        }
        s += ". " + lin(cur, 0);
        names_.resize(mark);
        return wrap(0, s);
      }
      case K::Nu: {
        if (LinTypePtr elem = stream_elem(t)) {
          bool bare = elem->kind == K::Unit || elem->kind == K::Var || elem->kind == K::Meta;
          return wrap(4, "Str " + (bare ? lin(elem, 5) : "(" + lin(elem, 0) + ")"));
        }
        std::size_t mark = names_.size();
        std::string s = "ν " + bind(t->binder) + ". " + lin(t->left, 0);
        names_.resize(mark);
        return wrap(0, s);
      }
    }
    return "?";
  }

  // Levels: 0 arrows, 1 atoms.
  std::string cart(const CartTypePtr& t, int level) {
    switch (t->kind) {
      case CartType::Kind::Unit: return "1";
      case CartType::Kind::Base: return t->base;
      case CartType::Kind::G: return "G " + lin(t->body, 5);
      case CartType::Kind::Arrow: {
        std::string s = cart(t->dom, 1) + " → " + cart(t->cod, 0);
        return level > 0 ? "(" + s + ")" : s;
      }
    }
    return "?";
  }

  std::string pattern(const PatternPtr& p, bool atomic) {
    using K = Pattern::Kind;
    switch (p->kind) {
      case K::Var: return bind(p->name);
      case K::Unit: return "()";
      case K::Pair: {
        std::string a = pattern(p->subs[0], false);
        return "(" + a + ", " + pattern(p->subs[1], false) + ")";
      }
      case K::Pack: {
        std::string k = bind(p->name);
        return "pack(" + k + ", " + pattern(p->subs[0], false) + ")";
      }
      case K::At: {
        const PatternPtr& in = p->subs[0];
        std::string s = in->kind == K::At ? pattern(in, false) : pattern(in, true);
        s += " @ " + index(p->time);
        return atomic ? "(" + s + ")" : s;
      }
      case K::Evt:
      case K::F: {
        std::string s = std::string(p->kind == K::Evt ? "evt " : "F ") + pattern(p->subs[0], true);
        return atomic ? "(" + s + ")" : s;
      }
    }
    return "?";
  }

  // Levels: 0 open forms (λ, let, select, case), 1 postfix @, 2 application,
  // 3 atoms.
  std::string term(const TermPtr& t, int level) {
    auto wrap = [&](int mine, std::string s) { return mine < level ? "(" + s + ")" : s; };
    auto scoped = [&](auto&& f) {
      std::size_t mark = names_.size();
      std::string s = f();
      names_.resize(mark);
      return s;
    };
    auto let = [&](auto&& pat) {
      return scoped([&] {
        std::string bound = term(t->subs[0], 0);
        std::string p = pat();
        return "let " + p + " = " + bound + " in\n" + indent() + term(t->subs[1], 0);
      });
    };
    switch (t->kind) {
      case TermKind::Var: return name(t->ref);
      case TermKind::Global:
      case TermKind::Builtin: return t->ref.text;
      case TermKind::Unit: return "()";
      case TermKind::Star: return "⋆";
      case TermKind::Color: return t->literal;
      case TermKind::Char: return "'" + t->literal + "'";
      case TermKind::Pair: return "(" + term(t->subs[0], 0) + ", " + term(t->subs[1], 0) + ")";
      case TermKind::Annot:
        return "(" + term(t->subs[0], 0) + " : " +
               (t->lin_annot ? lin(t->lin_annot, 0) : cart(t->cart_annot, 0)) + ")";
      case TermKind::Pack: return "pack(" + index(t->index) + ", " + term(t->subs[0], 0) + ")";
      case TermKind::App: return wrap(2, term(t->subs[0], 2) + " " + term(t->subs[1], 3));
      case TermKind::IndexApp: return wrap(2, term(t->subs[0], 2) + " [" + index(t->index) + "]");
      case TermKind::AtIntro: {
        const TermPtr& in = t->subs[0];
        std::string s = term(in, in->kind == TermKind::AtIntro ? 1 : 2);
        return wrap(1, s + " @ " + index(t->index));
      }
      case TermKind::Evt:
      case TermKind::Fold:
      case TermKind::Unfold:
      case TermKind::GIntro:
      case TermKind::RunG:
      case TermKind::FIntro:
      case TermKind::Inl:
      case TermKind::Inr: {
        const TermPtr& arg = t->subs[0];
        std::string a = is_prefix(arg->kind) ? term(arg, 2) : term(arg, 3);
        return wrap(2, std::string(prefix_keyword(t->kind)) + " " + a);
      }
      case TermKind::Lam:
        return wrap(0, scoped([&] {
          std::string x = bind(t->binds[0]);
          std::string head = "λ" + x;
          if (t->lin_annot) head = "λ(" + x + " : " + lin(t->lin_annot, 0) + ")";
          if (t->cart_annot) head = "λ(" + x + " : " + cart(t->cart_annot, 0) + ")";
          return head + ". " + term(t->subs[0], 0);
        }));
      case TermKind::TLam:
        return wrap(0, scoped([&] {
          std::string i = bind(t->binds[0]);
          return "Λ(" + i + ":" + sort_name(t->sort) + "). " + term(t->subs[0], 0);
        }));
      case TermKind::Let: return wrap(0, let([&] { return bind(t->binds[0]); }));
      case TermKind::LetUnit: return wrap(0, let([&] { return std::string("()"); }));
      case TermKind::LetPair:
        return wrap(0, let([&] {
          std::string a = bind(t->binds[0]);
          return "(" + a + ", " + bind(t->binds[1]) + ")";
        }));
      case TermKind::LetEvt: return wrap(0, let([&] { return "evt " + bind(t->binds[0]); }));
      case TermKind::LetF: return wrap(0, let([&] { return "F " + bind(t->binds[0]); }));
      case TermKind::LetPack:
        return wrap(0, let([&] {
          std::string k = bind(t->binds[0]);
          return "pack(" + k + ", " + bind(t->binds[1]) + ")";
        }));
      case TermKind::LetAt:
        return wrap(0, let([&] { return bind(t->binds[0]) + " @ " + index(t->index); }));
      case TermKind::LetUnitAt: return wrap(0, let([&] { return "() @ " + index(t->index); }));
      case TermKind::LetPairAt:
        return wrap(0, let([&] {
          std::string a = bind(t->binds[0]);
          return "(" + a + ", " + bind(t->binds[1]) + ") @ " + index(t->index);
        }));
      case TermKind::LetPattern: return wrap(0, let([&] { return pattern(t->pattern, false); }));
      case TermKind::Select: {
        std::string e1 = name(t->refs[0]), e2 = name(t->refs[1]);
        std::string b1 = scoped([&] {
          std::string a = bind(t->binds[0]);
          bind_as(t->binds[1], e2);
          return "select " + e1 + " as " + a + " => " + term(t->subs[0], 1);
        });
        std::string b2 = scoped([&] {
          std::string b = bind(t->binds[2]);
          bind_as(t->binds[3], e1);
          return "\n" + indent() + "| " + e2 + " as " + b + " => " + term(t->subs[1], 0);
        });
        return wrap(0, b1 + b2);
      }
      case TermKind::Case: {
        std::string scrut = term(t->subs[0], 0);
        std::string b1 = scoped([&] {
          std::string x = bind(t->binds[0]);
          return "inl " + x + " => " + term(t->subs[1], 1);
        });
        std::string b2 = scoped([&] {
          std::string y = bind(t->binds[1]);
          return "inr " + y + " => " + term(t->subs[2], 0);
        });
        return wrap(0, "case " + scrut + " of " + b1 + "\n" + indent() + "| " + b2);
      }
    }
    return "?";
  }

  std::string bind(const Name& n) {
    std::string text = n.text;
    if (text != "_") {
      int k = 0;
      while (taken(text)) text = n.text + "_" + std::to_string(++k);
    }
    names_.push_back({n.id, text});
    return text;
  }

  void bind_as(const Name& n, const std::string& printed) { names_.push_back({n.id, printed}); }

 private:
  std::vector<std::pair<int, std::string>> names_;

  std::string indent() const { return "  "; }

  bool taken(const std::string& s) const {
    for (auto& [id, text] : names_)
      if (text == s) return true;
    return false;
  }

  std::string name(const Name& n) const {
    if (n.id >= 0)
      for (auto it = names_.rbegin(); it != names_.rend(); ++it)
        if (it->first == n.id) return it->second;
    return n.text;
  }

  static bool is_prefix(TermKind k) {
    switch (k) {
      case TermKind::Evt:
      case TermKind::Fold:
      case TermKind::Unfold:
      case TermKind::GIntro:
      case TermKind::RunG:
      case TermKind::FIntro:
      case TermKind::Inl:
      case TermKind::Inr: return true;
      default: return false;
    }
  }

  static const char* prefix_keyword(TermKind k) {
    switch (k) {
      case TermKind::Evt: return "evt";
      case TermKind::Fold: return "fold";
      case TermKind::Unfold: return "unfold";
      case TermKind::GIntro: return "G";
      case TermKind::RunG: return "runG";
      case TermKind::FIntro: return "F";
      case TermKind::Inl: return "inl";
      case TermKind::Inr: return "inr";
      default: return "?";
    }
  }

  // ν α. ◇(A ⊗ α) with α not free in A.
  static LinTypePtr stream_elem(const LinTypePtr& t) {
    using K = LinType::Kind;
    const LinTypePtr& d = t->left;
    if (d->kind != K::Diamond || d->left->kind != K::Tensor) return nullptr;
    const LinTypePtr& tail = d->left->right;
    if (tail->kind != K::Var || !tail->binder.same(t->binder)) return nullptr;
    if (mentions(d->left->left, t->binder)) return nullptr;
    return d->left->left;
  }

  static bool mentions(const LinTypePtr& t, const Name& a) {
    if (!t) return false;
    if (t->kind == LinType::Kind::Var) return t->binder.same(a);
    if (t->kind == LinType::Kind::F) return cart_mentions(t->cart, a);
    return mentions(t->left, a) || mentions(t->right, a);
  }
  static bool cart_mentions(const CartTypePtr& t, const Name& a) {
    if (!t) return false;
    if (t->kind == CartType::Kind::G) return mentions(t->body, a);
    return cart_mentions(t->dom, a) || cart_mentions(t->cod, a);
  }
};

}  // namespace

std::string show(const IndexTerm& i) { return Printer().index(i); }
std::string show(const LinTypePtr& t) { return Printer().lin(t, 0); }
std::string show(const CartTypePtr& t) { return Printer().cart(t, 0); }
std::string show(const DeclaredType& t) { return t.cartesian() ? show(t.cart) : show(t.lin); }
std::string show(const TermPtr& t) { return Printer().term(t, 0); }
std::string show(const PatternPtr& p) {
  Printer pr;
  return pr.pattern(p, false);
}

std::string show(const SourceProgram& p) {
  std::string out;
  for (const auto& d : p.definitions) {
    Printer pr;
    out += "def " + d.name + " : " + (d.type.cartesian() ? pr.cart(d.type.cart, 0) : pr.lin(d.type.lin, 0)) + " =\n  ";
    for (const auto& n : d.implicit_indices) pr.bind(n);
    out += pr.term(d.body, 0) + "\n\n";
  }
  return out;
}

}  // namespace lw
