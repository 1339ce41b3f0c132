#pragma once

// Abstract syntax for the three syntactic classes of the calculus: index
// terms, Cartesian types/terms and linear types/terms. Nodes are immutable and
// shared; every binder carries a program-unique id after parsing.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lw {

struct Span {
  int line = 0;
  int col = 0;
};

enum class Sort { Id, Time };

const char* sort_name(Sort s);

/// A variable name. `id` is unique per binder after parsing; free type atoms
/// and unresolved globals keep id == -1 and compare by text.
struct Name {
  std::string text;
  int id = -1;

  bool same(const Name& other) const {
    if (id >= 0 || other.id >= 0) return id == other.id;
    return text == other.text;
  }
};

/// Allocates a fresh binder id. Thread-safe.
int fresh_id();

struct IndexTerm {
  enum class Kind { Var, TimeLit, IdLit, Infinity, Meta };

  Kind kind = Kind::TimeLit;
  Name var;             // Var
  std::uint64_t value = 0;  // TimeLit / IdLit
  int meta = -1;        // Meta

  static IndexTerm variable(Name n) {
    IndexTerm t;
    t.kind = Kind::Var;
    t.var = std::move(n);
    return t;
  }
  static IndexTerm time(std::uint64_t v) {
    IndexTerm t;
    t.kind = Kind::TimeLit;
    t.value = v;
    return t;
  }
  static IndexTerm ident(std::uint64_t v) {
    IndexTerm t;
    t.kind = Kind::IdLit;
    t.value = v;
    return t;
  }
  static IndexTerm infinity() {
    IndexTerm t;
    t.kind = Kind::Infinity;
    return t;
  }
  static IndexTerm metavar(int m) {
    IndexTerm t;
    t.kind = Kind::Meta;
    t.meta = m;
    return t;
  }

  bool is_var() const { return kind == Kind::Var; }
  bool is_meta() const { return kind == Kind::Meta; }
};

bool operator==(const IndexTerm& a, const IndexTerm& b);
inline bool operator!=(const IndexTerm& a, const IndexTerm& b) { return !(a == b); }

struct CartType;
struct LinType;
using CartTypePtr = std::shared_ptr<const CartType>;
using LinTypePtr = std::shared_ptr<const LinType>;

struct CartType {
  enum class Kind { Unit, Arrow, G, Base };

  Kind kind = Kind::Unit;
  CartTypePtr dom, cod;  // Arrow
  LinTypePtr body;       // G
  std::string base;      // Base: "Color" | "Char"
};

struct LinType {
  enum class Kind {
    Unit,     // I
    Tensor,   // A ⊗ B
    Lolli,    // A ⊸ B
    Sum,      // A ⊕ B
    Diamond,  // ◇A
    At,       // A @ τ
    F,        // F X
    Forall,   // ∀(i:σ). A
    Exists,   // ∃(i:σ). A
    Widget,   // Widget i
    Prefix,   // Prefix i t
    Nu,       // ν α. A
    Var,      // α (bound by ν) or a free atom (id == -1)
    Meta,     // type metavariable, only during checking
  };

  Kind kind = Kind::Unit;
  LinTypePtr left, right;  // Tensor/Lolli/Sum use both; Diamond/At/Forall/Exists/Nu use left
  CartTypePtr cart;        // F
  Name binder;             // Forall/Exists/Nu binder, Var name
  Sort sort = Sort::Time;  // Forall/Exists
  IndexTerm index;         // At time, Widget id, Prefix id
  IndexTerm index2;        // Prefix time
  int meta = -1;
};

namespace ty {
CartTypePtr one();
CartTypePtr arrow(CartTypePtr a, CartTypePtr b);
CartTypePtr g(LinTypePtr a);
CartTypePtr base(std::string name);

LinTypePtr unit();
LinTypePtr tensor(LinTypePtr a, LinTypePtr b);
LinTypePtr lolli(LinTypePtr a, LinTypePtr b);
LinTypePtr sum(LinTypePtr a, LinTypePtr b);
LinTypePtr diamond(LinTypePtr a);
LinTypePtr at(LinTypePtr a, IndexTerm t);
LinTypePtr f(CartTypePtr x);
LinTypePtr forall(Name i, Sort s, LinTypePtr a);
LinTypePtr exists(Name i, Sort s, LinTypePtr a);
LinTypePtr widget(IndexTerm i);
LinTypePtr prefix(IndexTerm i, IndexTerm t);
LinTypePtr nu(Name a, LinTypePtr body);
LinTypePtr var(Name a);
LinTypePtr meta(int m);
/// Str A := ν α. ◇(A ⊗ α)
LinTypePtr stream(LinTypePtr elem);
}  // namespace ty

/// Equality up to renaming of index and type binders. Metavariables compare by
/// number.
bool alpha_eq(const LinTypePtr& a, const LinTypePtr& b);
bool alpha_eq(const CartTypePtr& a, const CartTypePtr& b);

/// A declared top-level type: exactly one of the two fragments.
struct DeclaredType {
  CartTypePtr cart;
  LinTypePtr lin;

  bool cartesian() const { return cart != nullptr; }
};

struct Pattern;
using PatternPtr = std::shared_ptr<const Pattern>;

/// Surface let-patterns; removed by desugaring.
struct Pattern {
  enum class Kind { Var, Unit, Pair, Pack, At, Evt, F };

  Kind kind = Kind::Var;
  Span span;
  Name name;                   // Var, Pack index binder
  std::vector<PatternPtr> subs;
  IndexTerm time;              // At
};

enum class TermKind {
  Var,        // ref
  Global,     // ref (top-level definition)
  Builtin,    // ref.text
  Lam,        // binds[0], subs[0]; optional annotation
  App,        // subs[0] subs[1]
  IndexApp,   // subs[0], index
  TLam,       // binds[0], sort, subs[0]
  Unit,       // ⟨⟩
  LetUnit,    // subs t1 t2
  Pair,       // subs a b
  LetPair,    // binds x y, subs t1 t2
  Evt,        // subs t
  LetEvt,     // binds a, subs t1 t2
  AtIntro,    // subs t, index
  LetAt,      // binds a, index, subs t1 t2
  LetUnitAt,  // index, subs t1 t2       (I_τ-E)
  LetPairAt,  // binds a b, index, subs t1 t2  (⊗_τ-E)
  GIntro,     // subs t
  RunG,       // subs e
  FIntro,     // subs e
  LetF,       // binds x, subs t1 t2
  Pack,       // index, subs t
  LetPack,    // binds k a, subs t1 t2
  Select,     // refs e1 e2, binds a e2' b e1', subs branch1 branch2
  Fold,       // subs t
  Unfold,     // subs t
  Inl,        // subs t
  Inr,        // subs t
  Case,       // binds x y, subs scrutinee t1 t2
  Let,        // binds x, subs t1 t2
  Star,       // ⋆
  Color,      // literal
  Char,       // literal
  Annot,      // subs t, annotation
  LetPattern, // surface only: pattern, subs t1 t2
};

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  TermKind kind = TermKind::Unit;
  Span span;
  Name ref;
  std::vector<Name> refs;
  std::vector<Name> binds;
  std::vector<TermPtr> subs;
  IndexTerm index;
  Sort sort = Sort::Id;
  LinTypePtr lin_annot;
  CartTypePtr cart_annot;
  std::string literal;
  PatternPtr pattern;
};

/// Structural equality up to the binder ids chosen by parsing.
bool term_alpha_eq(const TermPtr& a, const TermPtr& b);

struct Definition {
  std::string name;
  DeclaredType type;
  TermPtr body;
  Span span;
  /// Leading ∀ binders of the declared type that the body uses implicitly
  /// (the body does not start with Λ). Desugaring wraps the body in Λs.
  std::vector<Name> implicit_indices;
};

struct SourceProgram {
  std::string file;
  std::vector<Definition> definitions;
  std::string entry;

  const Definition* find(const std::string& name) const;
};

// Index-term helpers shared by the checker and the substitution code.
bool occurs_free(const LinTypePtr& t, int index_binder_id);
void free_atoms(const LinTypePtr& t, std::vector<std::string>& out);

}  // namespace lw
