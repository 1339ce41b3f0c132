#include "lambda_widget/parser.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <sstream>

namespace lw {

SyntaxError::SyntaxError(Span s, std::string message, std::vector<std::string> exp)
    : std::runtime_error(std::to_string(s.line) + ":" + std::to_string(s.col) + ": " + message),
      span(s),
      expected(std::move(exp)) {}

bool is_builtin_name(std::string_view name) {
  static constexpr std::array<std::string_view, 10> names = {
      "newWidget", "dropWidget", "setColor", "onClick", "onKeypress",
      "out",       "into",       "split",    "join",    "vAttach"};
  return std::find(names.begin(), names.end(), name) != names.end();
}

namespace {

enum class Tok { Ident, Number, IdNumber, Meta, CharLit, Sym, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  Span span;
};

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9') || c == '\''; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::vector<Token> lex(std::string_view src) {
  // Multi-byte symbols first; ASCII spellings map onto the canonical glyph.
  static const std::vector<std::pair<std::string_view, std::string_view>> symbols = {
      {"λ", "λ"},  {"Λ", "Λ"},  {"⊸", "⊸"},  {"⊗", "⊗"},  {"⊕", "⊕"},  {"◇", "◇"},
      {"∀", "∀"},  {"∃", "∃"},  {"ν", "ν"},  {"→", "→"},  {"⋆", "⋆"},  {"⟨", "("},
      {"⟩", ")"},  {"⇒", "=>"}, {"/\\", "Λ"}, {"\\", "λ"}, {"-o", "⊸"}, {"->", "→"},
      {"=>", "=>"}, {"<>", "◇"}, {"*", "*"},  {"+", "⊕"},  {"(", "("},  {")", ")"},
      {",", ","},  {".", "."},  {":", ":"},  {"=", "="},  {"@", "@"},  {"[", "["},
      {"]", "]"},  {"|", "|"},  {"∞", "∞"},
  };
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else if ((static_cast<unsigned char>(src[i]) & 0xC0) != 0x80) {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (src.substr(i, 2) == "--") {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.span = {line, col};
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && is_ident_char(src[j])) ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      if (t.text == "forall") t = Token{Tok::Sym, "∀", t.span};
      else if (t.text == "exists") t = Token{Tok::Sym, "∃", t.span};
      else if (t.text == "nu") t = Token{Tok::Sym, "ν", t.span};
      advance(j - i);
      out.push_back(t);
      continue;
    }
    if (is_digit(c) || ((c == '#' || c == '?') && i + 1 < src.size() && is_digit(src[i + 1]))) {
      std::size_t j = i + (is_digit(c) ? 0 : 1);
      std::size_t start = j;
      while (j < src.size() && is_digit(src[j])) ++j;
      t.kind = c == '#' ? Tok::IdNumber : c == '?' ? Tok::Meta : Tok::Number;
      t.text = std::string(src.substr(start, j - start));
      advance(j - i);
      out.push_back(t);
      continue;
    }
    if (c == '\'') {
      std::size_t j = i + 1;
      if (j >= src.size()) throw SyntaxError(t.span, "unterminated character literal");
      std::size_t len = 1;
      unsigned char lead = static_cast<unsigned char>(src[j]);
      if (lead >= 0xF0) len = 4;
      else if (lead >= 0xE0) len = 3;
      else if (lead >= 0xC0) len = 2;
      if (j + len >= src.size() || src[j + len] != '\'')
        throw SyntaxError(t.span, "malformed character literal");
      t.kind = Tok::CharLit;
      t.text = std::string(src.substr(j, len));
      advance(len + 2);
      out.push_back(t);
      continue;
    }
    bool matched = false;
    for (const auto& [spelling, canon] : symbols) {
      if (src.substr(i, spelling.size()) == spelling) {
        t.kind = Tok::Sym;
        t.text = std::string(canon);
        advance(spelling.size());
        out.push_back(t);
        matched = true;
        break;
      }
    }
    if (!matched) throw SyntaxError(t.span, "unexpected character '" + std::string(1, c) + "'");
  }
  Token end;
  end.kind = Tok::End;
  end.span = {line, col};
  out.push_back(end);
  return out;
}

const std::vector<std::string_view> kTypeKeywords = {"I", "F", "G", "Widget", "Prefix", "Str",
                                                      "Color", "Char", "Id", "Time"};
const std::vector<std::string_view> kTermKeywords = {
    "let", "in", "select", "as", "case", "of", "inl", "inr", "evt", "fold", "unfold", "F", "G",
    "runG", "pack", "def", "Red", "Blue", "Green"};

bool is_term_keyword(std::string_view s) {
  return std::find(kTermKeywords.begin(), kTermKeywords.end(), s) != kTermKeywords.end();
}

enum class BinderKind { Term, Index, Unknown };

struct ScopeEntry {
  std::string text;
  int id;
  BinderKind kind;
};

// Pattern under construction: names are resolved after the whole pattern has
// been read, so `@x` inside a pattern can refer to a binder to its left.
struct RawPattern {
  Pattern::Kind kind = Pattern::Kind::Var;
  Span span;
  std::string name;
  std::vector<RawPattern> subs;
  Token time;  // At
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  SourceProgram program(std::string file) {
    SourceProgram p;
    p.file = std::move(file);
    while (!at_end()) {
      Definition d = definition();
      if (p.find(d.name)) throw SyntaxError(d.span, "duplicate definition '" + d.name + "'");
      p.definitions.push_back(std::move(d));
    }
    if (p.definitions.empty()) throw SyntaxError(peek().span, "empty program", {"def"});
    p.entry = p.find("main") ? "main" : p.definitions.back().name;
    return p;
  }

  TermPtr whole_term() {
    TermPtr t = term();
    expect_end();
    return t;
  }

  LinTypePtr whole_lin_type() {
    LinTypePtr t = lin_type();
    expect_end();
    return t;
  }

  CartTypePtr whole_cart_type() {
    CartTypePtr t = cart_type();
    expect_end();
    return t;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<ScopeEntry> scope_;
  std::vector<ScopeEntry> type_scope_;

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == Tok::End; }
  Token next() {
    Token t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool is_sym(std::string_view s, std::size_t k = 0) const {
    return peek(k).kind == Tok::Sym && peek(k).text == s;
  }
  bool is_kw(std::string_view s, std::size_t k = 0) const {
    return peek(k).kind == Tok::Ident && peek(k).text == s;
  }
  bool accept_sym(std::string_view s) {
    if (!is_sym(s)) return false;
    next();
    return true;
  }
  [[noreturn]] void fail(std::string msg, std::vector<std::string> expected) const {
    const Token& t = peek();
    std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(t.span, msg + " (found " + found + ")", std::move(expected));
  }
  void expect_sym(std::string_view s) {
    if (!accept_sym(s)) fail("expected '" + std::string(s) + "'", {std::string(s)});
  }
  void expect_kw(std::string_view s) {
    if (!is_kw(s)) fail("expected '" + std::string(s) + "'", {std::string(s)});
    next();
  }
  void expect_end() {
    if (!at_end()) fail("unexpected trailing input", {"end of input"});
  }
  std::string ident(const char* what) {
    if (peek().kind != Tok::Ident || is_term_keyword(peek().text)) fail(std::string("expected ") + what, {what});
    return next().text;
  }

  // ---- scopes -------------------------------------------------------------

  Name bind(const std::string& text, BinderKind kind) {
    Name n{text, fresh_id()};
    scope_.push_back({text, n.id, kind});
    return n;
  }
  const ScopeEntry* lookup(const std::string& text) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->text == text) return &*it;
    return nullptr;
  }
  struct ScopeMark {
    std::size_t terms, types;
  };
  ScopeMark mark() const { return {scope_.size(), type_scope_.size()}; }
  void restore(ScopeMark m) {
    scope_.resize(m.terms);
    type_scope_.resize(m.types);
  }

  // ---- indices ------------------------------------------------------------

  bool starts_index() const {
    return peek().kind == Tok::Ident || peek().kind == Tok::Number || peek().kind == Tok::IdNumber ||
           peek().kind == Tok::Meta;
  }

  IndexTerm index_from(const Token& t) const {
    switch (t.kind) {
      case Tok::Number: return IndexTerm::time(std::stoull(t.text));
      case Tok::IdNumber: return IndexTerm::ident(std::stoull(t.text));
      case Tok::Meta: return IndexTerm::metavar(std::stoi(t.text));
      case Tok::Ident: {
        const ScopeEntry* e = lookup(t.text);
        return IndexTerm::variable(Name{t.text, e ? e->id : -1});
      }
      default: break;
    }
    throw SyntaxError(t.span, "expected an index", {"identifier", "number", "#number"});
  }

  IndexTerm index() {
    if (is_sym("∞")) throw SyntaxError(peek().span, "the point at infinity cannot appear in programs");
    if (!starts_index()) fail("expected an index", {"identifier", "number", "#number"});
    return index_from(next());
  }

  Sort sort() {
    if (is_kw("Id")) {
      next();
      return Sort::Id;
    }
    if (is_kw("Time")) {
      next();
      return Sort::Time;
    }
    fail("expected a sort", {"Id", "Time"});
  }

  // `(i:Id)`, `(i,j:Id)`; one or more groups.
  std::vector<std::pair<std::string, Sort>> index_binders() {
    std::vector<std::pair<std::string, Sort>> out;
    if (!is_sym("(")) fail("expected index binder", {"("});
    while (accept_sym("(")) {
      std::vector<std::string> names{ident("index variable")};
      while (accept_sym(",")) names.push_back(ident("index variable"));
      expect_sym(":");
      Sort s = sort();
      expect_sym(")");
      for (auto& n : names) out.emplace_back(n, s);
    }
    return out;
  }

  // ---- types --------------------------------------------------------------

 public:
  LinTypePtr lin_type() {
    if (is_sym("∀") || is_sym("∃")) {
      bool all = peek().text == "∀";
      next();
      auto m = mark();
      auto binders = index_binders();
      std::vector<Name> names;
      for (auto& [text, s] : binders) names.push_back(bind(text, BinderKind::Index));
      expect_sym(".");
      LinTypePtr body = lin_type();
      restore(m);
      for (std::size_t k = binders.size(); k-- > 0;)
        body = all ? ty::forall(names[k], binders[k].second, body) : ty::exists(names[k], binders[k].second, body);
      return body;
    }
    if (accept_sym("ν")) {
      std::string a = ident("type variable");
      Name n{a, fresh_id()};
      type_scope_.push_back({a, n.id, BinderKind::Term});
      expect_sym(".");
      LinTypePtr body = lin_type();
      type_scope_.pop_back();
      return ty::nu(n, body);
    }
    LinTypePtr lhs = lin_sum();
    if (accept_sym("⊸")) return ty::lolli(lhs, lin_type());
    return lhs;
  }

  CartTypePtr cart_type() {
    CartTypePtr lhs = cart_atom();
    if (accept_sym("→")) return ty::arrow(lhs, cart_type());
    return lhs;
  }

 private:
  LinTypePtr lin_sum() {
    LinTypePtr lhs = lin_tensor();
    if (accept_sym("⊕")) return ty::sum(lhs, lin_sum());
    return lhs;
  }
  LinTypePtr lin_tensor() {
    LinTypePtr lhs = lin_prefix();
    if (accept_sym("⊗") || accept_sym("*")) return ty::tensor(lhs, lin_tensor());
    return lhs;
  }
  LinTypePtr lin_prefix() {
    if (accept_sym("◇")) return ty::diamond(lin_prefix());
    return lin_postfix();
  }
  LinTypePtr lin_postfix() {
    LinTypePtr t = lin_atom();
    while (accept_sym("@")) t = ty::at(t, index());
    return t;
  }
  LinTypePtr lin_atom() {
    if (accept_sym("(")) {
      LinTypePtr t = lin_type();
      expect_sym(")");
      return t;
    }
    if (is_sym("◇") || is_sym("∀") || is_sym("∃") || is_sym("ν")) return lin_type();
    if (peek().kind != Tok::Ident) fail("expected a linear type", {"I", "(", "◇", "Widget", "F", "type variable"});
    const std::string& w = peek().text;
    if (w == "I") {
      next();
      return ty::unit();
    }
    if (w == "F") {
      next();
      return ty::f(cart_atom());
    }
    if (w == "Widget") {
      next();
      return ty::widget(index());
    }
    if (w == "Prefix") {
      next();
      IndexTerm i = index();
      return ty::prefix(i, index());
    }
    if (w == "Str") {
      next();
      return ty::stream(lin_postfix());
    }
    if (std::find(kTypeKeywords.begin(), kTypeKeywords.end(), w) != kTypeKeywords.end() || is_term_keyword(w))
      fail("expected a linear type", {"I", "(", "◇", "Widget", "F", "type variable"});
    Token t = next();
    for (auto it = type_scope_.rbegin(); it != type_scope_.rend(); ++it)
      if (it->text == t.text) return ty::var(Name{t.text, it->id});
    return ty::var(Name{t.text, -1});
  }
  CartTypePtr cart_atom() {
    if (accept_sym("(")) {
      CartTypePtr t = cart_type();
      expect_sym(")");
      return t;
    }
    if (peek().kind == Tok::Number && peek().text == "1") {
      next();
      return ty::one();
    }
    if (is_kw("Color") || is_kw("Char")) return ty::base(next().text);
    if (is_kw("G")) {
      next();
      return ty::g(lin_atom());
    }
    fail("expected a Cartesian type", {"1", "Color", "Char", "G", "("});
  }

  DeclaredType declared_type() {
    std::size_t start = pos_;
    auto m = mark();
    try {
      LinTypePtr t = lin_type();
      if (is_sym("=")) return DeclaredType{nullptr, t};
    } catch (const SyntaxError&) {
    }
    pos_ = start;
    restore(m);
    CartTypePtr c = cart_type();
    if (!is_sym("=")) fail("expected '=' after the declared type", {"="});
    return DeclaredType{c, nullptr};
  }

  Definition definition() {
    Definition d;
    d.span = peek().span;
    expect_kw("def");
    d.name = ident("definition name");
    expect_sym(":");
    d.type = declared_type();
    expect_sym("=");
    auto m = mark();
    if (d.type.lin && d.type.lin->kind == LinType::Kind::Forall && !is_sym("Λ")) {
      for (LinTypePtr t = d.type.lin; t->kind == LinType::Kind::Forall; t = t->left)
        d.implicit_indices.push_back(bind(t->binder.text, BinderKind::Index));
    }
    d.body = term();
    restore(m);
    if (!at_end() && !is_kw("def")) fail("expected the next definition", {"def", "end of input"});
    return d;
  }

  // ---- terms --------------------------------------------------------------

  static std::shared_ptr<Term> node(TermKind k, Span s) {
    auto t = std::make_shared<Term>();
    t->kind = k;
    t->span = s;
    return t;
  }

 public:
  TermPtr term() {
    Span s = peek().span;
    if (accept_sym("λ")) return lambda(s);
    if (accept_sym("Λ")) {
      auto m = mark();
      auto binders = index_binders();
      std::vector<Name> names;
      for (auto& [text, so] : binders) names.push_back(bind(text, BinderKind::Index));
      expect_sym(".");
      TermPtr body = term();
      restore(m);
      for (std::size_t k = binders.size(); k-- > 0;) {
        auto t = node(TermKind::TLam, s);
        t->binds = {names[k]};
        t->sort = binders[k].second;
        t->subs = {body};
        body = t;
      }
      return body;
    }
    if (is_kw("let")) return let_term();
    if (is_kw("select")) return select_term();
    if (is_kw("case")) return case_term();
    return postfix_term();
  }

 private:
  TermPtr lambda(Span s) {
    struct Param {
      std::string name;
      LinTypePtr lin;
      CartTypePtr cart;
    };
    std::vector<Param> params;
    while (!is_sym(".")) {
      if (accept_sym("(")) {
        Param p{ident("parameter"), nullptr, nullptr};
        expect_sym(":");
        std::size_t start = pos_;
        auto m = mark();
        try {
          p.lin = lin_type();
          if (!is_sym(")")) throw SyntaxError(peek().span, "");
        } catch (const SyntaxError&) {
          pos_ = start;
          restore(m);
          p.lin = nullptr;
          p.cart = cart_type();
        }
        expect_sym(")");
        params.push_back(p);
      } else {
        params.push_back({ident("parameter"), nullptr, nullptr});
      }
    }
    if (params.empty()) fail("expected a parameter", {"identifier"});
    expect_sym(".");
    auto m = mark();
    std::vector<Name> names;
    for (auto& p : params) names.push_back(bind(p.name, BinderKind::Term));
    TermPtr body = term();
    restore(m);
    for (std::size_t k = params.size(); k-- > 0;) {
      auto t = node(TermKind::Lam, s);
      t->binds = {names[k]};
      t->lin_annot = params[k].lin;
      t->cart_annot = params[k].cart;
      t->subs = {body};
      body = t;
    }
    return body;
  }

  RawPattern raw_pattern() {
    RawPattern p = raw_pattern_atom();
    while (is_sym("@")) {
      Span s = next().span;
      if (!starts_index()) fail("expected an index", {"identifier", "number"});
      RawPattern at;
      at.kind = Pattern::Kind::At;
      at.span = s;
      at.time = next();
      at.subs.push_back(std::move(p));
      p = std::move(at);
    }
    return p;
  }

  RawPattern raw_pattern_atom() {
    RawPattern p;
    p.span = peek().span;
    if (accept_sym("(")) {
      if (accept_sym(")")) {
        p.kind = Pattern::Kind::Unit;
        return p;
      }
      RawPattern first = raw_pattern();
      if (accept_sym(")")) return first;
      expect_sym(",");
      RawPattern second = raw_pattern();
      expect_sym(")");
      p.kind = Pattern::Kind::Pair;
      p.subs.push_back(std::move(first));
      p.subs.push_back(std::move(second));
      return p;
    }
    if (is_kw("pack")) {
      next();
      expect_sym("(");
      p.kind = Pattern::Kind::Pack;
      p.name = ident("index variable");
      expect_sym(",");
      p.subs.push_back(raw_pattern());
      expect_sym(")");
      return p;
    }
    if (is_kw("evt") || is_kw("F")) {
      p.kind = next().text == "evt" ? Pattern::Kind::Evt : Pattern::Kind::F;
      p.subs.push_back(raw_pattern_atom());
      return p;
    }
    p.kind = Pattern::Kind::Var;
    p.name = ident("pattern");
    return p;
  }

  // Assigns binder ids left to right and resolves `@` indices. Binders are
  // pushed on `pending` rather than the scope so the scrutinee cannot see them.
  PatternPtr resolve_pattern(const RawPattern& raw, std::vector<ScopeEntry>& pending, bool first_of_pair) {
    auto p = std::make_shared<Pattern>();
    p->kind = raw.kind;
    p->span = raw.span;
    switch (raw.kind) {
      case Pattern::Kind::Var: {
        p->name = Name{raw.name, fresh_id()};
        pending.push_back({raw.name, p->name.id, first_of_pair ? BinderKind::Unknown : BinderKind::Term});
        break;
      }
      case Pattern::Kind::Pack: {
        p->name = Name{raw.name, fresh_id()};
        pending.push_back({raw.name, p->name.id, BinderKind::Index});
        p->subs.push_back(resolve_pattern(raw.subs[0], pending, false));
        break;
      }
      case Pattern::Kind::At: {
        p->subs.push_back(resolve_pattern(raw.subs[0], pending, false));
        const Token& t = raw.time;
        if (t.kind == Tok::Ident) {
          int id = -1;
          for (auto it = pending.rbegin(); it != pending.rend(); ++it)
            if (it->text == t.text) {
              id = it->id;
              it->kind = BinderKind::Index;
              break;
            }
          if (id < 0) {
            const ScopeEntry* e = lookup(t.text);
            id = e ? e->id : -1;
          }
          p->time = IndexTerm::variable(Name{t.text, id});
        } else {
          p->time = index_from(t);
        }
        break;
      }
      case Pattern::Kind::Pair:
        p->subs.push_back(resolve_pattern(raw.subs[0], pending, true));
        p->subs.push_back(resolve_pattern(raw.subs[1], pending, false));
        break;
      case Pattern::Kind::Evt:
      case Pattern::Kind::F: p->subs.push_back(resolve_pattern(raw.subs[0], pending, false)); break;
      case Pattern::Kind::Unit: break;
    }
    return p;
  }

  TermPtr let_term() {
    Span s = next().span;
    RawPattern raw = raw_pattern();
    expect_sym("=");
    TermPtr bound = term();
    expect_kw("in");
    std::vector<ScopeEntry> pending;
    PatternPtr pat = resolve_pattern(raw, pending, false);
    auto m = mark();
    for (auto& e : pending) scope_.push_back(e);
    TermPtr body = term();
    restore(m);
    return build_let(s, pat, bound, body);
  }

  static bool is_var(const PatternPtr& p) { return p->kind == Pattern::Kind::Var; }

  TermPtr build_let(Span s, const PatternPtr& pat, TermPtr bound, TermPtr body) {
    using PK = Pattern::Kind;
    auto mk = [&](TermKind k) {
      auto t = node(k, s);
      t->subs = {bound, body};
      return t;
    };
    switch (pat->kind) {
      case PK::Var: {
        auto t = mk(TermKind::Let);
        t->binds = {pat->name};
        return t;
      }
      case PK::Unit: return mk(TermKind::LetUnit);
      case PK::Evt:
        if (is_var(pat->subs[0])) {
          auto t = mk(TermKind::LetEvt);
          t->binds = {pat->subs[0]->name};
          return t;
        }
        break;
      case PK::F:
        if (is_var(pat->subs[0])) {
          auto t = mk(TermKind::LetF);
          t->binds = {pat->subs[0]->name};
          return t;
        }
        break;
      case PK::Pack:
        if (is_var(pat->subs[0])) {
          auto t = mk(TermKind::LetPack);
          t->binds = {pat->name, pat->subs[0]->name};
          return t;
        }
        break;
      case PK::At: {
        const PatternPtr& in = pat->subs[0];
        if (is_var(in)) {
          auto t = mk(TermKind::LetAt);
          t->binds = {in->name};
          t->index = pat->time;
          return t;
        }
        if (in->kind == PK::Unit) {
          auto t = mk(TermKind::LetUnitAt);
          t->index = pat->time;
          return t;
        }
        if (in->kind == PK::Pair && is_var(in->subs[0]) && is_var(in->subs[1]) &&
            in->subs[0]->name.text != in->subs[1]->name.text) {
          auto t = mk(TermKind::LetPairAt);
          t->binds = {in->subs[0]->name, in->subs[1]->name};
          t->index = pat->time;
          return t;
        }
        break;
      }
      case PK::Pair:
        if (is_var(pat->subs[0]) && is_var(pat->subs[1]) && pat->subs[0]->name.text != pat->subs[1]->name.text) {
          auto t = mk(TermKind::LetPair);
          t->binds = {pat->subs[0]->name, pat->subs[1]->name};
          return t;
        }
        break;
    }
    auto t = mk(TermKind::LetPattern);
    t->pattern = pat;
    return t;
  }

  TermPtr select_term() {
    Span s = next().span;
    auto t = node(TermKind::Select, s);
    auto ref = [&]() {
      Token tok = peek();
      std::string text = ident("event variable");
      const ScopeEntry* e = lookup(text);
      return Name{text, e ? e->id : -1};
    };
    Name e1 = ref();
    expect_kw("as");
    std::string a = ident("binder");
    expect_sym("=>");
    auto m = mark();
    Name an = bind(a, BinderKind::Term);
    std::string e2_text;
    // The other scrutinee is named after the branch arrow; peek ahead for it.
    std::size_t save = pos_;
    int depth = 0;
    while (!at_end()) {
      if (is_sym("(")) ++depth;
      if (is_sym(")")) --depth;
      if (depth == 0 && is_sym("|") && peek(1).kind == Tok::Ident && is_kw("as", 2)) {
        e2_text = peek(1).text;
        break;
      }
      next();
    }
    pos_ = save;
    if (e2_text.empty()) fail("select needs a second branch", {"|"});
    Name e2_rebind = bind(e2_text, BinderKind::Term);
    TermPtr b1 = term();
    restore(m);
    expect_sym("|");
    Name e2 = ref();
    expect_kw("as");
    std::string b = ident("binder");
    expect_sym("=>");
    Name bn = bind(b, BinderKind::Term);
    Name e1_rebind = bind(e1.text, BinderKind::Term);
    TermPtr b2 = term();
    restore(m);
    t->refs = {e1, e2};
    t->binds = {an, e2_rebind, bn, e1_rebind};
    t->subs = {b1, b2};
    return t;
  }

  TermPtr case_term() {
    Span s = next().span;
    TermPtr scrut = term();
    expect_kw("of");
    expect_kw("inl");
    std::string x = ident("binder");
    expect_sym("=>");
    auto m = mark();
    Name xn = bind(x, BinderKind::Term);
    TermPtr b1 = term();
    restore(m);
    expect_sym("|");
    expect_kw("inr");
    std::string y = ident("binder");
    expect_sym("=>");
    Name yn = bind(y, BinderKind::Term);
    TermPtr b2 = term();
    restore(m);
    auto t = node(TermKind::Case, s);
    t->binds = {xn, yn};
    t->subs = {scrut, b1, b2};
    return t;
  }

  TermPtr postfix_term() {
    TermPtr t = app_term();
    while (is_sym("@")) {
      Span s = next().span;
      auto n = node(TermKind::AtIntro, s);
      n->subs = {t};
      n->index = index();
      t = n;
    }
    return t;
  }

  bool starts_atom() const {
    const Token& t = peek();
    if (t.kind == Tok::Ident) {
      if (t.text == "pack" || t.text == "Red" || t.text == "Blue" || t.text == "Green") return true;
      return !is_term_keyword(t.text);
    }
    if (t.kind == Tok::CharLit || t.kind == Tok::Number || t.kind == Tok::IdNumber || t.kind == Tok::Meta)
      return true;
    return is_sym("(") || is_sym("[") || is_sym("*") || is_sym("⋆");
  }

  bool is_prefix_keyword() const {
    static const std::vector<std::string_view> kws = {"evt", "fold", "unfold", "F", "G", "runG", "inl", "inr"};
    return peek().kind == Tok::Ident && std::find(kws.begin(), kws.end(), peek().text) != kws.end();
  }

  TermPtr prefix_app() {
    Span s = peek().span;
    std::string kw = next().text;
    TermPtr arg = is_prefix_keyword() ? prefix_app() : atom();
    static const std::vector<std::pair<std::string_view, TermKind>> kinds = {
        {"evt", TermKind::Evt},   {"fold", TermKind::Fold}, {"unfold", TermKind::Unfold},
        {"F", TermKind::FIntro},  {"G", TermKind::GIntro},  {"runG", TermKind::RunG},
        {"inl", TermKind::Inl},   {"inr", TermKind::Inr}};
    auto t = node(TermKind::Unit, s);
    for (auto& [k, kind] : kinds)
      if (k == kw) t->kind = kind;
    t->subs = {arg};
    return t;
  }

  TermPtr app_term() {
    TermPtr head;
    if (is_prefix_keyword()) {
      head = prefix_app();
    } else {
      if (!starts_atom()) fail("expected a term", {"identifier", "(", "λ", "let", "select"});
      head = atom();
    }
    while (starts_atom()) {
      Span s = peek().span;
      if (accept_sym("[")) {
        auto n = node(TermKind::IndexApp, s);
        n->subs = {head};
        n->index = index();
        expect_sym("]");
        head = n;
        continue;
      }
      const Token& t = peek();
      bool index_arg = t.kind == Tok::Number || t.kind == Tok::IdNumber || t.kind == Tok::Meta;
      if (t.kind == Tok::Ident) {
        const ScopeEntry* e = lookup(t.text);
        index_arg = e && e->kind == BinderKind::Index;
      }
      if (index_arg) {
        auto n = node(TermKind::IndexApp, s);
        n->subs = {head};
        n->index = index_from(next());
        head = n;
        continue;
      }
      auto n = node(TermKind::App, s);
      n->subs = {head, atom()};
      head = n;
    }
    return head;
  }

  TermPtr atom() {
    Span s = peek().span;
    const Token& t = peek();
    if (t.kind == Tok::CharLit) {
      auto n = node(TermKind::Char, s);
      n->literal = next().text;
      return n;
    }
    if (accept_sym("*") || accept_sym("⋆")) return node(TermKind::Star, s);
    if (accept_sym("(")) {
      if (accept_sym(")")) return node(TermKind::Unit, s);
      TermPtr first = term();
      if (accept_sym(")")) return first;
      if (accept_sym(",")) {
        TermPtr second = term();
        expect_sym(")");
        auto n = node(TermKind::Pair, s);
        n->subs = {first, second};
        return n;
      }
      if (accept_sym(":")) {
        auto n = node(TermKind::Annot, s);
        n->subs = {first};
        std::size_t start = pos_;
        auto m = mark();
        try {
          n->lin_annot = lin_type();
          if (!is_sym(")")) throw SyntaxError(peek().span, "");
        } catch (const SyntaxError&) {
          pos_ = start;
          restore(m);
          n->lin_annot = nullptr;
          n->cart_annot = cart_type();
        }
        expect_sym(")");
        return n;
      }
      fail("expected ')'", {")", ",", ":"});
    }
    if (t.kind != Tok::Ident) fail("expected a term", {"identifier", "(", "⋆"});
    if (t.text == "Red" || t.text == "Blue" || t.text == "Green") {
      auto n = node(TermKind::Color, s);
      n->literal = next().text;
      return n;
    }
    if (t.text == "pack") {
      next();
      expect_sym("(");
      auto n = node(TermKind::Pack, s);
      n->index = index();
      expect_sym(",");
      n->subs = {term()};
      expect_sym(")");
      return n;
    }
    if (is_term_keyword(t.text)) fail("unexpected keyword", {"term"});
    std::string text = next().text;
    if (const ScopeEntry* e = lookup(text)) {
      auto n = node(TermKind::Var, s);
      n->ref = Name{text, e->id};
      return n;
    }
    auto n = node(is_builtin_name(text) ? TermKind::Builtin : TermKind::Global, s);
    n->ref = Name{text, -1};
    return n;
  }
};

}  // namespace

SourceProgram parse(std::string_view source, std::string file) {
  Parser p(lex(source));
  return p.program(std::move(file));
}

TermPtr parse_term(std::string_view source) {
  Parser p(lex(source));
  return p.whole_term();
}

LinTypePtr parse_lin_type(std::string_view source) {
  Parser p(lex(source));
  return p.whole_lin_type();
}

CartTypePtr parse_cart_type(std::string_view source) {
  Parser p(lex(source));
  return p.whole_cart_type();
}

}  // namespace lw
