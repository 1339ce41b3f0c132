#include <functional>
#include <random>

#include "doctest.h"
#include "lambda_widget/desugar.hpp"
#include "lambda_widget/parser.hpp"
#include "lambda_widget/pretty.hpp"
#include "lambda_widget/subst.hpp"
#include "lambda_widget/typecheck.hpp"
#include "support.hpp"

using namespace lw;
using namespace lwtest;
using namespace lw::ty;

namespace {

std::string type_of(const CheckResult& r, const std::string& name) {
  for (const auto& [n, t] : r.types)
    if (n == name) return show(t);
  return "<missing>";
}

TypeError first_error(const std::string& source) {
  CheckResult r = check_source(source);
  REQUIRE_FALSE(r.ok());
  return r.errors.front();
}

void walk(const DerivationNode& n, const std::function<void(const DerivationNode&)>& f) {
  f(n);
  for (const DerivationNode& c : n.children) walk(c, f);
}

const DerivationNode* find_node(const DerivationNode& root, const std::string& rule, int line) {
  const DerivationNode* hit = nullptr;
  walk(root, [&](const DerivationNode& n) {
    if (!hit && n.rule == rule && n.span.line == line) hit = &n;
  });
  return hit;
}

using Strings = std::vector<std::string>;

// Peels Λ and λ binders off a parsed term so their ids can seed contexts.
TermPtr peel(TermPtr t, std::vector<Name>& indices, std::vector<Name>& vars) {
  for (;;) {
    if (t->kind == TermKind::TLam) {
      indices.push_back(t->binds[0]);
    } else if (t->kind == TermKind::Lam) {
      vars.push_back(t->binds[0]);
    } else {
      return t;
    }
    t = t->subs[0];
  }
}

std::string replace_last_line(const std::string& source, const std::string& line) {
  std::string s = source;
  s.pop_back();
  std::size_t cut = s.rfind('\n');
  return s.substr(0, cut + 1) + line + "\n";
}

std::string result_line(const std::string& source) {
  std::string s = source;
  s.pop_back();
  return s.substr(s.rfind('\n') + 1);
}

}  // namespace

TEST_CASE("corpus programs check at their stated types") {
  struct Want {
    const char* file;
    const char* def;
    const char* type;
  };
  const Want wants[] = {
      {"turn_red.lw", "turnRedOnClick", "∀(i:Id). Widget i ⊸ Widget i"},
      {"turn_red_core.lw", "turnRedOnClick", "∀(i:Id). Widget i ⊸ Widget i"},
      {"keep_red.lw", "keepTurningRed", "∀(i:Id). Widget i ⊸ Widget i"},
      {"keep_red.lw", "clickThenKeep", "∀(i:Id). Widget i ⊸ Widget i"},
      {"change_color.lw", "changeColor", "∀(i:Id). Widget i ⊸ Widget i"},
      {"interleave.lw", "interleave", "Str A ⊸ Str A ⊸ Str A"},
      {"stream_map.lw", "map", "F (G (A ⊸ B)) ⊸ Str A ⊸ Str B"},
      {"button_stack.lw", "buttonStack", "∀(i:Id). Widget i ⊸ Widget i"},
      {"s43.lw", "axiomT", "A ⊸ ◇A"},
      {"s43.lw", "axiom4", "◇◇A ⊸ ◇A"},
      {"s43.lw", "axiom3", "◇(A ⊗ B) ⊸ ◇(◇A ⊗ B ⊕ ◇(A ⊗ ◇B) ⊕ ◇(A ⊗ B))"},
  };
  for (const Want& w : wants) {
    CAPTURE(w.file);
    CheckResult r = check_source(corpus(w.file));
    CHECK(r.ok());
    CHECK(type_of(r, w.def) == w.type);
  }
}

TEST_CASE("every runnable corpus file checks") {
  for (const std::string& f : runnable_corpus()) {
    CAPTURE(f);
    CHECK(check_source(corpus(f)).ok());
  }
}

TEST_CASE("zip and outer variables in select branches are rejected") {
  TypeError zip = first_error(corpus("zip_attempt.lw"));
  CHECK(zip.kind == TypeErrorKind::LinearVariableUnavailableInSelect);
  CHECK(zip.span.line == 6);
  CHECK(zip.span.col == 82);
  CHECK(zip.definition == "zip");
  TypeError outer = first_error(corpus("select_outer.lw"));
  CHECK(outer.kind == TypeErrorKind::LinearVariableUnavailableInSelect);
  CHECK(outer.span.line == 6);
  CHECK(outer.span.col == 86);
}

TEST_CASE("each error kind is reachable with a span") {
  struct Case {
    const char* source;
    TypeErrorKind kind;
    int line;
    int col;
  };
  const Case cases[] = {
      {"def f : A ⊸ A = λa. b", TypeErrorKind::UnboundVariable, 1, 21},
      {"def f : A ⊸ I = λa. ()", TypeErrorKind::LinearVariableUnused, 1, 17},
      {"def f : A ⊸ A ⊗ A = λa. (a, a)", TypeErrorKind::LinearVariableReused, 1, 29},
      {"def f : ∀(i:Id). Widget i ⊸ ◇I ⊸ ◇(Widget i) =\n  λw. λe. let (w1, c) = onClick w in\n"
       "  select c as x => evt w1\n  | e as y => evt w1",
       TypeErrorKind::LinearVariableUnavailableInSelect, 3, 24},
      {"def f : A @ 3 ⊸ A = λd. let a @ 3 = d in a", TypeErrorKind::TimeMismatch, 1, 42},
      {"def f : ∀(t:Time). Widget t ⊸ Widget t = λw. w", TypeErrorKind::SortMismatch, 1, 1},
      {"def f : A ⊸ B = λa. a", TypeErrorKind::TypeMismatch, 1, 21},
      {"def f : A ⊸ F (G A) = λa. F (G a)", TypeErrorKind::NonEmptyLinearContextUnderG, 1, 32},
      {"def f : ∀(i:Id). Widget i ⊸ Widget i = λw. let (p, w2) = split w in join (p, w2)",
       TypeErrorKind::UnsolvedIndexMetavariable, 1, 58},
  };
  for (const Case& c : cases) {
    CAPTURE(c.source);
    TypeError e = first_error(c.source);
    CHECK(std::string(kind_name(e.kind)) == kind_name(c.kind));
    CHECK(e.span.line == c.line);
    CHECK(e.span.col == c.col);
    CHECK_FALSE(e.message.empty());
  }
}

TEST_CASE("select branches must agree") {
  TypeError e = first_error(
      "def f : ◇I ⊗ ◇I ⊸ ◇I =\n  λp. let (x, y) = p in\n  select x as a => (let () = a in y)\n"
      "  | y as b => (let () = b in let evt q = x in evt (q, ()))");
  CHECK(e.kind == TypeErrorKind::TypeMismatch);
  CHECK(e.span.line == 4);
}

TEST_CASE("index typing") {
  IndexContext empty;
  CHECK_NOTHROW(check_index(empty, IndexTerm::time(3), Sort::Time));
  Name i{"i", fresh_id()};
  IndexContext theta{{{i, Sort::Id}}};
  CHECK_NOTHROW(check_index(theta, IndexTerm::variable(i), Sort::Id));
  try {
    check_index(empty, IndexTerm::variable(Name{"x", fresh_id()}), Sort::Time);
    FAIL("unbound index accepted");
  } catch (const TypeErrorException& e) {
    CHECK(e.error.kind == TypeErrorKind::UnboundVariable);
  }
  try {
    check_index(theta, IndexTerm::variable(i), Sort::Time);
    FAIL("sort mismatch accepted");
  } catch (const TypeErrorException& e) {
    CHECK(e.error.kind == TypeErrorKind::SortMismatch);
  }
  CHECK_THROWS_AS(check_index(empty, IndexTerm::ident(2), Sort::Time), TypeErrorException);
}

TEST_CASE("Cartesian typing") {
  CHECK_NOTHROW(check_cart({}, {}, parse_term("⋆"), parse_cart_type("1")));
  CHECK_NOTHROW(check_cart({}, {}, parse_term("G (λa. a)"), parse_cart_type("G (A ⊸ A)")));
  CHECK_THROWS_AS(check_cart({}, {}, parse_term("⋆"), parse_cart_type("Color")), TypeErrorException);
}

TEST_CASE("linear identity leaves no context") {
  LinearContext out = check_linear({}, {}, {}, parse_term("λa. a"), parse_lin_type("A ⊸ A"));
  CHECK(out.entries.empty());
}

TEST_CASE("the join step checks from a delayed widget and a prefix") {
  std::vector<Name> idx, vars;
  TermPtr body = peel(desugar_term(parse_term(
                          "Λ(i:Id)(x:Time). λw3. λp. let w4 = (setColor i (w3, F Red)) @ x in join i x (p, w4)")),
                      idx, vars);
  REQUIRE(idx.size() == 2);
  REQUIRE(vars.size() == 2);
  IndexContext theta{{{idx[0], Sort::Id}, {idx[1], Sort::Time}}};
  IndexTerm i = IndexTerm::variable(idx[0]), x = IndexTerm::variable(idx[1]);
  LinearContext delta;
  delta.entries.push_back({vars[0], widget(i), x});
  delta.entries.push_back({vars[1], prefix(i, x)});
  LinearContext out = check_linear(theta, {}, delta, body, widget(i));
  REQUIRE(out.entries.size() == 2);
  CHECK(out.entries[0].used);
  CHECK(out.entries[1].used);

  LinearContext now_only;
  now_only.entries.push_back({vars[0], widget(i)});
  now_only.entries.push_back({vars[1], prefix(i, x)});
  CHECK_THROWS_AS(check_linear(theta, {}, now_only, body, widget(i)), TypeErrorException);
}

TEST_CASE("G over a linear variable is rejected in a linear context") {
  std::vector<Name> idx, vars;
  TermPtr body = peel(parse_term("λa. runG (G a)"), idx, vars);
  LinearContext delta;
  delta.entries.push_back({vars[0], parse_lin_type("A")});
  try {
    check_linear({}, {}, delta, body, parse_lin_type("A"));
    FAIL("G over a linear variable accepted");
  } catch (const TypeErrorException& e) {
    CHECK(e.error.kind == TypeErrorKind::NonEmptyLinearContextUnderG);
  }
}

TEST_CASE("changeColor's select has type ◇(F Color)") {
  CheckOptions o;
  o.record_derivations = true;
  CheckResult r = check_source(corpus("change_color.lw"), o);
  REQUIRE(r.ok());
  int selects = 0;
  walk(r.derivations.at("changeColor"), [&](const DerivationNode& n) {
    if (n.rule == "select") ++selects;
  });
  CHECK(selects == 1);
}

TEST_CASE("golden derivation of the core turnRedOnClick") {
  CheckOptions o;
  o.record_derivations = true;
  CheckResult r = check_source(corpus("turn_red_core.lw"), o);
  REQUIRE(r.ok());
  const DerivationNode& root = r.derivations.at("turnRedOnClick");

  const DerivationNode* unpack = find_node(root, "∃-E", 4);
  REQUIRE(unpack);
  CHECK(unpack->theta == Strings{"i:Id"});
  REQUIRE(unpack->children.size() == 2);
  CHECK(unpack->children[0].theta == Strings{"i:Id"});
  CHECK(unpack->children[1].theta == Strings{"i:Id", "x:Time"});

  const DerivationNode* unit_at = find_node(root, "I_τ-E", 6);
  REQUIRE(unit_at);
  CHECK(unit_at->consumed == Strings{"w1 : Widget i", "c2 :_x I"});
  REQUIRE(unit_at->children.size() == 2);
  CHECK(unit_at->children[0].rule == "Var");
  CHECK(unit_at->children[0].consumed == Strings{"c2 : I"});

  const DerivationNode* join = find_node(root, "let", 9);
  REQUIRE(join);
  CHECK(join->theta == Strings{"i:Id", "x:Time"});
  CHECK(join->consumed == Strings{"p : Prefix i x", "w3 :_x Widget i"});
  REQUIRE(join->children.size() == 2);
  CHECK(join->children[0].rule == "@-I");
  CHECK(join->children[0].consumed == Strings{"w3 :_x Widget i"});
  CHECK(join->children[0].children[0].consumed == Strings{"w3 : Widget i"});
  CHECK(join->children[1].rule == "⊸-E");
  CHECK(join->children[1].consumed == Strings{"p : Prefix i x", "w4 : Widget i @ x"});
}

TEST_CASE("linearity on generated programs") {
  ProgramGenerator gen(7);
  CheckOptions o;
  o.record_derivations = true;
  int selects = 0;
  for (int n = 0; n < 500; ++n) {
    Generated g = gen.next();
    CAPTURE(g.source);
    CheckResult r = check_source(g.source, o);
    REQUIRE(r.ok());
    if (g.has_select) ++selects;

    std::map<std::string, int> uses;
    walk(r.derivations.at("main"), [&](const DerivationNode& d) {
      if (d.rule != "Var") return;
      for (const std::string& c : d.consumed) ++uses[c.substr(0, c.find(' '))];
    });
    for (const std::string& b : g.binders) CHECK(uses[b] == 1);

    std::string result = result_line(g.source);
    CheckResult unused = check_source(replace_last_line(g.source, "  let extra = () in" + result));
    REQUIRE_FALSE(unused.ok());
    CHECK(unused.errors.front().kind == TypeErrorKind::LinearVariableUnused);
    std::string reuse = g.source;
    reuse.replace(reuse.find("let () = u in"), 13, "let () = u in\nlet () = u in");
    CheckResult reused = check_source(reuse);
    REQUIRE_FALSE(reused.ok());
    CHECK(reused.errors.front().kind == TypeErrorKind::LinearVariableReused);
  }
  CHECK(selects > 20);
}

TEST_CASE("select branches only consume their own entries") {
  ProgramGenerator gen(11);
  CheckOptions o;
  o.record_derivations = true;
  std::vector<std::string> sources;
  for (int n = 0; n < 200; ++n) sources.push_back(gen.next().source);
  for (const char* f : {"change_color.lw", "interleave.lw", "stream_map.lw", "s43.lw", "button_stack.lw"})
    sources.push_back(corpus(f));
  int branch_vars = 0;
  for (const std::string& s : sources) {
    CheckResult r = check_source(s, o);
    REQUIRE(r.ok());
    for (const auto& [name, root] : r.derivations)
      walk(root, [&](const DerivationNode& d) {
        if (d.rule != "Var" || d.branch_depth == 0 || d.consumed.empty()) return;
        ++branch_vars;
        CHECK(d.entry_depth == d.branch_depth);
      });
  }
  CHECK(branch_vars > 50);
}

TEST_CASE("a delay by 0 is transparent") {
  ProgramGenerator gen(13);
  for (int n = 0; n < 200; ++n) {
    Generated g = gen.next();
    std::string result = result_line(g.source);
    auto delay = [&](const std::string& pre) {
      return replace_last_line(g.source, "  " + pre + "let r @ 0 = (((" + result + ") @ 0) : (" + g.result_type +
                                             ") @ 0) in r");
    };
    CAPTURE(delay(""));
    CHECK(check_source(delay("")).ok());
    std::string broken = replace_last_line(g.source, "  let extra = () in" + result);
    CHECK(check_source(broken).ok() == check_source(delay("let extra = () in ")).ok());
  }
}

TEST_CASE("checking is deterministic") {
  std::vector<std::string> sources;
  for (const std::string& f : runnable_corpus()) sources.push_back(corpus(f));
  sources.push_back(corpus("zip_attempt.lw"));
  sources.push_back(corpus("select_outer.lw"));
  sources.push_back(corpus("turn_red.lw") + "\ndef bad1 : A ⊸ I = λa. ()\ndef bad2 : A ⊸ B = λa. a\n");
  for (const std::string& s : sources) {
    CheckResult a = check_source(s), b = check_source(s);
    REQUIRE(a.types.size() == b.types.size());
    for (std::size_t k = 0; k < a.types.size(); ++k) {
      CHECK(a.types[k].first == b.types[k].first);
      CHECK(show(a.types[k].second) == show(b.types[k].second));
    }
    REQUIRE(a.errors.size() == b.errors.size());
    for (std::size_t k = 0; k < a.errors.size(); ++k) {
      CHECK(a.errors[k].kind == b.errors[k].kind);
      CHECK(a.errors[k].message == b.errors[k].message);
      CHECK(a.errors[k].span.line == b.errors[k].span.line);
      CHECK(a.errors[k].span.col == b.errors[k].span.col);
    }
  }
  CheckResult two = check_source(sources.back());
  REQUIRE(two.errors.size() == 2);
  CHECK(two.errors[0].definition == "bad1");
  CHECK(two.errors[1].definition == "bad2");
}

TEST_CASE("index substitution preserves typing") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (const std::string& f : runnable_corpus()) {
    CAPTURE(f);
    SourceProgram p = elaborate(corpus(f));
    for (int n = 0; n < 100; ++n)
      for (const Definition& d : p.definitions) {
        SubstOutcome o = check_random_subst(p, d, rng);
        CHECK_MESSAGE(o.ok, o.message);
        ++checked;
      }
  }
  CHECK(checked >= 1200);
}

TEST_CASE("index substitution examples") {
  Name t{"t", fresh_id()}, i{"i", fresh_id()}, j{"j", fresh_id()};
  LinTypePtr delayed = at(widget(IndexTerm::variable(i)), IndexTerm::variable(t));
  CHECK(show(subst_index({{t.id, IndexTerm::time(3)}}, delayed)) == "Widget i @ 3");
  CHECK(alpha_eq(subst_index({}, delayed), delayed));
  SourceProgram p = elaborate(corpus("turn_red_core.lw"));
  for (const char* f : {"turn_red.lw", "keep_red.lw", "change_color.lw"}) {
    SourceProgram q = elaborate(corpus(f));
    const Definition& d = q.definitions.front();
    REQUIRE(d.body->kind == TermKind::TLam);
    IndexSubst z{{d.body->binds[0].id, IndexTerm::variable(j)}, {d.type.lin->binder.id, IndexTerm::variable(j)}};
    IndexContext theta{{{j, Sort::Id}}};
    CHECK_NOTHROW(check_linear(theta, {}, {}, subst_index(z, d.body->subs[0]), subst_index(z, d.type.lin->left),
                               IndexTerm::time(0), &q));
  }
  (void)p;
  Name s{"s", fresh_id()};
  IndexContext from{{{s, Sort::Time}}};
  CHECK_THROWS_AS(check_index_subst({}, from, {{s.id, IndexTerm::ident(1)}}), TypeErrorException);
}

TEST_CASE("term substitution") {
  auto var = [](const Name& n) {
    auto v = std::make_shared<Term>();
    v->kind = TermKind::Var;
    v->ref = n;
    return TermPtr(v);
  };
  std::vector<Name> idx, vars;
  TermPtr t = peel(parse_term("λa. let () = a in ()"), idx, vars);
  TermPtr r = subst_term(TermSubstKind::LinToLin, vars[0], parse_term("()"), t);
  CHECK(term_alpha_eq(r, parse_term("let () = () in ()")));

  TermPtr shadow = parse_term("λa. (a, λa. a)");
  TermPtr s = subst_term(TermSubstKind::CartToCart, shadow->binds[0], parse_term("⋆"), shadow->subs[0]);
  CHECK(term_alpha_eq(s, parse_term("(⋆, λa. a)")));

  TermPtr outer = parse_term("λy. λx. (x, y)");
  const TermPtr& inner = outer->subs[0];
  Name x = inner->binds[0];
  TermPtr c = subst_term(TermSubstKind::LinToLin, outer->binds[0], var(x), inner);
  REQUIRE(c->kind == TermKind::Lam);
  CHECK(c->binds[0].id != x.id);
  CHECK(c->subs[0]->subs[0]->ref.id == c->binds[0].id);
  CHECK(c->subs[0]->subs[1]->ref.id == x.id);

  TermPtr site = parse_term("λfn. λq. runG fn q");
  TermPtr g = subst_term(TermSubstKind::CartToLin, site->binds[0], parse_term("(G (λv. v) : G (A ⊸ A))"), site->subs[0]);
  CHECK_NOTHROW(check_linear({}, {}, {}, desugar_term(g), parse_lin_type("A ⊸ A")));
}

TEST_CASE("printing and reparsing generated programs is the identity") {
  ProgramGenerator gen(17);
  for (int n = 0; n < 500; ++n) {
    Generated g = gen.next();
    SourceProgram p = parse(g.source);
    std::string printed = show(p);
    SourceProgram q = parse(printed);
    REQUIRE(q.definitions.size() == 1);
    CHECK(term_alpha_eq(p.definitions[0].body, q.definitions[0].body));
    CHECK(show(q) == printed);
  }
}

TEST_CASE("desugaring is idempotent") {
  for (const std::string& f : runnable_corpus()) {
    CAPTURE(f);
    SourceProgram once = desugar(parse(corpus(f)));
    SourceProgram twice = desugar(once);
    REQUIRE(once.definitions.size() == twice.definitions.size());
    for (std::size_t k = 0; k < once.definitions.size(); ++k)
      CHECK(term_alpha_eq(once.definitions[k].body, twice.definitions[k].body));
  }
}

TEST_CASE("alpha equivalence of types") {
  CHECK(alpha_eq(parse_lin_type("∀(i:Id). Widget i"), parse_lin_type("∀(j:Id). Widget j")));
  CHECK_FALSE(alpha_eq(parse_lin_type("∀(i:Id). Widget i"), parse_lin_type("∀(j:Time). Prefix j j")));
  CHECK(alpha_eq(parse_lin_type("∃(k:Time). A @ k"), parse_lin_type("∃(s:Time). A @ s")));
  CHECK_FALSE(alpha_eq(parse_lin_type("A @ 1"), parse_lin_type("A @ 2")));
  CHECK(alpha_eq(parse_lin_type("Str I"), parse_lin_type("Str I")));
  CHECK(alpha_eq(parse_cart_type("G (A ⊸ A) → 1"), parse_cart_type("G (A ⊸ A) → 1")));
}
