#include <set>

#include "doctest.h"
#include "lambda_widget/denot.hpp"
#include "lambda_widget/runtime.hpp"
#include "support.hpp"

using namespace lw;
using namespace lwtest;

namespace {

const char* kTurnRed = R"(
def turnRedOnClick : ∀(i:Id). Widget i ⊸ Widget i =
  λw.
    let (w1, c) = onClick w in
    let (x, () @ x) = out c in
    let (p, w2 @ x) = split w1 in
    let w3 = (setColor (w2, F Red)) @ x in
    join (p, w3)
)";

std::multiset<std::string> logbook_sets(const OutcomeSet& s) {
  std::multiset<std::string> out;
  for (const Outcome& o : s.outcomes) out.insert(to_json(canonical_ids(o.logbooks)).dump());
  return out;
}

std::string set_of(std::vector<Logbook> books) { return to_json(canonical_ids(books)).dump(); }

std::vector<std::uint64_t> arrivals(std::uint64_t h) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t t = 1; t <= h; ++t) out.push_back(t);
  out.push_back(kInfinity);
  return out;
}

Entries red_after_click(std::uint64_t a) {
  Entries es{{0, Command::on_click()}};
  if (a != kInfinity) es.insert({a, Command::set_color(Color::Red)});
  return es;
}

}  // namespace

TEST_CASE("turnRedOnClick enumerates one outcome per arrival") {
  OutcomeSet s = eval_denot(elaborate(corpus("turn_red.lw")), 4);
  CHECK(s.outcomes.size() == 5);
  CHECK(s.dropped == 0);
  std::multiset<std::string> want;
  for (std::uint64_t a : arrivals(4)) want.insert(set_of({{0, red_after_click(a)}}));
  CHECK(logbook_sets(s) == want);

  bool found = false;
  for (const Outcome& o : s.outcomes)
    if (o.choices == std::vector<std::string>{"click#0@2"}) {
      found = true;
      REQUIRE(o.logbooks.size() == 1);
      CHECK(o.logbooks[0].entries == Entries{{0, Command::on_click()}, {2, Command::set_color(Color::Red)}});
    }
  CHECK(found);
}

TEST_CASE("sugared and core turnRedOnClick denote the same outcomes") {
  for (std::uint64_t h = 1; h <= 5; ++h)
    CHECK(to_json(eval_denot(elaborate(corpus("turn_red.lw")), h)) ==
          to_json(eval_denot(elaborate(corpus("turn_red_core.lw")), h)));
}

TEST_CASE("creating and dropping a widget leaves nothing") {
  OutcomeSet s = eval_denot(
      elaborate("def main : I ⊸ I = λu. let () = u in let (k, w) = newWidget () in dropWidget w"), 4);
  REQUIRE(s.outcomes.size() == 1);
  CHECK(s.outcomes[0].logbooks.empty());
  CHECK(s.outcomes[0].choices.empty());
}

TEST_CASE("two independent events give (H+1)^2 outcomes") {
  std::string src = std::string(kTurnRed) + R"(
def main : I ⊸ (∃(i:Id). Widget i) ⊗ (∃(j:Id). Widget j) =
  λu. let () = u in
  let (k, w) = newWidget () in
  let (m, v) = newWidget () in
  (pack(k, turnRedOnClick w), pack(m, turnRedOnClick v))
)";
  SourceProgram p = elaborate(src);
  for (std::uint64_t h = 1; h <= 4; ++h) {
    OutcomeSet s = eval_denot(p, h);
    CHECK(s.outcomes.size() == (h + 1) * (h + 1));
    std::multiset<std::string> want;
    for (std::uint64_t a : arrivals(h))
      for (std::uint64_t b : arrivals(h)) want.insert(set_of({{0, red_after_click(a)}, {1, red_after_click(b)}}));
    CHECK(logbook_sets(s) == want);
  }
  CHECK(eval_denot(p, 3).outcomes.size() == 16);
}

TEST_CASE("changeColor: the earlier event picks the color, ties give both") {
  SourceProgram p = elaborate(corpus("change_color.lw"));
  for (std::uint64_t h = 1; h <= 4; ++h) {
    CAPTURE(h);
    OutcomeSet s = eval_denot(p, h);
    std::multiset<std::string> want;
    for (std::uint64_t c : arrivals(h))
      for (std::uint64_t k : arrivals(h)) {
        Entries base{{0, Command::on_click()}, {0, Command::on_keypress()}};
        if (c == kInfinity || k == kInfinity) {
          want.insert(set_of({{0, base}}));
          continue;
        }
        std::uint64_t at = std::max(c, k);
        std::vector<Color> colors;
        if (c <= k) colors.push_back(Color::Red);
        if (k <= c) colors.push_back(Color::Blue);
        for (Color col : colors) {
          Entries es = base;
          es.insert({at, Command::set_color(col)});
          want.insert(set_of({{0, es}}));
        }
      }
    CHECK(logbook_sets(s) == want);
    CHECK(s.outcomes.size() == (h + 1) * (h + 1) + h);
  }

  OutcomeSet s = eval_denot(p, 3);
  auto color_of = [&](const std::vector<std::string>& choices) -> std::vector<std::string> {
    std::vector<std::string> out;
    for (const Outcome& o : s.outcomes)
      if (std::equal(choices.begin(), choices.end(), o.choices.begin(), o.choices.begin() + choices.size())) {
        auto c = render_state(o.logbooks[0], 3).color;
        out.push_back(c ? color_name(*c) : "none");
      }
    return out;
  };
  CHECK(color_of({"click#0@1", "keypress#0@2"}) == std::vector<std::string>{"Red"});
  CHECK(color_of({"click#0@2", "keypress#0@1"}) == std::vector<std::string>{"Blue"});
  CHECK(color_of({"click#0@2", "keypress#0@2"}) == std::vector<std::string>{"Red", "Blue"});
}

TEST_CASE("choice traces identify outcomes") {
  for (const char* f : {"change_color.lw", "interleave.lw", "keep_red.lw"}) {
    OutcomeSet s = eval_denot(elaborate(corpus(f)), 3);
    std::set<std::vector<std::string>> seen;
    for (const Outcome& o : s.outcomes) CHECK(seen.insert(o.choices).second);
  }
}

TEST_CASE("every corpus outcome is compatible") {
  for (const std::string& f : runnable_corpus()) {
    if (f == "double_set.lw") continue;
    CAPTURE(f);
    std::string src = corpus(f);
    std::uint64_t cap = conform_horizon_pragma(src).value_or(6);
    SourceProgram p = elaborate(src);
    for (std::uint64_t h = std::min<std::uint64_t>(4, cap); h <= std::min<std::uint64_t>(6, cap); ++h) {
      OutcomeSet s = eval_denot(p, h);
      CHECK_FALSE(s.outcomes.empty());
      for (const Outcome& o : s.outcomes)
        for (const Logbook& w : o.logbooks) {
          CHECK_NOTHROW(validate(w.entries));
          for (const Entry& e : w.entries) CHECK(e.time <= h);
        }
    }
  }
}

TEST_CASE("two colors at one time is a CompatError") {
  SourceProgram p = elaborate(corpus("double_set.lw"));
  try {
    eval_denot(p, 3);
    FAIL("double setColor accepted");
  } catch (const CompatError& e) {
    CHECK(e.time == 0);
    CHECK(e.first.kind == Command::Kind::SetColor);
    CHECK(e.second.kind == Command::Kind::SetColor);
  }
}

TEST_CASE("incompatible placements are dropped") {
  std::string src = std::string(kTurnRed) + R"(
def main : I ⊸ ∃(i:Id). Widget i =
  λu. let () = u in
  let (k, w) = newWidget () in
  let (p, w1 @ 2) = split k 2 (turnRedOnClick w) in
  let w2 = (setColor (w1, F Blue)) @ 2 in
  pack(k, join (p, w2))
)";
  OutcomeSet s = eval_denot(elaborate(src), 4);
  CHECK(s.outcomes.size() == 4);
  CHECK(s.dropped == 1);
  REQUIRE(s.first_error.has_value());
  CHECK(s.first_error->time == 2);
}

TEST_CASE("a literal delay beyond the horizon is reported") {
  SourceProgram p = elaborate(corpus("set_color_at.lw"));
  CHECK_THROWS_AS(eval_denot(p, 1), HorizonExceeded);
  OutcomeSet s = eval_denot(p, 2);
  REQUIRE(s.outcomes.size() == 1);
  CHECK(render_state(s.outcomes[0].logbooks[0], 2).color == Color::Green);
  CHECK_FALSE(render_state(s.outcomes[0].logbooks[0], 1).color.has_value());
}

TEST_CASE("probe programs tell set-once from keep-setting") {
  SourceProgram once = elaborate(corpus("probe_once.lw"));
  SourceProgram keep = elaborate(corpus("probe_keep.lw"));
  auto color_at_6 = [](const OutcomeSet& s, const std::vector<std::string>& prefix) {
    std::set<std::string> out;
    for (const Outcome& o : s.outcomes)
      if (std::equal(prefix.begin(), prefix.end(), o.choices.begin()))
        out.insert(color_name(*render_state(o.logbooks[0], 6).color));
    return out;
  };
  OutcomeSet a = eval_denot(once, 6), b = eval_denot(keep, 6);
  CHECK(color_at_6(a, {"click#0@2"}).count("Blue") == 1);
  CHECK(color_at_6(a, {"click#0@2"}).count("Red") == 0);
  CHECK(color_at_6(b, {"click#0@2"}).count("Red") == 1);
}

TEST_CASE("denotation is deterministic") {
  SourceProgram p = elaborate(corpus("interleave.lw"));
  CHECK(to_json(eval_denot(p, 3)) == to_json(eval_denot(p, 3)));
}
