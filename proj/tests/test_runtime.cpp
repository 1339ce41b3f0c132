#include "doctest.h"
#include "lambda_widget/denot.hpp"
#include "lambda_widget/runtime.hpp"
#include "support.hpp"

using namespace lw;
using namespace lwtest;

namespace {

Stimulus click(std::uint64_t t, std::uint64_t widget = 0) { return {t, widget, Stimulus::Kind::Click, 'a'}; }
Stimulus key(std::uint64_t t, std::uint64_t widget = 0, char c = 'a') {
  return {t, widget, Stimulus::Kind::Keypress, c};
}

std::optional<Color> color_at(const RunResult& r, std::uint64_t widget, std::uint64_t n) {
  for (const Logbook& w : r.logbooks)
    if (w.id == widget) return render_state(w, n).color;
  return std::nullopt;
}

const char* kNoEvents = "def main : I ⊸ ∃(i:Id). Widget i =\n"
                        "  λu. let () = u in let (k, w) = newWidget () in pack(k, setColor (w, F Green))";

}  // namespace

TEST_CASE("a click at 5 turns the widget red at 5") {
  EventTrace trace = parse_trace(slurp(corpus_path("traces/click5.jsonl")));
  REQUIRE(trace.size() == 1);
  CHECK(trace[0] == click(5));
  RunResult r = run(elaborate(corpus("turn_red.lw")), trace, 8, TiePolicy::left());
  REQUIRE(r.logbooks.size() == 1);
  CHECK(r.logbooks[0].entries == Entries{{0, Command::on_click()}, {5, Command::set_color(Color::Red)}});
  CHECK(r.choices.empty());
  CHECK(r.undelivered.empty());
  CHECK(to_json(r)["logbooks"].dump() == R"([{"entries":[[0,"onClick"],[5,"setColor","Red"]],"id":0}])");
}

TEST_CASE("a handler that never fires is reported") {
  RunResult r = run(elaborate(corpus("turn_red.lw")), {}, 6, TiePolicy::left());
  CHECK(r.logbooks[0].entries == Entries{{0, Command::on_click()}});
  REQUIRE(r.undelivered.size() == 1);
  CHECK(r.undelivered[0].widget == 0);
  CHECK(r.undelivered[0].registered == 0);
}

TEST_CASE("set-once stays blue, keep-setting turns red again") {
  EventTrace trace = {click(2), click(6)};
  RunResult once = run(elaborate(corpus("probe_once.lw")), trace, 8, TiePolicy::left());
  RunResult keep = run(elaborate(corpus("probe_keep.lw")), trace, 8, TiePolicy::left());
  CHECK(color_at(once, 0, 2) == Color::Red);
  CHECK(color_at(keep, 0, 2) == Color::Red);
  CHECK(color_at(once, 0, 4) == Color::Blue);
  CHECK(color_at(keep, 0, 4) == Color::Blue);
  CHECK(color_at(once, 0, 6) == Color::Blue);
  CHECK(color_at(keep, 0, 6) == Color::Red);
}

TEST_CASE("clickThenKeep is blue after one click and red after the next") {
  RunResult r = run(elaborate(corpus("keep_red.lw")), {click(2), click(5)}, 8, TiePolicy::left());
  CHECK(color_at(r, 0, 1) == std::nullopt);
  CHECK(color_at(r, 0, 3) == Color::Blue);
  CHECK(color_at(r, 0, 5) == Color::Red);
}

TEST_CASE("steps do not depend on the horizon") {
  struct Case {
    const char* file;
    EventTrace trace;
  };
  const Case cases[] = {
      {"turn_red.lw", {click(5)}},
      {"keep_red.lw", {click(2), click(3), click(7)}},
      {"change_color.lw", {click(1), key(4)}},
      {"interleave.lw", {click(2, 0), click(3, 1), click(5, 0)}},
      {"stream_map.lw", {click(1), click(2)}},
      {"probe_keep.lw", {click(2), click(6)}},
  };
  for (const Case& c : cases) {
    CAPTURE(c.file);
    SourceProgram p = elaborate(corpus(c.file));
    RunResult a = run(p, c.trace, 8, TiePolicy::left());
    RunResult b = run(p, c.trace, 16, TiePolicy::left());
    RunResult d = run(p, c.trace, 64, TiePolicy::left());
    CHECK(a.steps > 0);
    CHECK(a.steps == b.steps);
    CHECK(b.steps == d.steps);
    CHECK(to_json(a.logbooks) == to_json(b.logbooks));
  }
}

TEST_CASE("ties follow the policy") {
  SourceProgram p = elaborate(corpus("change_color.lw"));
  EventTrace tie = {click(2), key(2)};
  RunResult l = run(p, tie, 4, TiePolicy::left());
  RunResult r = run(p, tie, 4, TiePolicy::right());
  CHECK(color_at(l, 0, 2) == Color::Red);
  CHECK(color_at(r, 0, 2) == Color::Blue);
  REQUIRE(l.choices.size() == 1);
  CHECK(l.choices[0].time == 2);
  CHECK(l.choices[0].left);
  CHECK_FALSE(r.choices[0].left);
  RunResult no_tie = run(p, {click(1), key(2)}, 4, TiePolicy::right());
  CHECK(no_tie.choices.empty());
  CHECK(color_at(no_tie, 0, 2) == Color::Red);
  RunResult seeded = run(p, tie, 4, TiePolicy::seeded(9));
  REQUIRE(seeded.choices.size() == 1);
  CHECK(color_at(seeded, 0, 2) == (seeded.choices[0].left ? Color::Red : Color::Blue));
}

TEST_CASE("runs are deterministic") {
  SourceProgram p = elaborate(corpus("change_color.lw"));
  EventTrace tie = {click(3), key(3)};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RunResult a = run(p, tie, 6, TiePolicy::seeded(seed));
    RunResult b = run(p, tie, 6, TiePolicy::seeded(seed));
    CHECK(to_json(a) == to_json(b));
  }
  SourceProgram q = elaborate(corpus("interleave.lw"));
  EventTrace t = {click(1, 0), click(1, 1), click(4, 1)};
  CHECK(to_json(run(q, t, 6, TiePolicy::left())) == to_json(run(q, t, 6, TiePolicy::left())));
}

TEST_CASE("trace parsing") {
  EventTrace t = parse_trace("{\"t\": 1, \"widget\": 0, \"kind\": \"click\"}\n\n"
                             "{\"t\": 3, \"widget\": 2, \"kind\": \"keypress\", \"char\": \"x\"}\n");
  REQUIRE(t.size() == 2);
  CHECK(t[1] == key(3, 2, 'x'));
  CHECK(to_json(t[0]).dump() == R"({"kind":"click","t":1,"widget":0})");
  CHECK_THROWS_AS(parse_trace("{\"t\": 1, \"widget\": 0"), TraceFormatError);
  CHECK_THROWS_AS(parse_trace("{\"t\": 1, \"kind\": \"click\"}"), TraceFormatError);
  CHECK_THROWS_AS(parse_trace("{\"t\": 1, \"widget\": 0, \"kind\": \"hover\"}"), TraceFormatError);
  CHECK_THROWS_AS(parse_trace("{\"t\": -1, \"widget\": 0, \"kind\": \"click\"}"), TraceFormatError);
  CHECK_THROWS_AS(parse_trace("{\"t\": 3, \"widget\": 0, \"kind\": \"click\"}\n"
                              "{\"t\": 2, \"widget\": 0, \"kind\": \"click\"}"),
                  TraceFormatError);
}

TEST_CASE("stimuli must target a live handler") {
  SourceProgram p = elaborate(corpus("turn_red.lw"));
  CHECK_THROWS_AS(run(p, {click(3, 7)}, 6, TiePolicy::left()), TraceTargetInvalid);
  CHECK_THROWS_AS(run(p, {key(3)}, 6, TiePolicy::left()), TraceTargetInvalid);
  CHECK_THROWS_AS(run(p, {click(0)}, 6, TiePolicy::left()), TraceTargetInvalid);
  CHECK_THROWS_AS(run(p, {click(2), click(4)}, 6, TiePolicy::left()), TraceTargetInvalid);
  CHECK_THROWS_AS(run(p, {click(7)}, 6, TiePolicy::left()), HorizonExceeded);
}

TEST_CASE("two colors at one time fail at run time") {
  CHECK_THROWS_AS(run(elaborate(corpus("double_set.lw")), {}, 4, TiePolicy::left()), CompatError);
}

TEST_CASE("the live interface advances on demand") {
  Runtime rt(elaborate(corpus("turn_red.lw")), 10, TiePolicy::left());
  CHECK(rt.logbooks()[0].entries == Entries{{0, Command::on_click()}});
  rt.advance_to(4);
  CHECK(rt.clock() <= 4);
  rt.deliver({click(4)});
  CHECK(rt.clock() == 4);
  CHECK(rt.logbooks()[0].entries == Entries{{0, Command::on_click()}, {4, Command::set_color(Color::Red)}});
  rt.finish();
  CHECK(rt.result().undelivered.empty());
}

TEST_CASE("realizable traces of turnRedOnClick") {
  SourceProgram p = elaborate(corpus("turn_red.lw"));
  std::vector<EventTrace> ts = realizable_traces(p, 4);
  CHECK(ts.size() == 5);
  std::set<std::uint64_t> times;
  for (const EventTrace& t : ts)
    if (!t.empty()) times.insert(t[0].time);
  CHECK(times == std::set<std::uint64_t>{1, 2, 3, 4});
}

TEST_CASE("runs conform to the denotation") {
  for (const char* f : {"turn_red.lw", "keep_red.lw", "change_color.lw", "probe_once.lw", "double_set.lw"}) {
    CAPTURE(f);
    ConformanceReport r = conformance(elaborate(corpus(f)), 4);
    CHECK(r.ok());
    CHECK(r.runs == 2 * r.traces);
  }
  ConformanceReport trivial = conformance(elaborate(kNoEvents), 5);
  CHECK(trivial.ok());
  CHECK(trivial.traces == 1);
  CHECK(trivial.outcomes == 1);
}

TEST_CASE("every run outcome is among the denoted outcomes") {
  SourceProgram p = elaborate(corpus("change_color.lw"));
  OutcomeSet s = eval_denot(p, 3);
  std::set<std::string> denoted;
  for (const Outcome& o : s.outcomes) denoted.insert(to_json(canonical_ids(o.logbooks)).dump());
  for (std::uint64_t c = 1; c <= 3; ++c)
    for (std::uint64_t k = 1; k <= 3; ++k) {
      EventTrace t;
      if (c <= k) t = {click(c), key(k)};
      else t = {key(k), click(c)};
      for (TiePolicy pol : {TiePolicy::left(), TiePolicy::right()}) {
        RunResult r = run(p, t, 3, pol);
        CHECK(denoted.count(to_json(canonical_ids(r.logbooks)).dump()) == 1);
      }
    }
}

TEST_CASE("the conformance pragma") {
  CHECK(conform_horizon_pragma(corpus("button_stack.lw")) == 4u);
  CHECK_FALSE(conform_horizon_pragma(corpus("turn_red.lw")).has_value());
}
