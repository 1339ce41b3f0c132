#include <set>
#include <tuple>

#include "lambda_widget/denot.hpp"
#include "lambda_widget/runtime.hpp"

namespace lw {

namespace {

std::string key(const LogbookSet& s) { return to_json(canonical_ids(s)).dump(); }

std::tuple<std::uint64_t, std::uint64_t, int> order(const Stimulus& s) {
  return {s.time, s.widget, static_cast<int>(s.kind)};
}

/// Stimuli that may follow `trace`, given the handlers left pending by it.
std::vector<Stimulus> extensions(const EventTrace& trace, const std::vector<PendingHandler>& pending,
                                 std::uint64_t horizon) {
  std::set<std::tuple<std::uint64_t, std::uint64_t, int>> seen;
  std::vector<Stimulus> out;
  std::uint64_t last = trace.empty() ? 0 : trace.back().time;
  for (const PendingHandler& h : pending) {
    for (std::uint64_t t = std::max(last, h.registered + 1); t <= horizon; ++t) {
      Stimulus s{t, h.widget, h.kind, kEnumeratedKey};
      if (!trace.empty() && order(s) <= order(trace.back())) continue;
      if (seen.insert(order(s)).second) out.push_back(s);
    }
  }
  return out;
}

template <typename Visit>
void explore(const SourceProgram& program, std::uint64_t horizon, TiePolicy policy, std::size_t limit, Visit visit) {
  std::vector<EventTrace> stack{{}};
  std::size_t count = 0;
  while (!stack.empty()) {
    EventTrace trace = std::move(stack.back());
    stack.pop_back();
    if (++count > limit) throw HorizonExceeded("more than " + std::to_string(limit) + " realizable traces");
    std::vector<PendingHandler> pending = visit(trace);
    for (const Stimulus& s : extensions(trace, pending, horizon)) {
      EventTrace next = trace;
      next.push_back(s);
      stack.push_back(std::move(next));
    }
  }
}

}  // namespace

std::vector<EventTrace> realizable_traces(const SourceProgram& program, std::uint64_t horizon, std::size_t limit) {
  std::vector<EventTrace> all;
  explore(program, horizon, TiePolicy::left(), limit, [&](const EventTrace& trace) {
    all.push_back(trace);
    try {
      return run(program, trace, horizon, TiePolicy::left()).undelivered;
    } catch (const CompatError&) {
      return std::vector<PendingHandler>{};
    }
  });
  return all;
}

ConformanceReport conformance(const SourceProgram& program, std::uint64_t horizon) {
  ConformanceReport report;
  report.horizon = horizon;
  std::set<std::string> outcomes;
  bool compat_possible = false;
  try {
    OutcomeSet set = eval_denot(program, horizon);
    for (const Outcome& o : set.outcomes) outcomes.insert(key(o.logbooks));
    compat_possible = set.dropped > 0;
  } catch (const CompatError&) {
    compat_possible = true;
  }
  report.outcomes = outcomes.size();
  std::set<EventTrace, bool (*)(const EventTrace&, const EventTrace&)> traces(
      [](const EventTrace& a, const EventTrace& b) {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                            [](const Stimulus& x, const Stimulus& y) { return order(x) < order(y); });
      });
  for (TiePolicy policy : {TiePolicy::left(), TiePolicy::right()}) {
    std::string name = policy.kind == TiePolicy::Kind::Left ? "left" : "right";
    explore(program, horizon, policy, 200'000, [&](const EventTrace& trace) {
      traces.insert(trace);
      ++report.runs;
      try {
        RunResult r = run(program, trace, horizon, policy);
        if (!outcomes.count(key(r.logbooks)))
          report.violations.push_back({trace, name, "logbooks " + key(r.logbooks) + " are not an outcome"});
        return r.undelivered;
      } catch (const CompatError& e) {
        if (!compat_possible)
          report.violations.push_back({trace, name, std::string("runtime CompatError: ") + e.what()});
      } catch (const std::exception& e) {
        report.violations.push_back({trace, name, e.what()});
      }
      return std::vector<PendingHandler>{};
    });
  }
  report.traces = traces.size();
  return report;
}

nlohmann::json to_json(const ConformanceReport& r) {
  nlohmann::json j;
  j["horizon"] = r.horizon;
  j["traces"] = r.traces;
  j["runs"] = r.runs;
  j["outcomes"] = r.outcomes;
  j["violations"] = nlohmann::json::array();
  for (const ConformanceViolation& v : r.violations) {
    nlohmann::json t = nlohmann::json::array();
    for (const Stimulus& s : v.trace) t.push_back(to_json(s));
    j["violations"].push_back({{"detail", v.detail}, {"policy", v.policy}, {"trace", t}});
  }
  return j;
}

}  // namespace lw

namespace lw {

std::optional<std::uint64_t> conform_horizon_pragma(std::string_view source) {
  constexpr std::string_view tag = "-- @conform-horizon";
  auto at = source.find(tag);
  if (at == std::string_view::npos) return std::nullopt;
  std::size_t k = at + tag.size();
  while (k < source.size() && source[k] == ' ') ++k;
  std::uint64_t n = 0;
  bool any = false;
  for (; k < source.size() && source[k] >= '0' && source[k] <= '9'; ++k) {
    n = n * 10 + static_cast<std::uint64_t>(source[k] - '0');
    any = true;
  }
  return any ? std::optional<std::uint64_t>(n) : std::nullopt;
}

}  // namespace lw
