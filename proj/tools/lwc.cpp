#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lambda_widget/denot.hpp"
#include "lambda_widget/desugar.hpp"
#include "lambda_widget/parser.hpp"
#include "lambda_widget/pretty.hpp"
#include "lambda_widget/runtime.hpp"
#include "lambda_widget/server.hpp"
#include "lambda_widget/typecheck.hpp"

namespace fs = std::filesystem;
using namespace lw;

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Checked {
  CheckResult result;
  std::string source;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string position(const std::string& file, Span s) {
  return file + ":" + std::to_string(s.line) + ":" + std::to_string(s.col);
}

/// Parses and checks; prints diagnostics and returns nullopt on failure.
std::optional<Checked> load(const std::string& path, bool json_errors) {
  Checked c;
  c.source = read_file(path);
  nlohmann::json errors = nlohmann::json::array();
  auto report = [&](const std::string& kind, Span span, const std::string& message) {
    errors.push_back({{"kind", kind}, {"line", span.line}, {"col", span.col}, {"message", message}});
    if (!json_errors) std::cerr << position(path, span) << " " << kind << " " << message << "\n";
  };
  try {
    c.result = check_source(c.source);
    for (const TypeError& e : c.result.errors) report(kind_name(e.kind), e.span, "[" + e.definition + "] " + e.message);
  } catch (const SyntaxError& e) {
    report("SyntaxError", e.span, e.what());
  } catch (const DesugarError& e) {
    report("DesugarError", e.span, e.what());
  }
  if (errors.empty()) return c;
  if (json_errors) std::cout << nlohmann::json{{"errors", errors}}.dump() << "\n";
  return std::nullopt;
}

TiePolicy parse_tie(const std::string& s) {
  if (s == "left") return TiePolicy::left();
  if (s == "right") return TiePolicy::right();
  if (s.rfind("seed:", 0) == 0) return TiePolicy::seeded(std::stoull(s.substr(5)));
  throw CLI::ValidationError("--tie", "expected left, right or seed:N");
}

int semantic_error(const std::string& kind, const std::string& message) {
  std::cout << nlohmann::json{{"error", kind}, {"message", message}}.dump() << "\n";
  return 1;
}

template <typename F>
int guarded(F f) {
  try {
    return f();
  } catch (const IoError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const CompatError& e) {
    return semantic_error("CompatError", e.what());
  } catch (const TraceTargetInvalid& e) {
    return semantic_error("TraceTargetInvalid", e.what());
  } catch (const HorizonExceeded& e) {
    return semantic_error("HorizonExceeded", e.what());
  } catch (const TraceFormatError& e) {
    return semantic_error("TraceFormatError", e.what());
  } catch (const StuckTerm& e) {
    return semantic_error("StuckTerm", e.what());
  }
}

int cmd_check(const std::string& path, const std::string& format) {
  bool json = format == "json";
  auto c = load(path, json);
  if (!c) return 1;
  if (json) {
    nlohmann::json types = nlohmann::json::array();
    for (const auto& [name, type] : c->result.types) types.push_back({{"name", name}, {"type", show(type)}});
    std::cout << nlohmann::json{{"types", types}}.dump() << "\n";
  } else {
    for (const auto& [name, type] : c->result.types) std::cout << name << " : " << show(type) << "\n";
  }
  return 0;
}

int cmd_run(const std::string& path, const std::string& trace_path, std::uint64_t horizon, TiePolicy tie) {
  auto c = load(path, false);
  if (!c) return 1;
  EventTrace trace = parse_trace(read_file(trace_path));
  RunResult r = run(c->result.elaborated, trace, horizon, tie);
  std::cout << to_json(r).dump() << "\n";
  return 0;
}

int cmd_enumerate(const std::string& path, std::uint64_t horizon) {
  auto c = load(path, false);
  if (!c) return 1;
  std::cout << to_json(eval_denot(c->result.elaborated, horizon)).dump() << "\n";
  return 0;
}

int cmd_conform(const std::string& path, std::uint64_t horizon) {
  std::vector<std::string> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path))
      if (e.path().extension() == ".lw") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
  } else if (fs::exists(path)) {
    files.push_back(path);
  } else {
    throw IoError("cannot read " + path);
  }
  bool single = files.size() == 1 && !fs::is_directory(path);
  nlohmann::json out = nlohmann::json::object();
  bool ok = true;
  for (const std::string& f : files) {
    std::string name = fs::path(f).filename().string();
    std::optional<Checked> c;
    {
      std::ostringstream sink;
      auto* old = std::cerr.rdbuf(sink.rdbuf());
      c = load(f, false);
      std::cerr.rdbuf(old);
    }
    if (!c) {
      if (single) return 1;
      out[name] = {{"skipped", "does not typecheck"}};
      continue;
    }
    std::uint64_t h = horizon;
    if (auto cap = conform_horizon_pragma(c->source)) h = std::min(h, *cap);
    ConformanceReport r = conformance(c->result.elaborated, h);
    ok = ok && r.ok();
    out[name] = to_json(r);
  }
  std::cout << (single ? out.begin().value() : out).dump() << "\n";
  return ok ? 0 : 1;
}

int cmd_serve(const std::string& path, int port, std::uint64_t horizon) {
  if (!path.empty() && !load(path, false)) return 1;
  Server server(horizon);
  try {
    int bound = server.listen(port);
    std::cerr << "listening on 127.0.0.1:" << bound << "\n";
  } catch (const ServerError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  server.serve();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lwc: typecheck, run, enumerate and serve λ_Widget programs"};
  app.require_subcommand(1);

  std::string source, trace, format = "text", tie = "seed:0";
  std::uint64_t horizon = 16;
  int port = 0;

  auto* check = app.add_subcommand("check", "typecheck a program and print its type table");
  check->add_option("source", source, "program file")->required();
  check->add_option("--format", format, "json or text")->check(CLI::IsMember({"json", "text"}));

  auto* runc = app.add_subcommand("run", "run a program against an event trace");
  runc->add_option("source", source, "program file")->required();
  runc->add_option("--trace", trace, "trace file (JSON lines)")->required();
  runc->add_option("--horizon", horizon, "last timestep");
  runc->add_option("--tie", tie, "left, right or seed:N");

  auto* enumc = app.add_subcommand("enumerate", "list every denotational outcome");
  enumc->add_option("source", source, "program file")->required();
  enumc->add_option("--horizon", horizon, "last timestep");

  auto* conf = app.add_subcommand("conform", "cross-check the runtime against the denotation");
  conf->add_option("source", source, "program file or directory")->required();
  conf->add_option("--horizon", horizon, "last timestep");

  auto* serve = app.add_subcommand("serve", "serve the playground protocol over TCP");
  serve->add_option("source", source, "program to check before serving");
  serve->add_option("--port", port, "TCP port on 127.0.0.1")->required();
  serve->add_option("--horizon", horizon, "last timestep of each session");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  return guarded([&] {
    if (*check) return cmd_check(source, format);
    if (*runc) return cmd_run(source, trace, horizon, parse_tie(tie));
    if (*enumc) return cmd_enumerate(source, horizon);
    if (*conf) return cmd_conform(source, horizon);
    return cmd_serve(source, port, horizon);
  });
}
