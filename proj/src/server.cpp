#include "lambda_widget/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "lambda_widget/desugar.hpp"
#include "lambda_widget/parser.hpp"
#include "lambda_widget/pretty.hpp"

namespace lw {

namespace {

nlohmann::json error(const std::string& kind, const std::string& message = "") {
  nlohmann::json j{{"error", kind}};
  if (!message.empty()) j["message"] = message;
  return j;
}

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t natural(const nlohmann::json& req, const char* field) {
  if (!req.contains(field) || !req[field].is_number_unsigned()) throw ProtocolError(std::string("missing natural '") + field + "'");
  return req[field].get<std::uint64_t>();
}

}  // namespace

Session::Session(std::uint64_t horizon) : horizon_(horizon) {}

std::string Session::handle(const std::string& line) {
  nlohmann::json reply;
  try {
    nlohmann::json req = nlohmann::json::parse(line);
    if (!req.is_object() || !req.contains("op") || !req["op"].is_string()) throw ProtocolError("missing op");
    std::string op = req["op"];
    if (op == "load") {
      reply = load(req);
    } else if (op == "event") {
      reply = event(req);
    } else if (op == "snapshot") {
      reply = snapshot(req);
    } else {
      throw ProtocolError("unknown op '" + op + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    closed_ = true;
    reply = error("ProtocolError", e.what());
  } catch (const ProtocolError& e) {
    closed_ = true;
    reply = error("ProtocolError", e.what());
  } catch (const TraceTargetInvalid& e) {
    reply = error("TraceTargetInvalid", e.what());
  } catch (const CompatError& e) {
    reply = error("CompatError", e.what());
  } catch (const HorizonExceeded& e) {
    reply = error("HorizonExceeded", e.what());
  } catch (const TraceFormatError& e) {
    reply = error("TraceFormatError", e.what());
  } catch (const StuckTerm& e) {
    reply = error("StuckTerm", e.what());
  }
  return reply.dump();
}

nlohmann::json Session::load(const nlohmann::json& req) {
  if (!req.contains("source") || !req["source"].is_string()) throw ProtocolError("missing 'source'");
  runtime_.reset();
  program_.reset();
  CheckResult r;
  try {
    r = check_source(req["source"].get<std::string>());
  } catch (const SyntaxError& e) {
    return error("SyntaxError", e.what());
  } catch (const DesugarError& e) {
    return error("DesugarError", e.what());
  }
  if (!r.ok()) return error(kind_name(r.errors.front().kind), r.errors.front().message);
  program_ = std::make_unique<SourceProgram>(std::move(r.elaborated));
  runtime_ = std::make_unique<Runtime>(*program_, horizon_, TiePolicy::seeded(0));
  nlohmann::json types = nlohmann::json::object();
  for (const auto& [name, type] : r.types) types[name] = show(type);
  return {{"ok", {{"types", types}, {"entry", program_->entry}}}};
}

nlohmann::json Session::event(const nlohmann::json& req) {
  if (!runtime_) throw ProtocolError("no program loaded");
  Stimulus s;
  s.time = natural(req, "t");
  s.widget = natural(req, "widget");
  std::string kind = req.contains("kind") && req["kind"].is_string() ? req["kind"].get<std::string>() : "";
  if (kind == "click") {
    s.kind = Stimulus::Kind::Click;
  } else if (kind == "keypress") {
    s.kind = Stimulus::Kind::Keypress;
    if (req.contains("char") && req["char"].is_string() && !req["char"].get<std::string>().empty())
      s.key = req["char"].get<std::string>()[0];
  } else {
    throw ProtocolError("unknown event kind '" + kind + "'");
  }
  if (s.time < runtime_->clock()) return error("TraceFormatError", "event time is in the past");
  runtime_->deliver({s});
  return {{"ok", {{"t", runtime_->clock()}}}};
}

nlohmann::json Session::snapshot(const nlohmann::json& req) {
  if (!runtime_) throw ProtocolError("no program loaded");
  std::uint64_t t = natural(req, "t");
  runtime_->advance_to(t + 1);
  nlohmann::json widgets = nlohmann::json::array();
  for (const Logbook& w : runtime_->logbooks()) {
    nlohmann::json j = to_json(render_state(w, t));
    j["id"] = w.id;
    widgets.push_back(j);
  }
  return {{"snapshot", {{"t", t}, {"widgets", widgets}}}};
}

Server::~Server() { stop(); }

int Server::listen(int port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw ServerError(std::strerror(errno));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd_, 16) < 0) {
    std::string why = std::strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw ServerError("cannot listen on port " + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  return ntohs(addr.sin_port);
}

void Server::serve() {
  while (!stopping_) {
    int client = ::accept(fd_, nullptr, nullptr);
    if (client < 0) {
      if (stopping_) break;
      continue;
    }
    std::thread([client, horizon = horizon_] {
      Session session(horizon);
      std::string buf;
      char chunk[4096];
      for (;;) {
        ssize_t n = ::recv(client, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        buf.append(chunk, static_cast<std::size_t>(n));
        std::size_t nl;
        while ((nl = buf.find('\n')) != std::string::npos) {
          std::string line = buf.substr(0, nl);
          buf.erase(0, nl + 1);
          if (line.empty()) continue;
          std::string reply = session.handle(line) + "\n";
          if (::send(client, reply.data(), reply.size(), MSG_NOSIGNAL) < 0) break;
          if (session.closed()) break;
        }
        if (session.closed()) break;
      }
      ::close(client);
    }).detach();
  }
}

void Server::stop() {
  if (fd_ < 0) return;
  stopping_ = true;
  ::shutdown(fd_, SHUT_RDWR);
  ::close(fd_);
  fd_ = -1;
}

}  // namespace lw
