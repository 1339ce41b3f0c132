#pragma once

// The playground wire protocol: newline-delimited JSON over TCP, one live
// runtime per connection.

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "json.hpp"
#include "lambda_widget/runtime.hpp"
#include "lambda_widget/typecheck.hpp"

namespace lw {

class Session {
 public:
  explicit Session(std::uint64_t horizon = 16);

  /// Handles one request line and returns one reply line.
  std::string handle(const std::string& line);
  /// Set after a protocol violation; the connection should be closed.
  bool closed() const { return closed_; }

 private:
  std::uint64_t horizon_;
  std::unique_ptr<SourceProgram> program_;
  std::unique_ptr<Runtime> runtime_;
  bool closed_ = false;

  nlohmann::json load(const nlohmann::json& req);
  nlohmann::json event(const nlohmann::json& req);
  nlohmann::json snapshot(const nlohmann::json& req);
};

class ServerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Server {
 public:
  explicit Server(std::uint64_t horizon = 16) : horizon_(horizon) {}
  ~Server();

  /// Binds 127.0.0.1:`port` (0 picks a free port) and returns the bound port.
  /// Throws ServerError if the port is busy.
  int listen(int port);
  /// Accepts connections until stop() is called.
  void serve();
  void stop();

 private:
  std::uint64_t horizon_;
  int fd_ = -1;
  std::atomic<bool> stopping_{false};
};

}  // namespace lw
