#pragma once

// Runs a StudyServer on an ephemeral localhost port for the lifetime of the object.

#include <httplib.h>

#include <memory>
#include <stdexcept>
#include <thread>

#include "lipkit/study_service.hpp"

namespace harness {

class RunningServer {
 public:
  RunningServer(lipkit::StudyService& service, lipkit::ServerOptions options)
      : server_(std::make_unique<lipkit::StudyServer>(service, std::move(options))) {
    port_ = server_->bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("cannot bind test server");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
  }
  ~RunningServer() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
  }
  RunningServer(const RunningServer&) = delete;
  RunningServer& operator=(const RunningServer&) = delete;

  int port() const { return port_; }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_connection_timeout(5);
    c.set_read_timeout(10);
    return c;
  }

 private:
  std::unique_ptr<lipkit::StudyServer> server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace harness
