#pragma once

#include <memory>
#include <string>

#include "bridge/model.hpp"

namespace bridge {

struct ServerConfig {
  int port = 4242;                  // 0 picks a free port
  std::string host = "0.0.0.0";
  int max_concurrent_requests = 8;  // workers; excess requests queue FIFO
  double request_timeout_s = 3600;
  bool quiet = true;
};

// Reads BRIDGE_PORT when set, else falls back to the given default.
int port_from_env(int fallback);

class ServerHandle {
 public:
  virtual ~ServerHandle() = default;
  virtual int port() const = 0;
  virtual std::string url() const = 0;
  // Stops accepting connections and drains queued work.
  virtual void stop() = 0;
};

// Starts the HTTP front end for a registry on a background thread and
// returns once it accepts connections.
std::unique_ptr<ServerHandle> serve(std::shared_ptr<Registry> registry, ServerConfig config = {});

}  // namespace bridge
