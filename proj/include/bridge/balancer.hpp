#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "bridge/model.hpp"
#include "bridge/protocol.hpp"

namespace httplib {
class Server;
class Client;
}  // namespace httplib

namespace bridge {

struct BalancerConfig {
  int port = 4243;  // 0 picks a free port
  std::string host = "0.0.0.0";
  std::vector<std::string> backends;
  double health_interval_s = 5.0;
  int frontend_threads = 256;
};

// Accepts {"port":int,"backends":[url,...],"health_interval_s":num}; every key
// optional, unknown keys rejected.
BalancerConfig balancer_config_from_json(const Json& j);

// Request pool with at most one in-flight request per backend.
//
// Routing: requests are keyed by model name. Waiters for the same name are
// served FIFO; each is dispatched to the least-recently-used idle backend
// advertising that name (ties by registration order). Responses are relayed
// byte for byte, whatever their status. A transport-level failure marks the
// backend unhealthy and requeues the request once; a second failure surfaces
// as InternalError. When no live backend advertises the name, submit fails
// with NoBackendAvailable (or ModelNotFound when no backend lists it at
// all). A periodic probe of each backend's /Info endpoint flips slots
// between idle and unhealthy.
class Balancer {
 public:
  explicit Balancer(double health_interval_s = 5.0);
  ~Balancer();

  // Probes url synchronously; adds the slot idle on success, unhealthy on
  // failure. Returns whether the probe succeeded. Throws InvalidInput for a
  // duplicate or malformed url.
  bool register_backend(const std::string& url);

  // Waits for any in-flight request on the slot to finish, then removes it.
  // Throws InvalidInput when the url is not registered.
  void deregister_backend(const std::string& url);

  // Routes one request body to a backend; blocks while all capable backends
  // are busy. Throws BridgeError instead of fabricating a response only when
  // routing itself fails.
  WireResult submit(Op op, const std::string& body);

  // Wire-encoded /Info payload: the union of model names across live slots,
  // in registration order. Identical to a single backend's /Info when the
  // pool is homogeneous.
  std::string info_body() const;

  Json stats() const;

  void start_health_loop();

  // Wakes all waiters (they fail with NoBackendAvailable) and stops probing.
  void stop();

 private:
  struct Slot {
    enum class State { Idle, Busy, Unhealthy };
    std::string url;
    std::vector<std::string> models;
    State state = State::Unhealthy;
    bool draining = false;
    std::uint64_t last_used = 0;
    std::uint64_t completed = 0;
    double last_latency_s = 0.0;
    std::size_t order = 0;
    std::unique_ptr<httplib::Client> conn;

    bool serves(const std::string& name) const;
  };

  std::shared_ptr<Slot> acquire(const std::string& name);
  void release(const std::shared_ptr<Slot>& slot, bool ok, double latency_s);
  void health_loop();
  // /Info probe; empty on any failure or protocol mismatch.
  static std::optional<std::vector<std::string>> probe(const std::string& url, double timeout_s);

  mutable std::mutex mu_;
  std::condition_variable cv_;   // slot/queue state changes
  std::condition_variable hcv_;  // health loop wakeup
  std::vector<std::shared_ptr<Slot>> slots_;
  std::set<std::string> registering_;  // urls with a probe in progress
  std::map<std::string, std::deque<std::uint64_t>> waiting_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t clock_ = 0;
  std::size_t next_order_ = 0;
  std::size_t queue_depth_ = 0;
  std::size_t queue_high_water_ = 0;
  double health_interval_s_;
  bool stopping_ = false;
  std::thread health_thread_;
};

// HTTP frontend around Balancer: the full model protocol plus
// POST /admin/register {"url"}, POST /admin/deregister {"url"} and
// GET /admin/stats. Indistinguishable from a model server to clients.
class BalancerServer {
 public:
  explicit BalancerServer(BalancerConfig config);
  ~BalancerServer();

  // Registers configured backends (unreachable ones start unhealthy), starts
  // the health loop and the listener. Throws std::runtime_error when the
  // port cannot be bound.
  void start();
  void stop();

  int port() const { return port_; }
  std::string url() const;
  Balancer& core() { return core_; }

 private:
  BalancerConfig config_;
  Balancer core_;
  std::unique_ptr<httplib::Server> http_;
  std::thread serve_thread_;
  int port_ = 0;
  bool running_ = false;
};

}  // namespace bridge
