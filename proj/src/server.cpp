#include "bridge/server.hpp"

#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "bridge/detail/http.hpp"

namespace bridge {

int port_from_env(int fallback) {
  const char* s = std::getenv("BRIDGE_PORT");
  if (!s || !*s) return fallback;
  char* end = nullptr;
  long p = std::strtol(s, &end, 10);
  if (*end != '\0' || p < 0 || p > 65535)
    throw std::invalid_argument("BRIDGE_PORT must be a port number, got \"" + std::string(s) + "\"");
  return static_cast<int>(p);
}

namespace {

class HttplibServer : public ServerHandle {
 public:
  HttplibServer(std::shared_ptr<Registry> registry, ServerConfig config)
      : registry_(std::move(registry)), config_(config) {
    const int workers = std::max(1, config_.max_concurrent_requests);
    server_.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
    server_.set_keep_alive_max_count(1000000);
    // Workers parked on an idle keep-alive connection only re-check a stopped
    // listener after this timeout, so it bounds how long stop() can block.
    // Pooled clients reconnect transparently when the server closes an idle
    // connection, so short is safe.
    server_.set_keep_alive_timeout(2);
    auto timeout = std::max<time_t>(1, static_cast<time_t>(config_.request_timeout_s));
    server_.set_read_timeout(timeout, 0);
    server_.set_write_timeout(timeout, 0);
    server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
      res.status = 500;
      res.set_content(encode_error(ErrorType::InternalError, "unhandled server failure"),
                      "application/json");
    });

    server_.Get(endpoint(Op::Info), [this](const httplib::Request&, httplib::Response& res) {
      finish(res, handle_request(*registry_, Op::Info, ""));
    });
    for (Op op : {Op::InputSizes, Op::OutputSizes, Op::ModelInfo, Op::Evaluate, Op::Gradient,
                  Op::ApplyJacobian, Op::ApplyHessian}) {
      server_.Post(endpoint(op), [this, op](const httplib::Request& req, httplib::Response& res) {
        finish(res, handle_request(*registry_, op, req.body));
      });
    }

    if (config_.port == 0) {
      port_ = server_.bind_to_any_port(config_.host);
      if (port_ < 0) throw std::runtime_error("failed to bind a port");
    } else {
      if (!server_.bind_to_port(config_.host, config_.port))
        throw std::runtime_error("failed to bind port " + std::to_string(config_.port));
      port_ = config_.port;
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    if (!config_.quiet)
      std::fprintf(stderr, "serving %zu model(s) on %s:%d\n", registry_->names().size(),
                   config_.host.c_str(), port_);
  }

  ~HttplibServer() override { stop(); }

  int port() const override { return port_; }

  std::string url() const override { return "http://127.0.0.1:" + std::to_string(port_); }

  void stop() override {
    bool expected = false;
    if (!stopped_.compare_exchange_strong(expected, true)) return;
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  static void finish(httplib::Response& res, const WireResult& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  }

  std::shared_ptr<Registry> registry_;
  ServerConfig config_;
  httplib::Server server_;
  std::thread thread_;
  std::atomic<bool> stopped_{false};
  int port_ = 0;
};

}  // namespace

std::unique_ptr<ServerHandle> serve(std::shared_ptr<Registry> registry, ServerConfig config) {
  return std::make_unique<HttplibServer>(std::move(registry), config);
}

}  // namespace bridge
