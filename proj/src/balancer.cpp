#include "bridge/balancer.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "bridge/detail/http.hpp"

namespace bridge {

namespace {

std::string extract_name(const std::string& body) {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("name") || !j.at("name").is_string())
    throw BridgeError(ErrorType::InvalidInput,
                      "request body must be a JSON object with a \"name\" string");
  return j.at("name").get<std::string>();
}

bool wellformed_url(const std::string& url) {
  return url.rfind("http://", 0) == 0 || url.rfind("https://", 0) == 0;
}

}  // namespace

bool Balancer::Slot::serves(const std::string& name) const {
  return std::find(models.begin(), models.end(), name) != models.end();
}

Balancer::Balancer(double health_interval_s) : health_interval_s_(health_interval_s) {}

Balancer::~Balancer() { stop(); }

std::optional<std::vector<std::string>> Balancer::probe(const std::string& url,
                                                        double timeout_s) {
  httplib::Client cli(url);
  auto secs = std::max<time_t>(1, static_cast<time_t>(timeout_s));
  cli.set_connection_timeout(secs, 0);
  cli.set_read_timeout(secs, 0);
  cli.set_write_timeout(secs, 0);
  auto res = cli.Get(endpoint(Op::Info));
  if (!res || res->status != 200) return std::nullopt;
  try {
    InfoResponse info = decode_info(res->body);
    std::string major = info.protocol_version.substr(0, info.protocol_version.find('.'));
    if (major != "1") return std::nullopt;
    return info.models;
  } catch (...) {
    return std::nullopt;
  }
}

bool Balancer::register_backend(const std::string& url) {
  if (!wellformed_url(url))
    throw BridgeError(ErrorType::InvalidInput, "backend url must start with http:// or https://");
  {
    std::lock_guard<std::mutex> hold(mu_);
    for (const auto& s : slots_)
      if (s->url == url)
        throw BridgeError(ErrorType::InvalidInput, "backend already registered: " + url);
    if (!registering_.insert(url).second)
      throw BridgeError(ErrorType::InvalidInput, "backend already registered: " + url);
  }

  auto models = probe(url, std::min(5.0, std::max(0.5, health_interval_s_)));

  auto slot = std::make_shared<Slot>();
  slot->url = url;
  if (models) {
    slot->models = *models;
    slot->state = Slot::State::Idle;
  }
  slot->conn = std::make_unique<httplib::Client>(url);
  slot->conn->set_connection_timeout(10, 0);
  slot->conn->set_read_timeout(3600, 0);
  slot->conn->set_write_timeout(3600, 0);
  slot->conn->set_keep_alive(true);

  {
    std::lock_guard<std::mutex> hold(mu_);
    registering_.erase(url);
    slot->order = next_order_++;
    slots_.push_back(std::move(slot));
  }
  cv_.notify_all();
  return models.has_value();
}

void Balancer::deregister_backend(const std::string& url) {
  std::unique_lock<std::mutex> lk(mu_);
  auto it = std::find_if(slots_.begin(), slots_.end(),
                         [&](const auto& s) { return s->url == url; });
  if (it == slots_.end())
    throw BridgeError(ErrorType::InvalidInput, "backend not registered: " + url);
  std::shared_ptr<Slot> slot = *it;
  if (slot->state != Slot::State::Busy) {
    slots_.erase(it);
    cv_.notify_all();
    return;
  }
  // In flight: the release path removes drained slots.
  slot->draining = true;
  cv_.notify_all();
  cv_.wait(lk, [&] {
    if (stopping_) return true;
    return std::find(slots_.begin(), slots_.end(), slot) == slots_.end();
  });
  if (stopping_) {
    auto again = std::find(slots_.begin(), slots_.end(), slot);
    if (again != slots_.end()) slots_.erase(again);
  }
}

std::shared_ptr<Balancer::Slot> Balancer::acquire(const std::string& name) {
  std::unique_lock<std::mutex> lk(mu_);
  const std::uint64_t ticket = next_ticket_++;
  auto& q = waiting_[name];
  q.push_back(ticket);
  ++queue_depth_;
  queue_high_water_ = std::max(queue_high_water_, queue_depth_);

  std::shared_ptr<Slot> chosen;
  bool any_serving = false;
  bool any_alive = false;
  cv_.wait(lk, [&] {
    if (stopping_) return true;
    if (q.front() != ticket) return false;
    chosen.reset();
    any_serving = false;
    any_alive = false;
    for (const auto& s : slots_) {
      if (!s->serves(name)) continue;
      any_serving = true;
      if (s->draining || s->state == Slot::State::Unhealthy) continue;
      any_alive = true;
      if (s->state != Slot::State::Idle) continue;
      if (!chosen || s->last_used < chosen->last_used ||
          (s->last_used == chosen->last_used && s->order < chosen->order))
        chosen = s;
    }
    if (!any_serving || !any_alive) return true;
    return chosen != nullptr;
  });

  q.pop_front();
  --queue_depth_;
  if (q.empty()) waiting_.erase(name);
  cv_.notify_all();  // the next ticket for this name is now at the front

  if (stopping_)
    throw BridgeError(ErrorType::NoBackendAvailable, "balancer is shutting down");
  if (!chosen) {
    if (!any_serving)
      throw BridgeError(ErrorType::ModelNotFound, "no backend serves model \"" + name + "\"");
    throw BridgeError(ErrorType::NoBackendAvailable,
                      "all backends serving \"" + name + "\" are unhealthy");
  }
  chosen->state = Slot::State::Busy;
  chosen->last_used = ++clock_;
  return chosen;
}

void Balancer::release(const std::shared_ptr<Slot>& slot, bool ok, double latency_s) {
  {
    std::lock_guard<std::mutex> hold(mu_);
    if (ok) {
      ++slot->completed;
      slot->last_latency_s = latency_s;
      slot->state = Slot::State::Idle;
    } else {
      slot->state = Slot::State::Unhealthy;
      slot->conn = nullptr;  // drop the dead connection; re-dial on recovery
    }
    if (slot->draining) {
      auto it = std::find(slots_.begin(), slots_.end(), slot);
      if (it != slots_.end()) slots_.erase(it);
    }
  }
  cv_.notify_all();
}

WireResult Balancer::submit(Op op, const std::string& body) {
  const std::string name = extract_name(body);
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::shared_ptr<Slot> slot = acquire(name);
    if (!slot->conn) {
      slot->conn = std::make_unique<httplib::Client>(slot->url);
      slot->conn->set_connection_timeout(10, 0);
      slot->conn->set_read_timeout(3600, 0);
      slot->conn->set_write_timeout(3600, 0);
      slot->conn->set_keep_alive(true);
    }
    auto t0 = std::chrono::steady_clock::now();
    auto res = slot->conn->Post(endpoint(op), body, "application/json");
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (res) {
      release(slot, true, dt);
      return {res->status, res->body};
    }
    release(slot, false, dt);
  }
  throw BridgeError(ErrorType::InternalError,
                    "backend transport failed twice for model \"" + name + "\"");
}

std::string Balancer::info_body() const {
  std::vector<std::string> names;
  {
    std::lock_guard<std::mutex> hold(mu_);
    for (const auto& s : slots_) {
      if (s->draining || s->state == Slot::State::Unhealthy) continue;
      for (const auto& n : s->models)
        if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    }
  }
  return encode_info(names);
}

Json Balancer::stats() const {
  std::lock_guard<std::mutex> hold(mu_);
  Json backends = Json::array();
  std::uint64_t total = 0;
  for (const auto& s : slots_) {
    const char* state = s->draining                          ? "draining"
                        : s->state == Slot::State::Idle      ? "idle"
                        : s->state == Slot::State::Busy      ? "busy"
                                                             : "unhealthy";
    backends.push_back(Json{{"url", s->url},
                            {"state", state},
                            {"models", s->models},
                            {"completed", s->completed},
                            {"last_latency_s", s->last_latency_s}});
    total += s->completed;
  }
  return Json{{"backends", backends},
              {"queue_depth", queue_depth_},
              {"queue_high_water", queue_high_water_},
              {"total_completed", total}};
}

void Balancer::start_health_loop() {
  std::lock_guard<std::mutex> hold(mu_);
  if (health_thread_.joinable() || stopping_) return;
  health_thread_ = std::thread([this] { health_loop(); });
}

void Balancer::health_loop() {
  std::unique_lock<std::mutex> lk(mu_);
  while (!stopping_) {
    hcv_.wait_for(lk, std::chrono::duration<double>(health_interval_s_),
                  [this] { return stopping_; });
    if (stopping_) break;

    std::vector<std::shared_ptr<Slot>> targets;
    for (const auto& s : slots_)
      if (s->state != Slot::State::Busy && !s->draining) targets.push_back(s);

    lk.unlock();
    std::vector<std::optional<std::vector<std::string>>> outcome(targets.size());
    const double timeout = std::min(5.0, std::max(0.2, health_interval_s_ / 2.0));
    for (std::size_t i = 0; i < targets.size(); ++i) outcome[i] = probe(targets[i]->url, timeout);
    lk.lock();

    bool changed = false;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const auto& slot = targets[i];
      if (std::find(slots_.begin(), slots_.end(), slot) == slots_.end()) continue;
      if (slot->state == Slot::State::Busy || slot->draining) continue;
      if (outcome[i]) {
        slot->models = *outcome[i];
        if (slot->state != Slot::State::Idle) {
          slot->state = Slot::State::Idle;
          changed = true;
        }
      } else if (slot->state != Slot::State::Unhealthy) {
        slot->state = Slot::State::Unhealthy;
        slot->conn = nullptr;
        changed = true;
      }
    }
    if (changed) cv_.notify_all();
  }
}

void Balancer::stop() {
  {
    std::lock_guard<std::mutex> hold(mu_);
    if (stopping_) return;
    stopping_ = true;
    // Drop idle pooled connections so backends see EOF instead of waiting
    // out their keep-alive timeout. Busy slots own their connection until
    // the in-flight relay completes; leave those alone.
    for (auto& slot : slots_)
      if (slot->state != Slot::State::Busy) slot->conn = nullptr;
  }
  cv_.notify_all();
  hcv_.notify_all();
  if (health_thread_.joinable()) health_thread_.join();
}

BalancerConfig balancer_config_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("balancer config must be a JSON object");
  BalancerConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "port") {
      if (!value.is_number_integer() || value.get<long>() < 0 || value.get<long>() > 65535)
        throw std::invalid_argument("\"port\" must be an integer in [0, 65535]");
      c.port = value.get<int>();
    } else if (key == "backends") {
      if (!value.is_array()) throw std::invalid_argument("\"backends\" must be an array of urls");
      for (const auto& b : value) {
        if (!b.is_string()) throw std::invalid_argument("\"backends\" must be an array of urls");
        c.backends.push_back(b.get<std::string>());
      }
    } else if (key == "health_interval_s") {
      if (!value.is_number() || !(value.get<double>() > 0))
        throw std::invalid_argument("\"health_interval_s\" must be a positive number");
      c.health_interval_s = value.get<double>();
    } else if (key == "host") {
      if (!value.is_string()) throw std::invalid_argument("\"host\" must be a string");
      c.host = value.get<std::string>();
    } else if (key == "frontend_threads") {
      if (!value.is_number_integer() || value.get<long>() < 1)
        throw std::invalid_argument("\"frontend_threads\" must be a positive integer");
      c.frontend_threads = value.get<int>();
    } else {
      throw std::invalid_argument("unknown balancer config key \"" + key + "\"");
    }
  }
  return c;
}

BalancerServer::BalancerServer(BalancerConfig config)
    : config_(std::move(config)), core_(config_.health_interval_s) {}

BalancerServer::~BalancerServer() { stop(); }

std::string BalancerServer::url() const { return "http://127.0.0.1:" + std::to_string(port_); }

void BalancerServer::start() {
  if (running_) return;

  for (const auto& url : config_.backends) core_.register_backend(url);
  core_.start_health_loop();

  http_ = std::make_unique<httplib::Server>();
  const int workers = std::max(8, config_.frontend_threads);
  http_->new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
  http_->set_keep_alive_max_count(1000000);
  // Short timeout so frontend workers parked on idle connections notice a
  // stopped listener quickly; clients reconnect transparently.
  http_->set_keep_alive_timeout(2);
  http_->set_read_timeout(3600, 0);
  http_->set_write_timeout(3600, 0);
  http_->set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        res.status = 500;
        res.set_content(encode_error(ErrorType::InternalError, "unhandled balancer failure"),
                        "application/json");
      });

  auto fail = [](httplib::Response& res, const BridgeError& e) {
    res.status = http_status(e.type());
    res.set_content(encode_error(e.type(), e.what()), "application/json");
  };

  http_->Get(endpoint(Op::Info), [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(core_.info_body(), "application/json");
  });
  for (Op op : {Op::InputSizes, Op::OutputSizes, Op::ModelInfo, Op::Evaluate, Op::Gradient,
                Op::ApplyJacobian, Op::ApplyHessian}) {
    http_->Post(endpoint(op), [this, op, fail](const httplib::Request& req, httplib::Response& res) {
      try {
        WireResult r = core_.submit(op, req.body);
        res.status = r.status;
        res.set_content(r.body, "application/json");
      } catch (const BridgeError& e) {
        fail(res, e);
      }
    });
  }

  http_->Post("/admin/register", [this, fail](const httplib::Request& req, httplib::Response& res) {
    try {
      Json j = Json::parse(req.body, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("url") || !j.at("url").is_string())
        throw BridgeError(ErrorType::InvalidInput, "expected {\"url\": string}");
      bool healthy = core_.register_backend(j.at("url").get<std::string>());
      res.set_content(Json{{"url", j.at("url")}, {"state", healthy ? "idle" : "unhealthy"}}.dump(),
                      "application/json");
    } catch (const BridgeError& e) {
      fail(res, e);
    }
  });
  http_->Post("/admin/deregister", [this, fail](const httplib::Request& req, httplib::Response& res) {
    try {
      Json j = Json::parse(req.body, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("url") || !j.at("url").is_string())
        throw BridgeError(ErrorType::InvalidInput, "expected {\"url\": string}");
      core_.deregister_backend(j.at("url").get<std::string>());
      res.set_content(Json{{"url", j.at("url")}, {"deregistered", true}}.dump(),
                      "application/json");
    } catch (const BridgeError& e) {
      fail(res, e);
    }
  });
  http_->Get("/admin/stats", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(core_.stats().dump(), "application/json");
  });

  if (config_.port == 0) {
    port_ = http_->bind_to_any_port(config_.host);
    if (port_ < 0) throw std::runtime_error("failed to bind a port");
  } else {
    if (!http_->bind_to_port(config_.host, config_.port))
      throw std::runtime_error("failed to bind port " + std::to_string(config_.port));
    port_ = config_.port;
  }
  serve_thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  running_ = true;
}

void BalancerServer::stop() {
  if (!running_) {
    if (http_) {
      http_->stop();
      if (serve_thread_.joinable()) serve_thread_.join();
    }
    core_.stop();
    return;
  }
  running_ = false;
  core_.stop();  // wake waiters first so frontend handlers can finish
  http_->stop();
  if (serve_thread_.joinable()) serve_thread_.join();
}

}  // namespace bridge
