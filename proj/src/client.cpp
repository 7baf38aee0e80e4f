#include "bridge/client.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <mutex>
#include <thread>

#include "bridge/detail/http.hpp"

namespace bridge {

std::string url_from_env(const std::string& fallback) {
  const char* s = std::getenv("BRIDGE_URL");
  return (s && *s) ? std::string(s) : fallback;
}

namespace detail {

// Connection pool for one base URL. A connection is used by one request at a
// time; failed connections are discarded instead of returned.
class Transport {
 public:
  Transport(std::string url, double timeout_s) : url_(std::move(url)), timeout_s_(timeout_s) {}

  struct Raw {
    int status = 0;
    std::string body;
  };

  Raw roundtrip(bool get, const std::string& path, const std::string& body, int max_retries,
                double backoff_base_s) {
    for (int attempt = 0;; ++attempt) {
      auto cli = checkout();
      httplib::Result res =
          get ? cli->Get(path) : cli->Post(path, body, "application/json");
      if (res) {
        checkin(std::move(cli));
        return {res->status, res->body};
      }
      if (attempt >= max_retries)
        throw BridgeError(ErrorType::InternalError,
                          "transport failure for " + url_ + path + ": " +
                              httplib::to_string(res.error()));
      std::this_thread::sleep_for(
          std::chrono::duration<double>(backoff_base_s * std::pow(2.0, attempt)));
    }
  }

 private:
  std::unique_ptr<httplib::Client> checkout() {
    {
      std::lock_guard<std::mutex> hold(mu_);
      if (!idle_.empty()) {
        auto cli = std::move(idle_.back());
        idle_.pop_back();
        return cli;
      }
    }
    auto cli = std::make_unique<httplib::Client>(url_);
    auto secs = std::max<time_t>(1, static_cast<time_t>(timeout_s_));
    cli->set_connection_timeout(10, 0);
    cli->set_read_timeout(secs, 0);
    cli->set_write_timeout(secs, 0);
    cli->set_keep_alive(true);
    return cli;
  }

  void checkin(std::unique_ptr<httplib::Client> cli) {
    std::lock_guard<std::mutex> hold(mu_);
    if (idle_.size() < 64) idle_.push_back(std::move(cli));
  }

  std::mutex mu_;
  std::vector<std::unique_ptr<httplib::Client>> idle_;
  std::string url_;
  double timeout_s_;
};

}  // namespace detail

InfoResponse fetch_info(const std::string& url, double timeout_s) {
  detail::Transport transport(url, timeout_s);
  auto raw = transport.roundtrip(true, endpoint(Op::Info), "", 0, 0);
  if (raw.status != 200) throw_wire_error(raw.status, raw.body);
  return decode_info(raw.body);
}

RemoteModel::RemoteModel(std::string url, std::string name, ClientOptions options)
    : url_(std::move(url)),
      name_(std::move(name)),
      options_(options),
      transport_(std::make_shared<detail::Transport>(url_, options.timeout_s)) {}

RemoteModel::~RemoteModel() = default;

std::shared_ptr<RemoteModel> RemoteModel::connect(const std::string& url, const std::string& name,
                                                  ClientOptions options) {
  std::shared_ptr<RemoteModel> m(new RemoteModel(url, name, options));

  auto info = m->transport_->roundtrip(true, endpoint(Op::Info), "", options.max_retries,
                                       options.backoff_base_s);
  if (info.status != 200) throw_wire_error(info.status, info.body);
  InfoResponse parsed = decode_info(info.body);
  std::string major = parsed.protocol_version.substr(0, parsed.protocol_version.find('.'));
  if (major != "1")
    throw BridgeError(ErrorType::InternalError,
                      "unsupported protocol version \"" + parsed.protocol_version + "\"");
  m->version_ = parsed.protocol_version;
  m->server_models_ = parsed.models;

  bool found = false;
  for (const std::string& n : parsed.models) found = found || n == name;
  if (!found)
    throw BridgeError(ErrorType::ModelNotFound,
                      "server at " + url + " has no model named \"" + name + "\"");

  Request r;
  r.op = Op::ModelInfo;
  r.name = name;
  m->caps_ = decode_model_info(m->post(Op::ModelInfo, r));
  return m;
}

std::string RemoteModel::post(Op op, const Request& r) const {
  auto raw = transport_->roundtrip(false, endpoint(op), encode_request(r), options_.max_retries,
                                   options_.backoff_base_s);
  if (raw.status != 200) throw_wire_error(raw.status, raw.body);
  return raw.body;
}

std::vector<std::size_t> RemoteModel::input_sizes(const Config& config) const {
  Request r;
  r.op = Op::InputSizes;
  r.name = name_;
  r.config = config;
  return decode_input_sizes(post(Op::InputSizes, r));
}

std::vector<std::size_t> RemoteModel::output_sizes(const Config& config) const {
  Request r;
  r.op = Op::OutputSizes;
  r.name = name_;
  r.config = config;
  return decode_output_sizes(post(Op::OutputSizes, r));
}

ParameterList RemoteModel::evaluate(const ParameterList& input, const Config& config) const {
  Request r;
  r.op = Op::Evaluate;
  r.name = name_;
  r.input = input;
  r.config = config;
  return decode_output_list(post(Op::Evaluate, r));
}

Vector RemoteModel::gradient(std::size_t out_wrt, std::size_t in_wrt, const ParameterList& input,
                             const Vector& sens, const Config& config) const {
  Request r;
  r.op = Op::Gradient;
  r.name = name_;
  r.out_wrt = out_wrt;
  r.in_wrt = in_wrt;
  r.input = input;
  r.sens = sens;
  r.config = config;
  return decode_output_vector(post(Op::Gradient, r));
}

Vector RemoteModel::apply_jacobian(std::size_t out_wrt, std::size_t in_wrt,
                                   const ParameterList& input, const Vector& vec,
                                   const Config& config) const {
  Request r;
  r.op = Op::ApplyJacobian;
  r.name = name_;
  r.out_wrt = out_wrt;
  r.in_wrt = in_wrt;
  r.input = input;
  r.vec = vec;
  r.config = config;
  return decode_output_vector(post(Op::ApplyJacobian, r));
}

Vector RemoteModel::apply_hessian(std::size_t out_wrt, std::size_t in_wrt1, std::size_t in_wrt2,
                                  const ParameterList& input, const Vector& sens,
                                  const Vector& vec, const Config& config) const {
  Request r;
  r.op = Op::ApplyHessian;
  r.name = name_;
  r.out_wrt = out_wrt;
  r.in_wrt1 = in_wrt1;
  r.in_wrt2 = in_wrt2;
  r.input = input;
  r.sens = sens;
  r.vec = vec;
  r.config = config;
  return decode_output_vector(post(Op::ApplyHessian, r));
}

std::vector<ParameterList> evaluate_many(const Model& model,
                                         const std::vector<ParameterList>& inputs,
                                         const Config& config, int concurrency) {
  std::vector<ParameterList> results(inputs.size());
  if (inputs.empty()) return results;
  concurrency = std::max(1, std::min<int>(concurrency, static_cast<int>(inputs.size())));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::size_t err_index = inputs.size();
  std::exception_ptr err;

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= inputs.size() || failed.load()) return;
      try {
        results[i] = model.evaluate(inputs[i], config);
      } catch (...) {
        std::lock_guard<std::mutex> hold(err_mu);
        // Keep the failure of the earliest index so reruns report the same error.
        if (!err || i < err_index) {
          err = std::current_exception();
          err_index = i;
        }
        failed.store(true);
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(concurrency);
  for (int t = 0; t < concurrency; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  if (err) std::rethrow_exception(err);
  return results;
}

}  // namespace bridge
