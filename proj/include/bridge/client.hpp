#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bridge/model.hpp"

namespace bridge {

struct ClientOptions {
  int max_retries = 2;          // re-sends after a transport failure
  double backoff_base_s = 0.5;  // sleep before retry k is base * 2^k
  double timeout_s = 3600;
};

// Reads BRIDGE_URL when set, else the given default.
std::string url_from_env(const std::string& fallback = "http://localhost:4242");

// One-shot GET /Info, no retries. Throws BridgeError on transport failure,
// error payloads and schema violations.
InfoResponse fetch_info(const std::string& url, double timeout_s = 10.0);

namespace detail {
class Transport;
}

// Proxy for one named model behind a server. Implements the Model interface,
// so samplers and tests treat local and remote models uniformly. Transport
// failures are retried with exponential backoff; typed model errors are
// rethrown as-is and never retried. Safe for concurrent use; connections are
// pooled per call.
class RemoteModel : public Model {
 public:
  // Fetches /Info and /ModelInfo; rejects servers whose protocol major
  // version differs and names missing from the server's list.
  static std::shared_ptr<RemoteModel> connect(const std::string& url, const std::string& name,
                                              ClientOptions options = {});

  ~RemoteModel() override;

  std::string name() const override { return name_; }
  std::vector<std::size_t> input_sizes(const Config& config) const override;
  std::vector<std::size_t> output_sizes(const Config& config) const override;
  Capabilities capabilities() const override { return caps_; }

  ParameterList evaluate(const ParameterList& input, const Config& config) const override;
  Vector gradient(std::size_t out_wrt, std::size_t in_wrt, const ParameterList& input,
                  const Vector& sens, const Config& config) const override;
  Vector apply_jacobian(std::size_t out_wrt, std::size_t in_wrt, const ParameterList& input,
                        const Vector& vec, const Config& config) const override;
  Vector apply_hessian(std::size_t out_wrt, std::size_t in_wrt1, std::size_t in_wrt2,
                       const ParameterList& input, const Vector& sens, const Vector& vec,
                       const Config& config) const override;

  const std::string& url() const { return url_; }
  const std::string& protocol_version() const { return version_; }
  const std::vector<std::string>& server_models() const { return server_models_; }

 private:
  RemoteModel(std::string url, std::string name, ClientOptions options);

  std::string post(Op op, const Request& r) const;

  std::string url_;
  std::string name_;
  ClientOptions options_;
  std::string version_;
  std::vector<std::string> server_models_;
  Capabilities caps_;
  std::shared_ptr<detail::Transport> transport_;
};

// Evaluates a batch with at most `concurrency` requests in flight. Results
// keep input order; the first failure aborts dispatch and is rethrown.
std::vector<ParameterList> evaluate_many(const Model& model,
                                         const std::vector<ParameterList>& inputs,
                                         const Config& config, int concurrency);

}  // namespace bridge
