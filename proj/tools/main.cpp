// Command-line front end: serve models, inspect and call servers, run the
// load balancer, the synthetic benchmark and the reference samplers.
//
// Exit codes: 0 success, 1 transport/model error, 2 usage error.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bridge/balancer.hpp"
#include "bridge/bench.hpp"
#include "bridge/catalog.hpp"
#include "bridge/client.hpp"
#include "bridge/samplers.hpp"
#include "bridge/server.hpp"

namespace {

using bridge::BridgeError;
using bridge::Json;
using bridge::Vector;

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

// Blocks until SIGINT or SIGTERM. Must run before worker threads spawn so
// they inherit the blocked mask.
void block_shutdown_signals(sigset_t* set) {
  sigemptyset(set);
  sigaddset(set, SIGINT);
  sigaddset(set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, set, nullptr);
}

void wait_for_shutdown(sigset_t* set) {
  int sig = 0;
  sigwait(set, &sig);
}

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Json parse_json_arg(const std::string& text, const std::string& what) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw CLI::ValidationError(what, "not valid JSON: " + text);
  return j;
}

Vector vector_arg(const std::string& text, const std::string& what) {
  try {
    return bridge::vector_from_json(parse_json_arg(text, what));
  } catch (const BridgeError& e) {
    throw CLI::ValidationError(what, e.what());
  }
}

bridge::Config config_arg(const std::string& text) {
  if (text.empty()) return bridge::Config::object();
  Json j = parse_json_arg(text, "--config");
  if (!j.is_object()) throw CLI::ValidationError("--config", "must be a JSON object");
  return j;
}

// "box:[[lo,hi],...]" or "fixed:[[...],[...]]".
bridge::McDistribution dist_arg(const std::string& text) {
  auto colon = text.find(':');
  const std::string kind = text.substr(0, colon == std::string::npos ? 0 : colon);
  if (colon == std::string::npos || (kind != "box" && kind != "fixed"))
    throw CLI::ValidationError("--dist", "expected box:[[lo,hi],...] or fixed:[[...],...]");
  Json j = parse_json_arg(text.substr(colon + 1), "--dist");
  if (kind == "box") {
    if (!j.is_array() || j.empty())
      throw CLI::ValidationError("--dist", "box needs a non-empty array of [lo,hi] pairs");
    bridge::BoxDistribution box;
    box.lo.resize(static_cast<Eigen::Index>(j.size()));
    box.hi.resize(static_cast<Eigen::Index>(j.size()));
    Eigen::Index i = 0;
    for (const auto& pair : j) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
        throw CLI::ValidationError("--dist", "each box entry must be [lo,hi]");
      box.lo[i] = pair[0].get<double>();
      box.hi[i] = pair[1].get<double>();
      ++i;
    }
    return box;
  }
  bridge::FixedList fixed;
  if (!j.is_array() || j.empty())
    throw CLI::ValidationError("--dist", "fixed needs a non-empty array of points");
  for (const auto& p : j) {
    try {
      fixed.points.push_back(bridge::vector_from_json(p));
    } catch (const BridgeError& e) {
      throw CLI::ValidationError("--dist", e.what());
    }
  }
  return fixed;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open csv file " + path);
  for (std::size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << header[i];
  f << "\n";
  Json num;  // reuse nlohmann's shortest round-trip float formatting
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      num = row[i];
      f << (i ? "," : "") << num.dump();
    }
    f << "\n";
  }
}

Json to_json_array(const Vector& v) { return bridge::to_json(v); }

int run_serve(const std::string& models_csv, int port, const std::string& host, int workers,
              bool verbose) {
  auto names = split_names(models_csv);
  if (names.empty()) {
    std::cerr << "serve: --models must name at least one model\n";
    return kUsageError;
  }
  std::shared_ptr<bridge::Registry> registry;
  try {
    registry = bridge::make_registry(names);
  } catch (const std::invalid_argument& e) {
    std::cerr << "serve: " << e.what() << "\n";
    return kUsageError;
  }
  bridge::ServerConfig config;
  config.port = port;
  config.host = host;
  config.max_concurrent_requests = workers;
  config.quiet = !verbose;
  sigset_t set;
  block_shutdown_signals(&set);
  auto server = bridge::serve(registry, config);
  if (verbose) std::cerr << "listening on port " << server->port() << "\n";
  wait_for_shutdown(&set);
  server->stop();
  return kOk;
}

int run_info(const std::string& url, const std::string& name) {
  bridge::InfoResponse info = bridge::fetch_info(url);
  std::string major = info.protocol_version.substr(0, info.protocol_version.find('.'));
  if (major != "1")
    throw BridgeError(bridge::ErrorType::InternalError,
                      "server speaks protocol version " + info.protocol_version +
                          ", this client requires major version 1");
  std::cout << "protocol " << info.protocol_version << "\n";
  std::vector<std::string> targets = name.empty() ? info.models : std::vector<std::string>{name};
  for (const auto& n : targets) {
    auto model = bridge::RemoteModel::connect(url, n);
    auto caps = model->capabilities();
    std::string ops;
    if (caps.evaluate) ops += " Evaluate";
    if (caps.gradient) ops += " Gradient";
    if (caps.apply_jacobian) ops += " ApplyJacobian";
    if (caps.apply_hessian) ops += " ApplyHessian";
    std::cout << n << ":\n";
    std::cout << "  inputSizes  " << Json(model->input_sizes(bridge::Config::object())).dump()
              << "\n";
    std::cout << "  outputSizes " << Json(model->output_sizes(bridge::Config::object())).dump()
              << "\n";
    std::cout << "  supports   " << (ops.empty() ? " (nothing)" : ops) << "\n";
  }
  return kOk;
}

int run_eval(const std::string& url, const std::string& name, const std::string& input_text,
             const std::string& config_text) {
  bridge::ParameterList input;
  try {
    input = bridge::parameter_list_from_json(parse_json_arg(input_text, "--input"));
  } catch (const BridgeError& e) {
    throw CLI::ValidationError("--input", e.what());
  }
  auto config = config_arg(config_text);
  auto model = bridge::RemoteModel::connect(url, name);
  bridge::ParameterList out = model->evaluate(input, config);
  std::cout << bridge::to_json(out).dump() << "\n";
  return kOk;
}

int run_balance(const std::string& config_path) {
  std::ifstream f(config_path);
  if (!f) {
    std::cerr << "balance: cannot read config file " << config_path << "\n";
    return kUsageError;
  }
  Json j = Json::parse(f, nullptr, false);
  if (j.is_discarded()) {
    std::cerr << "balance: config file " << config_path << " is not valid JSON\n";
    return kUsageError;
  }
  bridge::BalancerConfig config;
  try {
    config = bridge::balancer_config_from_json(j);
  } catch (const std::invalid_argument& e) {
    std::cerr << "balance: " << e.what() << "\n";
    return kUsageError;
  }
  sigset_t set;
  block_shutdown_signals(&set);
  bridge::BalancerServer server(config);
  server.start();
  std::cerr << "balancing " << config.backends.size() << " backend(s) on port " << server.port()
            << "\n";
  wait_for_shutdown(&set);
  server.stop();
  return kOk;
}

int cmd_bench(const bridge::BenchOptions& options) {
  bridge::BenchReport report = bridge::run_bench(options);
  std::cout << bridge::bench_report_table(report);
  std::cout << bridge::bench_report_json(report).dump() << "\n";
  bool clean = report.ok == report.total_requests && report.overlaps == 0 &&
               report.echo_mismatches == 0;
  return clean ? kOk : kRuntimeError;
}

struct McFlags {
  std::string url, name, dist, qoi_csv, config_text, csv_path;
  std::size_t n = 1000;
  int concurrency = 8;
  std::uint64_t seed = 0;
};

int run_sample_mc(const McFlags& flags) {
  bridge::McJob job;
  job.dist = dist_arg(flags.dist);
  job.n = flags.n;
  job.concurrency = flags.concurrency;
  job.seed = flags.seed;
  job.config = config_arg(flags.config_text);
  for (const auto& s : split_names(flags.qoi_csv)) {
    try {
      job.qoi.push_back(static_cast<std::size_t>(std::stoull(s)));
    } catch (...) {
      throw CLI::ValidationError("--qoi", "expected comma-separated indices, got " + s);
    }
  }
  job.keep_samples = !flags.csv_path.empty();

  auto model = bridge::RemoteModel::connect(flags.url, flags.name);
  bridge::McResult r = bridge::mc_estimate(*model, job);

  Json report{{"mean", to_json_array(r.mean)},
              {"stderr", to_json_array(r.standard_error)},
              {"n", r.n},
              {"seed", flags.seed},
              {"wall_s", r.wall_s}};
  std::cout << report.dump() << "\n";

  if (!flags.csv_path.empty()) {
    std::vector<std::string> header;
    for (Eigen::Index j = 0; j < r.inputs[0].size(); ++j)
      header.push_back("in" + std::to_string(j));
    for (Eigen::Index j = 0; j < r.outputs[0].size(); ++j)
      header.push_back("out" + std::to_string(j));
    std::vector<std::vector<double>> rows;
    rows.reserve(r.n);
    for (std::size_t i = 0; i < r.n; ++i) {
      std::vector<double> row;
      for (Eigen::Index j = 0; j < r.inputs[i].size(); ++j) row.push_back(r.inputs[i][j]);
      for (Eigen::Index j = 0; j < r.outputs[i].size(); ++j) row.push_back(r.outputs[i][j]);
      rows.push_back(std::move(row));
    }
    write_csv(flags.csv_path, header, rows);
  }
  return kOk;
}

struct MhFlags {
  std::string url, name, x0_text, sigma_text, config_text, csv_path;
  std::size_t steps = 1000;
  std::uint64_t seed = 0;
};

int run_sample_mh(const MhFlags& flags) {
  auto model = bridge::RemoteModel::connect(flags.url, flags.name);
  auto sizes = model->input_sizes(config_arg(flags.config_text));
  if (sizes.size() != 1)
    throw BridgeError(bridge::ErrorType::InvalidInput,
                      "mh needs a single-block input model");
  const auto dim = static_cast<Eigen::Index>(sizes[0]);

  bridge::MhOptions options;
  options.steps = flags.steps;
  options.seed = flags.seed;
  options.config = config_arg(flags.config_text);
  options.x0 = flags.x0_text.empty() ? Vector(Vector::Zero(dim))
                                     : vector_arg(flags.x0_text, "--x0");
  if (flags.sigma_text.empty()) {
    options.sigma = Vector::Ones(dim);
  } else {
    Json j = parse_json_arg(flags.sigma_text, "--sigma");
    if (j.is_number())
      options.sigma = Vector::Constant(dim, j.get<double>());
    else
      options.sigma = vector_arg(flags.sigma_text, "--sigma");
  }
  options.keep_samples = !flags.csv_path.empty();

  bridge::MhResult r = bridge::mh_chain(*model, options);
  Json report{{"steps", r.proposed},
              {"accepted", r.accepted},
              {"acceptance_rate", r.acceptance_rate},
              {"mean", to_json_array(r.mean)},
              {"variance", to_json_array(r.variance)},
              {"seed", flags.seed},
              {"wall_s", r.wall_s}};
  std::cout << report.dump() << "\n";

  if (!flags.csv_path.empty()) {
    std::vector<std::string> header;
    for (Eigen::Index j = 0; j < dim; ++j) header.push_back("x" + std::to_string(j));
    header.push_back("log_density");
    std::vector<std::vector<double>> rows;
    rows.reserve(r.samples.size());
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
      std::vector<double> row;
      for (Eigen::Index j = 0; j < dim; ++j) row.push_back(r.samples[i][j]);
      row.push_back(r.log_density[i]);
      rows.push_back(std::move(row));
    }
    write_csv(flags.csv_path, header, rows);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HTTP bridge between UQ clients and numerical models"};
  app.require_subcommand(1);

  std::string default_url = bridge::url_from_env();
  int default_port = 4242;
  try {
    default_port = bridge::port_from_env(4242);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kUsageError;
  }

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "serve models from the built-in catalog");
  std::string serve_models;
  int serve_port = default_port;
  std::string serve_host = "0.0.0.0";
  int serve_workers = 8;
  bool serve_verbose = false;
  serve_cmd->add_option("--models", serve_models, "comma-separated model names")->required();
  serve_cmd->add_option("--port", serve_port, "listen port (default BRIDGE_PORT or 4242)");
  serve_cmd->add_option("--host", serve_host, "bind address");
  serve_cmd->add_option("--workers", serve_workers, "max concurrent requests")
      ->check(CLI::PositiveNumber);
  serve_cmd->add_flag("--verbose", serve_verbose, "log startup to stderr");

  // info
  auto* info_cmd = app.add_subcommand("info", "print a server's models and capabilities");
  std::string info_url = default_url, info_name;
  info_cmd->add_option("--url", info_url, "server url (default BRIDGE_URL or localhost:4242)");
  info_cmd->add_option("--name", info_name, "single model to describe");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a remote model once");
  std::string eval_url = default_url, eval_name, eval_input, eval_config;
  eval_cmd->add_option("--url", eval_url, "server url");
  eval_cmd->add_option("--name", eval_name, "model name")->required();
  eval_cmd->add_option("--input", eval_input, "input as [[...],...]")->required();
  eval_cmd->add_option("--config", eval_config, "JSON config object");

  // balance
  auto* balance_cmd = app.add_subcommand("balance", "run the load balancer");
  std::string balance_config;
  balance_cmd
      ->add_option("--config", balance_config,
                   "JSON file {\"port\":int,\"backends\":[...],\"health_interval_s\":num}")
      ->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "synthetic scaling benchmark");
  bridge::BenchOptions bench_options;
  bench_cmd->add_option("--backends", bench_options.backends, "sleep-model servers to spawn")
      ->check(CLI::PositiveNumber);
  bench_cmd
      ->add_option("--requests-per-backend", bench_options.requests_per_backend,
                   "requests per backend")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--model-duration-ms", bench_options.model_ms, "per-request sleep")
      ->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--concurrency", bench_options.concurrency,
                        "client threads (default requests * backends)");
  bench_cmd->add_option("--health-interval-s", bench_options.health_interval_s,
                        "balancer probe interval");
  bench_cmd->add_option("--kill-one-after-ms", bench_options.kill_one_after_ms,
                        "stop one backend this long into the run");

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "run a reference sampler");
  sample_cmd->require_subcommand(1);

  auto* mc_cmd = sample_cmd->add_subcommand("mc", "Monte Carlo propagation");
  McFlags mc;
  mc.url = default_url;
  mc_cmd->add_option("--url", mc.url, "server url");
  mc_cmd->add_option("--name", mc.name, "model name")->required();
  mc_cmd->add_option("--dist", mc.dist, "box:[[lo,hi],...] or fixed:[[...],...]")->required();
  mc_cmd->add_option("--n", mc.n, "sample count");
  mc_cmd->add_option("--concurrency", mc.concurrency, "requests in flight")
      ->check(CLI::PositiveNumber);
  mc_cmd->add_option("--seed", mc.seed, "rng seed");
  mc_cmd->add_option("--qoi", mc.qoi_csv, "comma-separated output indices");
  mc_cmd->add_option("--config", mc.config_text, "JSON config object");
  mc_cmd->add_option("--csv", mc.csv_path, "dump samples to this file");

  auto* mh_cmd = sample_cmd->add_subcommand("mh", "Metropolis-Hastings chain");
  MhFlags mh;
  mh.url = default_url;
  mh_cmd->add_option("--url", mh.url, "server url");
  mh_cmd->add_option("--name", mh.name, "log-density model name")->required();
  mh_cmd->add_option("--steps", mh.steps, "proposal count");
  mh_cmd->add_option("--x0", mh.x0_text, "start point [x,...] (default zeros)");
  mh_cmd->add_option("--sigma", mh.sigma_text, "proposal scale, number or [s,...] (default 1)");
  mh_cmd->add_option("--seed", mh.seed, "rng seed");
  mh_cmd->add_option("--config", mh.config_text, "JSON config object");
  mh_cmd->add_option("--csv", mh.csv_path, "dump the chain to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return kUsageError;
  }

  try {
    if (serve_cmd->parsed())
      return run_serve(serve_models, serve_port, serve_host, serve_workers, serve_verbose);
    if (info_cmd->parsed()) return run_info(info_url, info_name);
    if (eval_cmd->parsed()) return run_eval(eval_url, eval_name, eval_input, eval_config);
    if (balance_cmd->parsed()) return run_balance(balance_config);
    if (bench_cmd->parsed()) return cmd_bench(bench_options);
    if (sample_cmd->parsed()) {
      if (mc_cmd->parsed()) return run_sample_mc(mc);
      if (mh_cmd->parsed()) return run_sample_mh(mh);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kUsageError;
  } catch (const BridgeError& e) {
    std::cerr << bridge::to_string(e.type()) << ": " << e.what() << "\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
