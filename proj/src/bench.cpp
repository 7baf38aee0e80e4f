#include "bridge/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <memory>
#include <thread>

#include "bridge/balancer.hpp"
#include "bridge/detail/http.hpp"
#include "bridge/model.hpp"
#include "bridge/server.hpp"

namespace bridge {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

}  // namespace

BenchReport run_bench(const BenchOptions& options) {
  if (options.backends < 1 || options.requests_per_backend < 1)
    throw std::invalid_argument("bench needs backends >= 1 and requests_per_backend >= 1");
  if (options.model_ms < 0) throw std::invalid_argument("bench needs model_ms >= 0");

  const std::size_t total =
      static_cast<std::size_t>(options.backends) *
      static_cast<std::size_t>(options.requests_per_backend);
  const int concurrency =
      options.concurrency > 0 ? options.concurrency : static_cast<int>(total);

  std::vector<std::unique_ptr<ServerHandle>> servers;
  std::vector<std::shared_ptr<SleepModel::Stats>> stats;
  for (int k = 0; k < options.backends; ++k) {
    auto st = std::make_shared<SleepModel::Stats>();
    auto reg = std::make_shared<Registry>();
    reg->add(std::make_shared<SleepModel>(st));
    ServerConfig sc;
    sc.port = 0;
    sc.host = "127.0.0.1";
    sc.max_concurrent_requests = 64;  // overlaps stay observable if dispatch misbehaves
    servers.push_back(serve(reg, sc));
    stats.push_back(std::move(st));
  }

  BalancerConfig bc;
  bc.port = 0;
  bc.host = "127.0.0.1";
  bc.health_interval_s = options.health_interval_s;
  bc.frontend_threads = std::max(256, concurrency + 16);
  for (const auto& s : servers) bc.backends.push_back(s->url());
  BalancerServer bal(bc);
  bal.start();

  Request proto;
  proto.op = Op::Evaluate;
  proto.name = "sleep";
  proto.config = Json{{"ms", options.model_ms}};

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> ok{0}, failed{0}, mismatch{0};
  const std::string bal_url = bal.url();

  auto worker = [&] {
    httplib::Client cli(bal_url);
    cli.set_connection_timeout(10, 0);
    cli.set_read_timeout(3600, 0);
    cli.set_write_timeout(3600, 0);
    cli.set_keep_alive(true);
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      Request r = proto;
      r.input = single(Vector::Constant(1, static_cast<double>(i)));
      auto res = cli.Post(endpoint(Op::Evaluate), encode_request(r), "application/json");
      if (!res || res->status != 200) {
        failed.fetch_add(1);
        continue;
      }
      try {
        ParameterList out = decode_output_list(res->body);
        if (out.size() == 1 && out[0].size() == 1 && out[0][0] == static_cast<double>(i))
          ok.fetch_add(1);
        else
          mismatch.fetch_add(1);
      } catch (...) {
        mismatch.fetch_add(1);
      }
    }
  };

  std::thread killer;
  std::atomic<double> kill_detected_s{-1.0};
  Clock::time_point t0 = Clock::now();
  if (options.kill_one_after_ms >= 0) {
    killer = std::thread([&] {
      std::this_thread::sleep_for(std::chrono::duration<double>(options.kill_one_after_ms / 1e3));
      const std::string victim = servers.back()->url();
      Clock::time_point t_kill = Clock::now();
      servers.back()->stop();
      const double deadline = 10.0 * options.health_interval_s + 5.0;
      for (;;) {
        Json snap = bal.core().stats();
        for (const auto& b : snap.at("backends")) {
          if (b.at("url") == victim && b.at("state") == "unhealthy") {
            kill_detected_s.store(seconds_between(t_kill, Clock::now()));
            return;
          }
        }
        if (seconds_between(t_kill, Clock::now()) > deadline) return;
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
      }
    });
  }

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(concurrency));
  for (int c = 0; c < concurrency; ++c) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  const double wall = seconds_between(t0, Clock::now());
  if (killer.joinable()) killer.join();

  BenchReport report;
  report.wall_s = wall;
  report.total_requests = total;
  report.ok = ok.load();
  report.failed = failed.load();
  report.echo_mismatches = mismatch.load();
  report.kill_detected_after_s = kill_detected_s.load();

  Json snap = bal.core().stats();
  report.queue_high_water = snap.at("queue_high_water").get<std::size_t>();
  for (int k = 0; k < options.backends; ++k) {
    BenchBackend b;
    b.url = servers[static_cast<std::size_t>(k)]->url();
    b.calls = stats[static_cast<std::size_t>(k)]->calls.load();
    b.overlaps = stats[static_cast<std::size_t>(k)]->overlaps.load();
    b.killed = options.kill_one_after_ms >= 0 && k == options.backends - 1;
    for (const auto& e : snap.at("backends")) {
      if (e.at("url") == b.url) {
        b.completed = e.at("completed").get<std::uint64_t>();
        b.state = e.at("state").get<std::string>();
      }
    }
    report.overlaps += b.overlaps;
    if (b.state == "unhealthy") ++report.unhealthy_at_end;
    report.backends.push_back(std::move(b));
  }

  bal.stop();
  for (auto& s : servers) s->stop();
  return report;
}

Json bench_report_json(const BenchReport& r) {
  Json backends = Json::array();
  for (const auto& b : r.backends)
    backends.push_back(Json{{"url", b.url},
                            {"completed", b.completed},
                            {"calls", b.calls},
                            {"overlaps", b.overlaps},
                            {"state", b.state},
                            {"killed", b.killed}});
  Json j{{"wall_s", r.wall_s},
         {"total_requests", r.total_requests},
         {"ok", r.ok},
         {"failed", r.failed},
         {"echo_mismatches", r.echo_mismatches},
         {"overlaps", r.overlaps},
         {"unhealthy_at_end", r.unhealthy_at_end},
         {"queue_high_water", r.queue_high_water},
         {"backends", backends}};
  if (r.kill_detected_after_s >= 0) j["kill_detected_after_s"] = r.kill_detected_after_s;
  return j;
}

std::string bench_report_table(const BenchReport& r) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "wall time        %.3f s\n", r.wall_s);
  out += line;
  std::snprintf(line, sizeof(line), "requests         %zu total, %zu ok, %zu failed\n",
                r.total_requests, r.ok, r.failed);
  out += line;
  std::snprintf(line, sizeof(line), "overlap audit    %s (%ld overlapping invocations)\n",
                r.overlaps == 0 ? "clean" : "VIOLATED", r.overlaps);
  out += line;
  std::snprintf(line, sizeof(line), "queue high water %zu\n", r.queue_high_water);
  out += line;
  if (r.kill_detected_after_s >= 0) {
    std::snprintf(line, sizeof(line), "kill detected    %.3f s after stop\n",
                  r.kill_detected_after_s);
    out += line;
  }
  for (const auto& b : r.backends) {
    std::snprintf(line, sizeof(line), "  %-28s %8llu done  %-9s%s\n", b.url.c_str(),
                  static_cast<unsigned long long>(b.completed), b.state.c_str(),
                  b.killed ? "  [killed]" : "");
    out += line;
  }
  return out;
}

}  // namespace bridge
