#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bridge/types.hpp"

namespace bridge {

// Synthetic load test: K in-process sleep-model servers behind a balancer,
// R*K echo requests fired concurrently, with optional mid-run fault
// injection. Used by the `bench` subcommand and by the scaling and fault
// tests.
struct BenchOptions {
  int backends = 1;               // K
  int requests_per_backend = 20;  // R
  double model_ms = 100;          // per-request sleep
  double health_interval_s = 1.0;
  int concurrency = 0;            // simultaneous client requests; 0 = R*K
  double kill_one_after_ms = -1;  // >= 0: stop the last backend this long into the run
};

struct BenchBackend {
  std::string url;
  std::uint64_t completed = 0;  // responses this backend produced
  long calls = 0;               // invocations observed inside the model
  long overlaps = 0;            // concurrent invocations observed inside the model
  std::string state;            // balancer's view at the end of the run
  bool killed = false;
};

struct BenchReport {
  double wall_s = 0;  // request phase only, setup excluded
  std::size_t total_requests = 0;
  std::size_t ok = 0;
  std::size_t failed = 0;
  std::size_t echo_mismatches = 0;
  long overlaps = 0;  // summed over backends; single-in-flight audit
  std::size_t unhealthy_at_end = 0;
  std::size_t queue_high_water = 0;
  double kill_detected_after_s = -1;  // kill -> slot marked unhealthy; -1 without a kill
  std::vector<BenchBackend> backends;
};

BenchReport run_bench(const BenchOptions& options);

Json bench_report_json(const BenchReport& report);

// Human-readable table for terminals.
std::string bench_report_table(const BenchReport& report);

}  // namespace bridge
