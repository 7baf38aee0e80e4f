#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "bridge/densities.hpp"
#include "bridge/model.hpp"
#include "bridge/rng.hpp"

namespace bridge {

// Independent uniform draws per coordinate.
struct BoxDistribution {
  Vector lo;
  Vector hi;
};

// Explicit input points, used verbatim in order.
struct FixedList {
  std::vector<Vector> points;
};

using McDistribution = std::variant<BoxDistribution, FixedList>;

struct McJob {
  McDistribution dist;
  std::size_t n = 0;  // sample count; ignored for FixedList
  int concurrency = 1;
  std::uint64_t seed = 0;
  Config config = Config::object();
  std::vector<std::size_t> qoi;  // indices into the flattened output; empty = all
  bool keep_samples = false;
};

struct McResult {
  Vector mean;
  Vector standard_error;  // sample sd / sqrt(n); zero when n < 2
  std::size_t n = 0;
  double wall_s = 0;
  std::vector<Vector> inputs;   // only when keep_samples
  std::vector<Vector> outputs;  // flattened, qoi applied; only when keep_samples
};

// Input for box sample i, coordinate j, is drawn from counter i*dim + j of
// CounterRng{seed, 0}. Up to job.concurrency evaluations run at once, but the
// reduction runs in sample-index order, so the estimate is bit-identical at
// any concurrency. The first failing evaluation aborts the job.
McResult mc_estimate(const Model& model, const McJob& job);

struct MhOptions {
  Vector x0;
  std::size_t steps = 0;  // number of proposals
  Vector sigma;           // per-coordinate proposal scale
  std::uint64_t seed = 0;
  Config config = Config::object();
  bool keep_samples = true;
};

struct MhResult {
  std::vector<Vector> samples;       // steps + 1 states incl. x0, when kept
  std::vector<double> log_density;   // matches samples
  std::size_t accepted = 0;
  std::size_t proposed = 0;
  double acceptance_rate = 0;
  Vector mean;      // over all steps + 1 chain states
  Vector variance;  // per coordinate, unbiased
  double wall_s = 0;
};

// Hook for tests: maps (current state, proposal index) to a proposal. Must be
// symmetric for MH correctness.
using ProposalFn = std::function<Vector(const Vector&, std::size_t)>;

// Random-walk Metropolis on a scalar log-density model. Proposal t draws
// coordinate j from CounterRng{seed, 0}.normal(t*(dim+1) + j) scaled by
// sigma[j]; the acceptance uniform comes from counter 2*(t*(dim+1) + dim).
// Log-densities at or below kOutsideSupport reject the proposal; an x0
// outside support is an InvalidInput error.
MhResult mh_chain(const Model& target, const MhOptions& options);
MhResult mh_chain(const Model& target, const MhOptions& options, const ProposalFn& propose);

}  // namespace bridge
