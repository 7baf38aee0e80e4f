#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <vector>

#include "bridge/beam.hpp"
#include "bridge/densities.hpp"
#include "bridge/model.hpp"
#include "bridge/rng.hpp"
#include "bridge/samplers.hpp"

using namespace bridge;

namespace {

// Returns a fixed vector no matter the input.
class ConstantModel : public Model {
 public:
  explicit ConstantModel(Vector value) : value_(std::move(value)) {}
  std::string name() const override { return "constant"; }
  std::vector<std::size_t> input_sizes(const Config&) const override { return {1}; }
  std::vector<std::size_t> output_sizes(const Config&) const override {
    return {static_cast<std::size_t>(value_.size())};
  }
  ParameterList evaluate(const ParameterList&, const Config&) const override {
    return single(value_);
  }

 private:
  Vector value_;
};

// Fails on inputs past a threshold; for abort-path tests.
class TrippableModel : public Model {
 public:
  std::string name() const override { return "trippable"; }
  std::vector<std::size_t> input_sizes(const Config&) const override { return {1}; }
  std::vector<std::size_t> output_sizes(const Config&) const override { return {1}; }
  ParameterList evaluate(const ParameterList& input, const Config&) const override {
    if (input[0][0] > 9000.0)
      throw BridgeError(ErrorType::InternalError, "tripped");
    return single(Vector::Constant(1, 2.0 * input[0][0]));
  }
};

// Log-density supported on the integers {-1, 0, 1} with pi = (0.2, 0.3, 0.5).
class ThreeStateModel : public Model {
 public:
  std::string name() const override { return "three-state"; }
  std::vector<std::size_t> input_sizes(const Config&) const override { return {1}; }
  std::vector<std::size_t> output_sizes(const Config&) const override { return {1}; }
  ParameterList evaluate(const ParameterList& input, const Config&) const override {
    double x = input[0][0];
    double v = kLogFloor;
    if (x == -1.0) v = std::log(0.2);
    if (x == 0.0) v = std::log(0.3);
    if (x == 1.0) v = std::log(0.5);
    return single(Vector::Constant(1, v));
  }
};

// Improper flat target; every proposal is accepted.
class FlatModel : public Model {
 public:
  std::string name() const override { return "flat"; }
  std::vector<std::size_t> input_sizes(const Config&) const override { return {1}; }
  std::vector<std::size_t> output_sizes(const Config&) const override { return {1}; }
  ParameterList evaluate(const ParameterList&, const Config&) const override {
    return single(Vector::Zero(1));
  }
};

// Strictly improving along +1 steps: log pi(x) = x.
class RampModel : public Model {
 public:
  std::string name() const override { return "ramp"; }
  std::vector<std::size_t> input_sizes(const Config&) const override { return {1}; }
  std::vector<std::size_t> output_sizes(const Config&) const override { return {1}; }
  ParameterList evaluate(const ParameterList& input, const Config&) const override {
    return single(Vector::Constant(1, input[0][0]));
  }
};

bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

ErrorType error_type_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const BridgeError& e) {
    return e.type();
  }
  FAIL("expected a BridgeError");
  return ErrorType::InternalError;
}

}  // namespace

TEST_CASE("mc: constant integrand has exact mean and zero spread") {
  // Dyadic entries keep the running sum of eight copies exact.
  Vector c(3);
  c << 1.5, -2.25, 0.125;
  ConstantModel model(c);
  McJob job;
  job.dist = BoxDistribution{Vector::Zero(1), Vector::Ones(1)};
  job.n = 8;
  job.seed = 1;
  McResult r = mc_estimate(model, job);
  CHECK(r.n == 8);
  CHECK(bitwise_equal(r.mean, c));
  CHECK((r.standard_error.array() == 0.0).all());
}

TEST_CASE("mc: uniform box estimate lands within its own error bars") {
  ScaleModel model;  // doubles the input
  McJob job;
  job.dist = BoxDistribution{Vector::Zero(1), Vector::Ones(1)};
  job.n = 100000;
  job.seed = 7;
  job.concurrency = 8;
  McResult r = mc_estimate(model, job);
  // E[2U] = 1, sd[2U] = 2/sqrt(12).
  double se_expected = (2.0 / std::sqrt(12.0)) / std::sqrt(1e5);
  CHECK(std::abs(r.mean[0] - 1.0) <= 4.0 * r.standard_error[0]);
  CHECK(r.standard_error[0] == doctest::Approx(se_expected).epsilon(0.05));
  CHECK(r.wall_s > 0.0);
}

TEST_CASE("mc: estimate is bit-identical at any concurrency") {
  GaussianMixtureModel model;
  McJob job;
  job.dist = BoxDistribution{Vector::Constant(2, -3.0), Vector::Constant(2, 3.0)};
  job.n = 2000;
  job.seed = 11;

  job.concurrency = 1;
  McResult serial = mc_estimate(model, job);
  job.concurrency = 32;
  McResult wide = mc_estimate(model, job);

  CHECK(serial.n == wide.n);
  CHECK(bitwise_equal(serial.mean, wide.mean));
  CHECK(bitwise_equal(serial.standard_error, wide.standard_error));
}

TEST_CASE("mc: box inputs follow the documented counter layout") {
  ScaleModel model;
  McJob job;
  job.dist = BoxDistribution{Vector::Constant(1, -2.0), Vector::Constant(1, 5.0)};
  job.n = 6;
  job.seed = 321;
  job.keep_samples = true;
  McResult r = mc_estimate(model, job);
  REQUIRE(r.inputs.size() == 6);
  CounterRng rng{321, 0};
  for (int i = 0; i < 6; ++i) {
    CHECK(r.inputs[i][0] == rng.uniform(static_cast<std::uint64_t>(i), -2.0, 5.0));
    CHECK(r.outputs[i][0] == 2.0 * r.inputs[i][0]);
  }
}

TEST_CASE("mc: fixed input lists are used verbatim, in order") {
  ScaleModel model;
  McJob job;
  FixedList fixed;
  for (double v : {1.0, 2.0, 3.0, 4.0}) fixed.points.push_back(Vector::Constant(1, v));
  job.dist = fixed;
  job.keep_samples = true;
  McResult r = mc_estimate(model, job);
  CHECK(r.n == 4);  // job.n is ignored for fixed lists
  CHECK(r.mean[0] == 5.0);
  for (int i = 0; i < 4; ++i) {
    CHECK(r.inputs[i][0] == fixed.points[i][0]);
    CHECK(r.outputs[i][0] == 2.0 * fixed.points[i][0]);
  }
}

TEST_CASE("mc: qoi selects flattened output coordinates") {
  BeamForwardModel model;
  FixedList fixed;
  fixed.points.push_back(Vector::Constant(3, 1.0));
  fixed.points.push_back((Vector(3) << 1.02, 0.97, 1.01).finished());
  fixed.points.push_back((Vector(3) << 0.95, 1.05, 1.0).finished());

  McJob full;
  full.dist = fixed;
  McResult all31 = mc_estimate(model, full);
  REQUIRE(all31.mean.size() == 31);

  McJob sliced = full;
  sliced.qoi = {10, 25};
  McResult two = mc_estimate(model, sliced);
  REQUIRE(two.mean.size() == 2);
  CHECK(two.mean[0] == all31.mean[10]);
  CHECK(two.mean[1] == all31.mean[25]);
  CHECK(two.standard_error[0] == all31.standard_error[10]);
  CHECK(two.standard_error[1] == all31.standard_error[25]);

  McJob bad = full;
  bad.qoi = {31};
  CHECK(error_type_of([&] { mc_estimate(model, bad); }) == ErrorType::InvalidInput);
}

TEST_CASE("mc: the first model failure aborts the job") {
  TrippableModel model;
  McJob job;
  FixedList fixed;
  for (double v : {1.0, 9001.0, 2.0}) fixed.points.push_back(Vector::Constant(1, v));
  job.dist = fixed;
  CHECK(error_type_of([&] { mc_estimate(model, job); }) == ErrorType::InternalError);
}

TEST_CASE("mc: job validation") {
  ScaleModel model;
  auto invalid = [&](McJob job) {
    CHECK(error_type_of([&] { mc_estimate(model, job); }) == ErrorType::InvalidInput);
  };

  McJob job;
  job.dist = BoxDistribution{Vector::Zero(1), Vector::Ones(1)};
  job.n = 10;

  McJob swapped = job;
  swapped.dist = BoxDistribution{Vector::Ones(1), Vector::Zero(1)};
  invalid(swapped);

  McJob mismatched = job;
  mismatched.dist = BoxDistribution{Vector::Zero(2), Vector::Ones(2)};
  invalid(mismatched);

  McJob empty_box = job;
  empty_box.n = 0;
  invalid(empty_box);

  McJob no_workers = job;
  no_workers.concurrency = 0;
  invalid(no_workers);

  McJob infinite = job;
  infinite.dist = BoxDistribution{Vector::Zero(1),
                                  Vector::Constant(1, std::numeric_limits<double>::infinity())};
  invalid(infinite);

  McJob empty_list = job;
  empty_list.dist = FixedList{};
  invalid(empty_list);

  McJob wrong_point = job;
  wrong_point.dist = FixedList{{Vector::Zero(2)}};
  invalid(wrong_point);
}

TEST_CASE("mh: proposals and acceptance draws follow the documented counters") {
  FlatModel flat;  // log pi = 0 everywhere, so every proposal is accepted
  MhOptions opt;
  opt.x0 = Vector::Zero(1);
  opt.steps = 20;
  opt.sigma = Vector::Constant(1, 0.7);
  opt.seed = 99;
  MhResult r = mh_chain(flat, opt);
  CHECK(r.accepted == 20);
  CHECK(r.acceptance_rate == 1.0);
  REQUIRE(r.samples.size() == 21);

  // dim = 1: proposal t uses normal(t*2), the acceptance draw counter 2*(t*2+1).
  CounterRng rng{99, 0};
  for (std::size_t t = 0; t < 20; ++t)
    CHECK(r.samples[t + 1][0] == r.samples[t][0] + 0.7 * rng.normal(2 * t));
}

TEST_CASE("mh: an improving proposal is always accepted") {
  RampModel ramp;
  MhOptions opt;
  opt.x0 = Vector::Zero(1);
  opt.steps = 50;
  opt.seed = 3;
  auto up = [](const Vector& x, std::size_t) { return Vector(x.array() + 1.0); };
  MhResult r = mh_chain(ramp, opt, up);
  CHECK(r.accepted == 50);
  CHECK(r.samples.back()[0] == 50.0);
  for (std::size_t i = 0; i + 1 < r.samples.size(); ++i)
    CHECK(r.samples[i + 1][0] == r.samples[i][0] + 1.0);
}

TEST_CASE("mh: vanishing step size accepts almost everything") {
  GaussianMixtureModel target;
  MhOptions opt;
  opt.x0 = Vector::Zero(2);
  opt.steps = 2000;
  opt.sigma = Vector::Constant(2, 1e-12);
  opt.seed = 5;
  opt.keep_samples = false;
  MhResult r = mh_chain(target, opt);
  CHECK(r.acceptance_rate >= 0.999);
}

TEST_CASE("mh: stored log-densities match fresh evaluations") {
  GaussianMixtureModel target;
  MhOptions opt;
  opt.x0 = (Vector(2) << 0.5, -0.25).finished();
  opt.steps = 500;
  opt.sigma = Vector::Constant(2, 1.0);
  opt.seed = 17;
  MhResult r = mh_chain(target, opt);
  REQUIRE(r.samples.size() == 501);
  REQUIRE(r.log_density.size() == 501);
  for (std::size_t i = 0; i < r.samples.size(); i += 37) {
    double fresh = target.evaluate(single(r.samples[i]), {})[0][0];
    CHECK(r.log_density[i] == fresh);
  }
  CHECK(r.proposed == 500);
  CHECK(r.accepted <= 500);
  CHECK(r.acceptance_rate == doctest::Approx(double(r.accepted) / 500.0));
}

TEST_CASE("mh: recovers the mixture mean") {
  GaussianMixtureModel target;
  MhOptions opt;
  opt.x0 = Vector::Zero(2);
  opt.steps = 50000;
  opt.sigma = Vector::Constant(2, 1.5);
  opt.seed = 4242;
  opt.keep_samples = false;
  MhResult r = mh_chain(target, opt);
  // True mean of the three equal-weight components.
  CHECK(std::abs(r.mean[0] - (-2.0 / 3.0)) < 0.15);
  CHECK(std::abs(r.mean[1] - (2.0 / 3.0)) < 0.15);
  CHECK(r.variance[0] > 1.0);  // well-separated modes spread the chain
  CHECK(r.acceptance_rate > 0.1);
  CHECK(r.acceptance_rate < 0.9);
}

TEST_CASE("mh: option validation") {
  GaussianMixtureModel target;
  MhOptions good;
  good.x0 = Vector::Zero(2);
  good.steps = 1;
  good.sigma = Vector::Constant(2, 1.0);

  auto invalid = [&](const MhOptions& opt) {
    CHECK(error_type_of([&] { mh_chain(target, opt); }) == ErrorType::InvalidInput);
  };

  MhOptions empty = good;
  empty.x0 = Vector();
  invalid(empty);

  MhOptions nan_start = good;
  nan_start.x0[0] = std::numeric_limits<double>::quiet_NaN();
  invalid(nan_start);

  MhOptions short_sigma = good;
  short_sigma.sigma = Vector::Constant(1, 1.0);
  invalid(short_sigma);

  MhOptions negative_sigma = good;
  negative_sigma.sigma[0] = -1.0;
  invalid(negative_sigma);

  // x0 outside the target's support is rejected up front.
  ThreeStateModel grid;
  MhOptions off_grid;
  off_grid.x0 = Vector::Constant(1, 7.0);
  off_grid.steps = 10;
  off_grid.sigma = Vector::Constant(1, 1.0);
  CHECK(error_type_of([&] { mh_chain(grid, off_grid); }) == ErrorType::InvalidInput);
}

TEST_CASE("mh: empirical kernel on a three-state target is reversible") {
  // pi = (0.2, 0.3, 0.5) on {-1, 0, 1}; +-1 proposals, off-grid states are
  // outside support. Analytic kernel:
  //   P(-1 -> 0) = 1/2          P(0 -> -1) = 1/3   P(0 -> 1) = 1/2
  //   P(1 -> 0)  = 3/10
  ThreeStateModel grid;
  MhOptions opt;
  opt.x0 = Vector::Zero(1);
  opt.steps = 30000;
  opt.seed = 2026;
  CounterRng coin{99, 7};
  auto hop = [&coin](const Vector& x, std::size_t t) {
    double step = coin.uniform(t) < 0.5 ? -1.0 : 1.0;
    return Vector(x.array() + step);
  };
  MhResult r = mh_chain(grid, opt, hop);

  std::map<std::pair<int, int>, long> count;
  std::array<long, 3> visits{0, 0, 0};
  auto idx = [](double x) { return static_cast<int>(std::lround(x)) + 1; };
  for (std::size_t i = 0; i + 1 < r.samples.size(); ++i) {
    int from = idx(r.samples[i][0]);
    int to = idx(r.samples[i + 1][0]);
    ++count[{from, to}];
    ++visits[static_cast<std::size_t>(from)];
  }

  // The chain only moves between neighbors.
  CHECK(count[{0, 2}] == 0);
  CHECK(count[{2, 0}] == 0);

  // A nearest-neighbor walk crosses each edge alternately, so directed
  // counts over one edge differ by at most one.
  CHECK(std::abs(count[{0, 1}] - count[{1, 0}]) <= 1);
  CHECK(std::abs(count[{1, 2}] - count[{2, 1}]) <= 1);

  auto conditional = [&](int from, int to) {
    return static_cast<double>(count[{from, to}]) / static_cast<double>(visits[static_cast<std::size_t>(from)]);
  };
  auto within = [&](int from, int to, double p) {
    double n = static_cast<double>(visits[static_cast<std::size_t>(from)]);
    double se = std::sqrt(p * (1.0 - p) / n);
    CHECK(std::abs(conditional(from, to) - p) < 4.0 * se + 1.0 / n);
  };
  within(0, 1, 0.5);
  within(1, 0, 1.0 / 3.0);
  within(1, 2, 0.5);
  within(2, 1, 0.3);

  // Occupancy approaches pi.
  double total = static_cast<double>(r.samples.size() - 1);
  CHECK(static_cast<double>(visits[0]) / total == doctest::Approx(0.2).epsilon(0.15));
  CHECK(static_cast<double>(visits[1]) / total == doctest::Approx(0.3).epsilon(0.15));
  CHECK(static_cast<double>(visits[2]) / total == doctest::Approx(0.5).epsilon(0.15));
}
