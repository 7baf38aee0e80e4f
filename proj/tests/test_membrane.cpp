#include <doctest.h>

#include <cmath>

#include "bridge/membrane.hpp"
#include "bridge/densities.hpp"
#include "bridge/rng.hpp"
#include "support/harness.hpp"

using namespace bridge;

namespace {

// Rotate the 8x8 coefficient field a quarter turn counterclockwise:
// cell (I, J) lands on (7-J, I).
Eigen::VectorXd rot90_coeff(const Eigen::VectorXd& a, int nc) {
  Eigen::VectorXd out(nc * nc);
  for (int J = 0; J < nc; ++J)
    for (int I = 0; I < nc; ++I) out[I * nc + (nc - 1 - J)] = a[J * nc + I];
  return out;
}

// The matching readout permutation: sample (k, l) of the rotated solve holds
// the value of sample (l, 12-k)... spelled out below as a direct map.
int rot90_out_index(int k, int l, int m) {
  // point (x, y) -> (1-y, x): new k' = m-1-l, new l' = k
  return k * m + (m - 1 - l);
}

Eigen::VectorXd random_field(int nc, std::uint64_t seed) {
  CounterRng rng{seed, 0};
  Eigen::VectorXd a(nc * nc);
  for (int i = 0; i < nc * nc; ++i) a[i] = std::exp(rng.uniform(i, -0.7, 0.7));
  return a;
}

}  // namespace

TEST_CASE("solution is positive and peaks away from the walls") {
  Eigen::VectorXd u = membrane_solve(Eigen::VectorXd::Ones(64));
  REQUIRE(u.size() == 13 * 13);
  for (int i = 0; i < u.size(); ++i) CHECK(u[i] > 0.0);
  // Center sample beats the corner sample for a uniform coefficient.
  CHECK(u[6 * 13 + 6] > u[0]);
}

TEST_CASE("90-degree rotation equivariance") {
  Eigen::VectorXd a = random_field(8, 401);
  Eigen::VectorXd u = membrane_solve(a);
  Eigen::VectorXd ur = membrane_solve(rot90_coeff(a, 8));
  for (int l = 0; l < 13; ++l)
    for (int k = 0; k < 13; ++k)
      CHECK(harness::close(ur[rot90_out_index(k, l, 13)], u[l * 13 + k], 1e-12));
}

TEST_CASE("scaling the coefficient by 2 halves the solution") {
  Eigen::VectorXd a = random_field(8, 402);
  Eigen::VectorXd u1 = membrane_solve(a);
  Eigen::VectorXd u2 = membrane_solve(2.0 * a);
  for (int i = 0; i < u1.size(); ++i) CHECK(harness::close(2.0 * u2[i], u1[i], 1e-12));
}

TEST_CASE("fine-grid refinement converges") {
  MembraneSpec coarse_solve;  // fine = 64
  MembraneSpec fine_solve;
  fine_solve.fine = 256;
  Eigen::VectorXd a = membrane_true_field(8);
  Eigen::VectorXd u64 = membrane_solve(a, coarse_solve);
  Eigen::VectorXd u256 = membrane_solve(a, fine_solve);
  double diff = (u64 - u256).lpNorm<Eigen::Infinity>();
  double scale = u256.lpNorm<Eigen::Infinity>();
  CHECK(diff < 0.02 * scale);  // default grid is already within a couple percent
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(membrane_solve(Eigen::VectorXd::Ones(63)), BridgeError);
  Eigen::VectorXd bad = Eigen::VectorXd::Ones(64);
  bad[10] = 0.0;
  CHECK_THROWS_AS(membrane_solve(bad), BridgeError);
  MembraneSpec odd;
  odd.fine = 60;  // not a multiple of 8
  CHECK_THROWS_AS(membrane_solve(Eigen::VectorXd::Ones(64), odd), BridgeError);
}

TEST_CASE("true field is the 0.8 / 1.25 checkerboard") {
  Eigen::VectorXd a = membrane_true_field(8);
  CHECK(a[0] == 0.8);           // (0,0): even
  CHECK(a[1] == 1.25);          // (1,0): odd
  CHECK(a[8] == 1.25);          // (0,1): odd
  CHECK(a[9] == 0.8);           // (1,1): even
  CHECK(a.size() == 64);
}

TEST_CASE("posterior: noiseless data make the truth a fixed point") {
  MembranePosteriorModel model;
  Eigen::VectorXd truth = membrane_true_field(8);
  double at_truth = model.evaluate(single(truth), {})[0][0];
  double prior = 0.0;
  for (int i = 0; i < 64; ++i) {
    double lt = std::log(truth[i]);
    prior -= lt * lt / (2.0 * MembranePosteriorModel::kPriorSd * MembranePosteriorModel::kPriorSd);
  }
  CHECK(at_truth == doctest::Approx(prior).epsilon(1e-13));

  SUBCASE("finite perturbations of one cell lower the posterior") {
    for (double factor : {0.6, 0.75, 1.3, 1.6}) {
      Eigen::VectorXd m = truth;
      m[27] *= factor;
      CHECK(model.evaluate(single(m), {})[0][0] < at_truth);
    }
  }

  SUBCASE("support sentinel for non-positive cells") {
    Eigen::VectorXd m = truth;
    m[5] = 0.0;
    CHECK(model.evaluate(single(m), {})[0][0] <= kOutsideSupport);
    m[5] = -2.0;
    CHECK(model.evaluate(single(m), {})[0][0] <= kOutsideSupport);
  }
}

TEST_CASE("posterior decomposes into misfit plus prior") {
  MembranePosteriorModel model;
  Eigen::VectorXd m = random_field(8, 403);
  double value = model.evaluate(single(m), {})[0][0];
  Eigen::VectorXd z = membrane_solve(m);
  double misfit = -(model.observations() - z).squaredNorm() /
                  (2.0 * MembranePosteriorModel::kNoiseSd * MembranePosteriorModel::kNoiseSd);
  double prior = 0.0;
  for (int i = 0; i < 64; ++i) {
    double lt = std::log(m[i]);
    prior -= lt * lt / (2.0 * MembranePosteriorModel::kPriorSd * MembranePosteriorModel::kPriorSd);
  }
  CHECK(harness::close(value, misfit + prior, 1e-12));
}
