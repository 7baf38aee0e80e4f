#include <doctest.h>

#include <cmath>
#include <limits>

#include "bridge/densities.hpp"
#include "bridge/rng.hpp"
#include "support/harness.hpp"
#include "support/oracles.hpp"

using namespace bridge;

namespace {

// Central difference of a scalar 2-D function, step 1e-6 * max(1, |t_i|).
Eigen::Vector2d central_diff(double (*f)(const Eigen::Vector2d&), const Eigen::Vector2d& t) {
  Eigen::Vector2d g;
  for (int i = 0; i < 2; ++i) {
    double h = 1e-6 * std::max(1.0, std::abs(t[i]));
    Eigen::Vector2d p = t, m = t;
    p[i] += h;
    m[i] -= h;
    g[i] = (f(p) - f(m)) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("banana agrees with the formula oracle at 1000 seeded points") {
  for (const auto& t : harness::seeded_points_2d(1000, -4.0, 4.0, 101)) {
    CHECK(harness::close(banana_logpdf(t), oracle::banana(t[0], t[1]), 1e-12));
  }
}

TEST_CASE("banana pinned values and symmetries") {
  CHECK(banana_logpdf({0.0, 1.2}) == doctest::Approx(-1.694036030183455).epsilon(1e-13));
  // The correlated covariance breaks mirror symmetry in the first coordinate,
  // but any Gaussian is invariant under point reflection through its mean:
  // (z0, z1) -> (-z0, 8 - z1) pulls back to the parameter map below.
  for (const auto& t : harness::seeded_points_2d(50, -3.0, 3.0, 102)) {
    Eigen::Vector2d mirror{-t[0], 4.0 - 0.4 * (t[0] * t[0] + 4.0) - t[1]};
    CHECK(harness::close(banana_logpdf(t), banana_logpdf(mirror), 1e-12));
  }
  BananaSpec wide;
  wide.scale = 4.0;
  // At the mode, growing the covariance by 4 lowers the log density by log 4.
  double drop = banana_logpdf({0.0, 1.2}) - banana_logpdf({0.0, 1.2}, wide);
  CHECK(drop == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("donut agrees with the formula oracle at 1000 seeded points") {
  for (const auto& t : harness::seeded_points_2d(1000, -4.0, 4.0, 103)) {
    CHECK(harness::close(donut_logpdf(t), oracle::donut(t[0], t[1]), 1e-12));
  }
}

TEST_CASE("donut pinned values") {
  CHECK(donut_logpdf({2.6, 0.0}) == 0.0);
  CHECK(std::abs(donut_logpdf({0.0, 0.0}) - (-6.76 / 0.033)) < 1e-9);
  bridge::CounterRng rng{7, 0};
  for (int i = 0; i < 100; ++i) {
    double phi = rng.uniform(i, 0.0, 6.283185307179586);
    CHECK(std::abs(donut_logpdf({2.6 * std::cos(phi), 2.6 * std::sin(phi)})) < 1e-24);
  }
}

TEST_CASE("donut gradient: analytic vs differences, undefined at the center") {
  for (const auto& t : harness::seeded_points_2d(50, 0.5, 3.5, 104)) {
    Eigen::Vector2d g = donut_grad(t);
    Eigen::Vector2d fd = central_diff(+[](const Eigen::Vector2d& x) { return donut_logpdf(x); }, t);
    for (int i = 0; i < 2; ++i) CHECK(harness::close(g[i], fd[i], 1e-6));
  }
  CHECK_THROWS_AS(donut_grad({0.0, 0.0}), BridgeError);
  DonutModel m;
  ParameterList origin = single(Vector::Zero(2));
  CHECK_THROWS_AS(m.gradient(0, 0, origin, Vector::Ones(1), {}), BridgeError);
}

TEST_CASE("funnel agrees with the formula oracle at 1000 seeded points") {
  for (const auto& t : harness::seeded_points_2d(1000, -5.0, 5.0, 105)) {
    CHECK(harness::close(funnel_logpdf(t), oracle::funnel(t[0], t[1]), 1e-12));
  }
}

TEST_CASE("funnel pinned value, symmetry, stationarity") {
  CHECK(funnel_logpdf({0.0, 0.0}) == doctest::Approx(-2.9364893550774553).epsilon(1e-13));
  for (const auto& t : harness::seeded_points_2d(50, -4.0, 4.0, 106)) {
    CHECK(funnel_logpdf(t) == funnel_logpdf({t[0], -t[1]}));  // quadratic in the second coord
  }
  CHECK(funnel_grad({0.0, 0.0})[1] == 0.0);
  for (const auto& t : harness::seeded_points_2d(50, -2.0, 2.0, 107)) {
    Eigen::Vector2d g = funnel_grad(t);
    Eigen::Vector2d fd = central_diff(+[](const Eigen::Vector2d& x) { return funnel_logpdf(x); }, t);
    for (int i = 0; i < 2; ++i) CHECK(harness::close(g[i], fd[i], 1e-6));
  }
}

TEST_CASE("mixture agrees with the formula oracle at 1000 seeded points") {
  for (const auto& t : harness::seeded_points_2d(1000, -6.0, 6.0, 108)) {
    CHECK(harness::close(gaussian_mixture_logpdf(t), oracle::gaussian_mixture(t[0], t[1]), 1e-12));
  }
}

TEST_CASE("mixture pinned value and far-field stability") {
  // Plain (unnormalized) sum of the three component densities at the origin.
  CHECK(gaussian_mixture_logpdf({0.0, 0.0}) ==
        doctest::Approx(-3.7296275264036907).epsilon(1e-13));

  // Far out, the naive sum underflows but log-sum-exp keeps the dominant
  // component's tail: component 2 centered at (1.5, 1.5), variance 0.8.
  double v = gaussian_mixture_logpdf({100.0, 100.0});
  CHECK(std::isfinite(v));
  double tail = -std::log(2.0 * 3.14159265358979323846 * 0.8) - 2.0 * 98.5 * 98.5 / 1.6;
  CHECK(harness::close(v, tail, 1e-12));
}

TEST_CASE("mixture reflection through the origin preserves the first two components") {
  auto comp = [](const Eigen::Vector2d& t, double m0, double m1, double var) {
    return std::exp(-std::log(2.0 * 3.14159265358979323846 * var) -
                    ((t[0] - m0) * (t[0] - m0) + (t[1] - m1) * (t[1] - m1)) / (2.0 * var));
  };
  for (const auto& t : harness::seeded_points_2d(50, -3.0, 3.0, 109)) {
    Eigen::Vector2d r = -t;
    double pair_t = comp(t, -1.5, -1.5, 0.8) + comp(t, 1.5, 1.5, 0.8);
    double pair_r = comp(r, -1.5, -1.5, 0.8) + comp(r, 1.5, 1.5, 0.8);
    CHECK(harness::close(pair_t, pair_r, 1e-13));
    double third_t = std::exp(gaussian_mixture_logpdf(t)) - comp(t, -2.0, 2.0, 0.5);
    CHECK(harness::close(third_t, pair_t, 1e-10));
  }
}

TEST_CASE("mixture gradient matches differences") {
  for (const auto& t : harness::seeded_points_2d(50, -4.0, 4.0, 110)) {
    Eigen::Vector2d g = gaussian_mixture_grad(t);
    Eigen::Vector2d fd =
        central_diff(+[](const Eigen::Vector2d& x) { return gaussian_mixture_logpdf(x); }, t);
    for (int i = 0; i < 2; ++i) CHECK(harness::close(g[i], fd[i], 1e-6));
  }
}

TEST_CASE("density models wrap the free functions and stay consistent") {
  DonutModel donut;
  FunnelModel funnel;
  GaussianMixtureModel mixture;
  BananaModel banana;
  for (const auto& t : harness::seeded_points_2d(25, -3.0, 3.0, 111)) {
    ParameterList in = single(Vector(t));
    CHECK(donut.evaluate(in, {})[0][0] == donut_logpdf(t));
    CHECK(funnel.evaluate(in, {})[0][0] == funnel_logpdf(t));
    CHECK(mixture.evaluate(in, {})[0][0] == gaussian_mixture_logpdf(t));
    CHECK(banana.evaluate(in, {})[0][0] == banana_logpdf(t));

    // For one scalar output, J v is the scalar g . v and gradient is sens * g.
    Vector vec(2);
    vec << 0.3, -0.7;
    if (t.norm() > 1e-6) {
      Vector jv = donut.apply_jacobian(0, 0, in, vec, {});
      Vector g = donut.gradient(0, 0, in, Vector::Ones(1), {});
      REQUIRE(jv.size() == 1);
      CHECK(harness::close(jv[0], g.dot(vec), 1e-12));
    }
  }
}

TEST_CASE("log floor and support sentinels") {
  CHECK(clamp_log(std::nan("")) == kLogFloor);
  CHECK(clamp_log(-std::numeric_limits<double>::infinity()) == kLogFloor);
  CHECK(clamp_log(-5.0) == -5.0);
  CHECK(kOutsideSupport > kLogFloor);
  CHECK(std::isfinite(kLogFloor));
}
