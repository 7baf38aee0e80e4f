#include "support/oracles.hpp"

#include <cmath>

namespace oracle {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double normal2_logpdf(double x0, double x1, double m0, double m1, double var) {
  double q = (x0 - m0) * (x0 - m0) + (x1 - m1) * (x1 - m1);
  return -std::log(kTwoPi * var) - q / (2.0 * var);
}
}  // namespace

double banana(double t0, double t1, double a, double b, double scale) {
  double z0 = t0 / a;
  double z1 = a * t1 + a * b * (t0 * t0 + a * a);
  double d0 = z0 - 0.0;
  double d1 = z1 - 4.0;
  // cov = scale*[[1, .5], [.5, 1]]; det = 0.75 scale^2;
  // inv = [[1, -.5], [-.5, 1]] / (0.75 scale)
  double quad = (d0 * d0 - d0 * d1 + d1 * d1) / (0.75 * scale);
  return -std::log(kTwoPi) - 0.5 * std::log(0.75 * scale * scale) - 0.5 * quad;
}

double donut(double t0, double t1) {
  double r = std::sqrt(t0 * t0 + t1 * t1);
  return -(r - 2.6) * (r - 2.6) / 0.033;
}

double funnel(double t0, double t1) {
  auto f = [](double x, double m, double s) {
    return -0.5 * std::log(kTwoPi) - std::log(s) - 0.5 * ((x - m) / s) * ((x - m) / s);
  };
  return f(t0, 0.0, 3.0) + f(t1, 0.0, std::exp(t0 / 2.0));
}

double gaussian_mixture(double t0, double t1) {
  double p = std::exp(normal2_logpdf(t0, t1, -1.5, -1.5, 0.8)) +
             std::exp(normal2_logpdf(t0, t1, 1.5, 1.5, 0.8)) +
             std::exp(normal2_logpdf(t0, t1, -2.0, 2.0, 0.5));
  return std::log(p);
}

Eigen::MatrixXd deconv_matrix(int n) {
  Eigen::VectorXd w(13);
  for (int d = -6; d <= 6; ++d) w[d + 6] = std::exp(-d * d / (2.0 * 4.0));
  w /= w.sum();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int d = -6; d <= 6; ++d) A(i, ((i - d) % n + n) % n) += w[d + 6];
  return A;
}

double deconv_posterior(const Eigen::VectorXd& x, const Eigen::VectorXd& data, int prior,
                        double delta, double noise_sd) {
  Eigen::MatrixXd A = deconv_matrix(static_cast<int>(x.size()));
  double ll = -(data - A * x).squaredNorm() / (2.0 * noise_sd * noise_sd);
  double lp = 0.0;
  int n = static_cast<int>(x.size());
  if (prior == 0) {
    lp = -x.squaredNorm() / (2.0 * delta);
  } else {
    for (int i = 0; i < n; ++i) {
      double d = x[i] - x[(i - 1 + n) % n];
      if (prior == 1) lp -= d * d / (2.0 * delta);
      if (prior == 2) lp -= std::abs(d) / delta;
      if (prior == 3) lp -= std::log(1.0 + d * d / (delta * delta));
    }
  }
  return ll + lp;
}

double cantilever_deflection(double x, double q, double r, double E, double L) {
  double D = r * E;
  return q * x * x * (x * x - 4.0 * L * x + 6.0 * L * L) / (24.0 * D);
}

}  // namespace oracle
