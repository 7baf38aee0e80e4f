#pragma once

#include <Eigen/Dense>

#include "bridge/model.hpp"

namespace bridge {

// Log-densities are clamped below at kLogFloor; samplers treat values at or
// below kOutsideSupport as "outside support".
inline constexpr double kLogFloor = -1.0e308;
inline constexpr double kOutsideSupport = -1.0e307;

inline double clamp_log(double v) {
  if (std::isnan(v)) return kLogFloor;
  return std::max(v, kLogFloor);
}

// Curved 2-D Gaussian: log density of Z ~ N((0,4), scale*[[1,0.5],[0.5,1]])
// at T(theta) = (theta_0/a, a*theta_1 + a*b*(theta_0^2 + a^2)).
struct BananaSpec {
  double a = 2.0;
  double b = 0.2;
  double scale = 1.0;
};
double banana_logpdf(const Eigen::Vector2d& theta, const BananaSpec& spec = {});

// Ring: -(|theta| - radius)^2 / sigma2.
struct DonutSpec {
  double radius = 2.6;
  double sigma2 = 0.033;
};
double donut_logpdf(const Eigen::Vector2d& theta, const DonutSpec& spec = {});
Eigen::Vector2d donut_grad(const Eigen::Vector2d& theta, const DonutSpec& spec = {});

// f(x; m, s) below is the 1-D normal log-density. The funnel couples the
// second coordinate's scale to the first: f(t0; 0, 3) + f(t1; 0, exp(t0/2)).
double normal_logpdf(double x, double mean, double sd);
double funnel_logpdf(const Eigen::Vector2d& theta);
Eigen::Vector2d funnel_grad(const Eigen::Vector2d& theta);

// Equal-weight sum of N((-1.5,-1.5), 0.8 I), N((1.5,1.5), 0.8 I),
// N((-2,2), 0.5 I); evaluated with log-sum-exp.
double gaussian_mixture_logpdf(const Eigen::Vector2d& theta);
Eigen::Vector2d gaussian_mixture_grad(const Eigen::Vector2d& theta);

class BananaModel : public Model {
 public:
  std::string name() const override { return "banana"; }
  std::vector<std::size_t> input_sizes(const Config&) const override { return {2}; }
  std::vector<std::size_t> output_sizes(const Config&) const override { return {1}; }
  ParameterList evaluate(const ParameterList& input, const Config& config) const override;
};

class DonutModel : public Model {
 public:
  std::string name() const override { return "donut"; }
  std::vector<std::size_t> input_sizes(const Config&) const override { return {2}; }
  std::vector<std::size_t> output_sizes(const Config&) const override { return {1}; }
  Capabilities capabilities() const override {
    return {.evaluate = true, .gradient = true, .apply_jacobian = true};
  }
  ParameterList evaluate(const ParameterList& input, const Config&) const override;
  Vector gradient(std::size_t, std::size_t, const ParameterList& input, const Vector& sens,
                  const Config&) const override;
  Vector apply_jacobian(std::size_t, std::size_t, const ParameterList& input, const Vector& vec,
                        const Config&) const override;
};

class FunnelModel : public Model {
 public:
  std::string name() const override { return "funnel"; }
  std::vector<std::size_t> input_sizes(const Config&) const override { return {2}; }
  std::vector<std::size_t> output_sizes(const Config&) const override { return {1}; }
  Capabilities capabilities() const override {
    return {.evaluate = true, .gradient = true, .apply_jacobian = true};
  }
  ParameterList evaluate(const ParameterList& input, const Config&) const override;
  Vector gradient(std::size_t, std::size_t, const ParameterList& input, const Vector& sens,
                  const Config&) const override;
  Vector apply_jacobian(std::size_t, std::size_t, const ParameterList& input, const Vector& vec,
                        const Config&) const override;
};

class GaussianMixtureModel : public Model {
 public:
  std::string name() const override { return "gaussian-mixture"; }
  std::vector<std::size_t> input_sizes(const Config&) const override { return {2}; }
  std::vector<std::size_t> output_sizes(const Config&) const override { return {1}; }
  Capabilities capabilities() const override {
    return {.evaluate = true, .gradient = true, .apply_jacobian = true};
  }
  ParameterList evaluate(const ParameterList& input, const Config&) const override;
  Vector gradient(std::size_t, std::size_t, const ParameterList& input, const Vector& sens,
                  const Config&) const override;
  Vector apply_jacobian(std::size_t, std::size_t, const ParameterList& input, const Vector& vec,
                        const Config&) const override;
};

BananaSpec banana_spec_from_config(const Config& config);  // keys a, b, scale

}  // namespace bridge
