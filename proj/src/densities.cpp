#include "bridge/densities.hpp"

#include <cmath>

namespace bridge {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double config_number(const Config& config, const char* key, double fallback) {
  if (!config.contains(key)) return fallback;
  const Json& v = config.at(key);
  if (!v.is_number())
    throw BridgeError(ErrorType::InvalidInput, std::string("config \"") + key + "\" must be a number");
  double x = v.get<double>();
  if (!std::isfinite(x))
    throw BridgeError(ErrorType::InvalidInput, std::string("config \"") + key + "\" must be finite");
  return x;
}

Eigen::Vector2d point(const ParameterList& input) {
  return Eigen::Vector2d(input[0][0], input[0][1]);
}

}  // namespace

BananaSpec banana_spec_from_config(const Config& config) {
  BananaSpec s;
  s.a = config_number(config, "a", s.a);
  s.b = config_number(config, "b", s.b);
  s.scale = config_number(config, "scale", s.scale);
  if (s.a == 0.0) throw BridgeError(ErrorType::InvalidInput, "config \"a\" must be nonzero");
  if (s.scale <= 0.0)
    throw BridgeError(ErrorType::InvalidInput, "config \"scale\" must be positive");
  return s;
}

double banana_logpdf(const Eigen::Vector2d& theta, const BananaSpec& spec) {
  Eigen::Vector2d t(theta[0] / spec.a,
                    spec.a * theta[1] + spec.a * spec.b * (theta[0] * theta[0] + spec.a * spec.a));
  Eigen::Vector2d d = t - Eigen::Vector2d(0.0, 4.0);
  // Sigma = scale * [[1, 0.5], [0.5, 1]]; det = 0.75 scale^2.
  double q = (d[0] * d[0] - d[0] * d[1] + d[1] * d[1]) / (0.75 * spec.scale);
  double logdet = 2.0 * std::log(spec.scale) + std::log(0.75);
  return clamp_log(-kLog2Pi - 0.5 * logdet - 0.5 * q);
}

double donut_logpdf(const Eigen::Vector2d& theta, const DonutSpec& spec) {
  double d = theta.norm() - spec.radius;
  return clamp_log(-d * d / spec.sigma2);
}

Eigen::Vector2d donut_grad(const Eigen::Vector2d& theta, const DonutSpec& spec) {
  double r = theta.norm();
  if (r == 0.0)
    throw BridgeError(ErrorType::InvalidInput, "gradient undefined at the origin");
  return (-2.0 * (r - spec.radius) / spec.sigma2 / r) * theta;
}

double normal_logpdf(double x, double mean, double sd) {
  double z = (x - mean) / sd;
  return -0.5 * kLog2Pi - std::log(sd) - 0.5 * z * z;
}

double funnel_logpdf(const Eigen::Vector2d& theta) {
  return clamp_log(normal_logpdf(theta[0], 0.0, 3.0) +
                   normal_logpdf(theta[1], 0.0, std::exp(theta[0] / 2.0)));
}

Eigen::Vector2d funnel_grad(const Eigen::Vector2d& theta) {
  double em = std::exp(-theta[0]);
  return Eigen::Vector2d(-theta[0] / 9.0 - 0.5 + 0.5 * theta[1] * theta[1] * em,
                         -theta[1] * em);
}

namespace {

struct MixtureComponent {
  Eigen::Vector2d mean;
  double var;
};

const MixtureComponent kComponents[3] = {
    {{-1.5, -1.5}, 0.8},
    {{1.5, 1.5}, 0.8},
    {{-2.0, 2.0}, 0.5},
};

}  // namespace

double gaussian_mixture_logpdf(const Eigen::Vector2d& theta) {
  double logs[3];
  double top = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    double q = (theta - kComponents[k].mean).squaredNorm() / kComponents[k].var;
    logs[k] = -kLog2Pi - std::log(kComponents[k].var) - 0.5 * q;
    top = std::max(top, logs[k]);
  }
  double acc = 0.0;
  for (int k = 0; k < 3; ++k) acc += std::exp(logs[k] - top);
  return clamp_log(top + std::log(acc));
}

Eigen::Vector2d gaussian_mixture_grad(const Eigen::Vector2d& theta) {
  double logs[3];
  double top = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    double q = (theta - kComponents[k].mean).squaredNorm() / kComponents[k].var;
    logs[k] = -kLog2Pi - std::log(kComponents[k].var) - 0.5 * q;
    top = std::max(top, logs[k]);
  }
  double wsum = 0.0;
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (int k = 0; k < 3; ++k) {
    double w = std::exp(logs[k] - top);
    wsum += w;
    acc += w * (-(theta - kComponents[k].mean) / kComponents[k].var);
  }
  return acc / wsum;
}

ParameterList BananaModel::evaluate(const ParameterList& input, const Config& config) const {
  BananaSpec spec = banana_spec_from_config(config);
  return single(Vector::Constant(1, banana_logpdf(point(input), spec)));
}

ParameterList DonutModel::evaluate(const ParameterList& input, const Config&) const {
  return single(Vector::Constant(1, donut_logpdf(point(input))));
}

Vector DonutModel::gradient(std::size_t, std::size_t, const ParameterList& input,
                            const Vector& sens, const Config&) const {
  return sens[0] * donut_grad(point(input));
}

Vector DonutModel::apply_jacobian(std::size_t, std::size_t, const ParameterList& input,
                                  const Vector& vec, const Config&) const {
  return Vector::Constant(1, donut_grad(point(input)).dot(vec));
}

ParameterList FunnelModel::evaluate(const ParameterList& input, const Config&) const {
  return single(Vector::Constant(1, funnel_logpdf(point(input))));
}

Vector FunnelModel::gradient(std::size_t, std::size_t, const ParameterList& input,
                             const Vector& sens, const Config&) const {
  return sens[0] * funnel_grad(point(input));
}

Vector FunnelModel::apply_jacobian(std::size_t, std::size_t, const ParameterList& input,
                                   const Vector& vec, const Config&) const {
  return Vector::Constant(1, funnel_grad(point(input)).dot(vec));
}

ParameterList GaussianMixtureModel::evaluate(const ParameterList& input, const Config&) const {
  return single(Vector::Constant(1, gaussian_mixture_logpdf(point(input))));
}

Vector GaussianMixtureModel::gradient(std::size_t, std::size_t, const ParameterList& input,
                                      const Vector& sens, const Config&) const {
  return sens[0] * gaussian_mixture_grad(point(input));
}

Vector GaussianMixtureModel::apply_jacobian(std::size_t, std::size_t, const ParameterList& input,
                                            const Vector& vec, const Config&) const {
  return Vector::Constant(1, gaussian_mixture_grad(point(input)).dot(vec));
}

}  // namespace bridge
