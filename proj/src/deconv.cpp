#include "bridge/deconv.hpp"

#include <cmath>

#include "bridge/densities.hpp"
#include "bridge/rng.hpp"

namespace bridge {

Eigen::VectorXd deconv_kernel(const DeconvSpec& spec) {
  const int hw = spec.kernel_halfwidth;
  Eigen::VectorXd w(2 * hw + 1);
  for (int d = -hw; d <= hw; ++d)
    w[d + hw] = std::exp(-0.5 * d * d / (spec.kernel_sd * spec.kernel_sd));
  return w / w.sum();
}

Eigen::VectorXd deconv_apply(const Eigen::VectorXd& x, const DeconvSpec& spec) {
  const int n = spec.n;
  const int hw = spec.kernel_halfwidth;
  Eigen::VectorXd w = deconv_kernel(spec);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int d = -hw; d <= hw; ++d) acc += w[d + hw] * x[((i - d) % n + n) % n];
    y[i] = acc;
  }
  return y;
}

Eigen::VectorXd deconv_true_signal(const DeconvSpec& spec) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(spec.n);
  for (int i = 32; i < 64 && i < spec.n; ++i) x[i] = 1.0;
  for (int i = 80; i < 104 && i < spec.n; ++i) x[i] = 0.5;
  return x;
}

Eigen::VectorXd deconv_data(const DeconvSpec& spec) {
  CounterRng rng{424242, 1};
  Eigen::VectorXd b = deconv_apply(deconv_true_signal(spec), spec);
  for (int i = 0; i < spec.n; ++i) b[i] += spec.noise_sd * rng.normal(i);
  return b;
}

const char* to_string(DeconvPrior p) {
  switch (p) {
    case DeconvPrior::Gaussian: return "Gaussian";
    case DeconvPrior::GMRF: return "GMRF";
    case DeconvPrior::LMRF: return "LMRF";
    case DeconvPrior::CMRF: return "CMRF";
  }
  return "Gaussian";
}

bool deconv_prior_from_string(const std::string& s, DeconvPrior& out) {
  for (DeconvPrior p :
       {DeconvPrior::Gaussian, DeconvPrior::GMRF, DeconvPrior::LMRF, DeconvPrior::CMRF}) {
    if (s == to_string(p)) {
      out = p;
      return true;
    }
  }
  return false;
}

double deconv_prior_logpdf(const Eigen::VectorXd& x, DeconvPrior prior, double delta) {
  const int n = static_cast<int>(x.size());
  if (prior == DeconvPrior::Gaussian) return -x.squaredNorm() / (2.0 * delta);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double d = x[i] - x[(i - 1 + n) % n];
    switch (prior) {
      case DeconvPrior::GMRF: acc -= d * d / (2.0 * delta); break;
      case DeconvPrior::LMRF: acc -= std::abs(d) / delta; break;
      case DeconvPrior::CMRF: acc -= std::log1p(d * d / (delta * delta)); break;
      default: break;
    }
  }
  return acc;
}

Eigen::VectorXd deconv_prior_grad(const Eigen::VectorXd& x, DeconvPrior prior, double delta) {
  const int n = static_cast<int>(x.size());
  switch (prior) {
    case DeconvPrior::Gaussian:
      return -x / delta;
    case DeconvPrior::GMRF: {
      Eigen::VectorXd g(n);
      for (int i = 0; i < n; ++i)
        g[i] = -(2.0 * x[i] - x[(i - 1 + n) % n] - x[(i + 1) % n]) / delta;
      return g;
    }
    default:
      throw BridgeError(ErrorType::UnsupportedFeature,
                        std::string("no gradient for the ") + to_string(prior) + " prior");
  }
}

double deconv_posterior_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& data,
                               DeconvPrior prior, double delta, const DeconvSpec& spec) {
  double misfit = (data - deconv_apply(x, spec)).squaredNorm() /
                  (2.0 * spec.noise_sd * spec.noise_sd);
  return clamp_log(-misfit + deconv_prior_logpdf(x, prior, delta));
}

ParameterList DeconvForwardModel::evaluate(const ParameterList& input, const Config&) const {
  return single(deconv_apply(input[0], spec_));
}

DeconvPosteriorModel::DeconvPosteriorModel(DeconvSpec spec)
    : spec_(spec), data_(deconv_data(spec)) {}

DeconvPosteriorModel::Choice DeconvPosteriorModel::choice_from(const Config& config) const {
  Choice c{DeconvPrior::Gaussian, 0.01};
  if (config.contains("prior")) {
    const Json& p = config.at("prior");
    if (!p.is_string() || !deconv_prior_from_string(p.get<std::string>(), c.prior))
      throw BridgeError(ErrorType::InvalidInput,
                        "config \"prior\" must be one of Gaussian, GMRF, LMRF, CMRF");
  }
  if (config.contains("delta")) {
    const Json& d = config.at("delta");
    if (!d.is_number() || !(d.get<double>() > 0.0))
      throw BridgeError(ErrorType::InvalidInput, "config \"delta\" must be a positive number");
    c.delta = d.get<double>();
  }
  return c;
}

ParameterList DeconvPosteriorModel::evaluate(const ParameterList& input,
                                             const Config& config) const {
  Choice c = choice_from(config);
  return single(
      Vector::Constant(1, deconv_posterior_logpdf(input[0], data_, c.prior, c.delta, spec_)));
}

Vector DeconvPosteriorModel::gradient(std::size_t, std::size_t, const ParameterList& input,
                                      const Vector& sens, const Config& config) const {
  Choice c = choice_from(config);
  // The kernel is symmetric, so A^T equals A.
  Eigen::VectorXd residual = data_ - deconv_apply(input[0], spec_);
  Eigen::VectorXd g = deconv_apply(residual, spec_) / (spec_.noise_sd * spec_.noise_sd) +
                      deconv_prior_grad(input[0], c.prior, c.delta);
  return sens[0] * g;
}

}  // namespace bridge
