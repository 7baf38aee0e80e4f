#include "bridge/genz.hpp"

#include <cmath>

namespace bridge {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

[[noreturn]] void invalid(const std::string& msg) {
  throw BridgeError(ErrorType::InvalidInput, msg);
}

}  // namespace

const char* to_string(GenzFamily f) {
  switch (f) {
    case GenzFamily::Oscillatory: return "oscillatory";
    case GenzFamily::ProductPeak: return "product-peak";
    case GenzFamily::CornerPeak: return "corner-peak";
    case GenzFamily::GaussianPeak: return "gaussian-peak";
    case GenzFamily::C0Continuous: return "c0-continuous";
    case GenzFamily::Discontinuous: return "discontinuous";
  }
  return "oscillatory";
}

const char* to_string(GenzDecay d) {
  switch (d) {
    case GenzDecay::None: return "none";
    case GenzDecay::Quadratic: return "quadratic";
    case GenzDecay::Quartic: return "quartic";
    case GenzDecay::Exponential: return "exponential";
    case GenzDecay::SquaredExponential: return "squared-exponential";
  }
  return "squared-exponential";
}

bool genz_family_from_string(const std::string& s, GenzFamily& out) {
  for (GenzFamily f : {GenzFamily::Oscillatory, GenzFamily::ProductPeak, GenzFamily::CornerPeak,
                       GenzFamily::GaussianPeak, GenzFamily::C0Continuous,
                       GenzFamily::Discontinuous}) {
    if (s == to_string(f)) {
      out = f;
      return true;
    }
  }
  return false;
}

bool genz_decay_from_string(const std::string& s, GenzDecay& out) {
  for (GenzDecay d : {GenzDecay::None, GenzDecay::Quadratic, GenzDecay::Quartic,
                      GenzDecay::Exponential, GenzDecay::SquaredExponential}) {
    if (s == to_string(d)) {
      out = d;
      return true;
    }
  }
  return false;
}

Eigen::VectorXd genz_coefficients(const GenzSpec& spec) {
  int n = spec.n;
  Eigen::VectorXd raw(n);
  for (int i = 0; i < n; ++i) {
    switch (spec.decay) {
      case GenzDecay::None:
        raw[i] = (i + 0.5) / n;
        break;
      case GenzDecay::Quadratic:
        raw[i] = 1.0 / ((i + 1.0) * (i + 1.0));
        break;
      case GenzDecay::Quartic:
        raw[i] = 1.0 / std::pow(i + 1.0, 4);
        break;
      case GenzDecay::Exponential:
        raw[i] = std::exp(std::log(spec.c_min) * (i + 1.0) / n);
        break;
      case GenzDecay::SquaredExponential:
        raw[i] = std::pow(10.0, std::log10(spec.c_min) * (i + 1.0) * (i + 1.0) / (double(n) * n));
        break;
    }
  }
  return spec.C * raw / raw.sum();
}

double genz_evaluate(const Eigen::VectorXd& theta, const GenzSpec& spec) {
  if (theta.size() != spec.n)
    invalid("theta length does not match the dimension n");
  for (int i = 0; i < spec.n; ++i)
    if (!(theta[i] >= 0.0 && theta[i] <= 1.0))
      invalid("theta must lie in the unit cube [0,1]^n");
  Eigen::VectorXd c = genz_coefficients(spec);
  int n = spec.n;
  double w = spec.W;
  switch (spec.family) {
    case GenzFamily::Oscillatory:
      return std::cos(2.0 * kPi * w + c.dot(theta));
    case GenzFamily::ProductPeak: {
      double prod = 1.0;
      for (int i = 0; i < n; ++i) {
        double d = theta[i] - w;
        prod *= 1.0 / (1.0 / (c[i] * c[i]) + d * d);
      }
      return prod;
    }
    case GenzFamily::CornerPeak:
      return std::pow(1.0 + c.dot(theta), -(n + 1.0));
    case GenzFamily::GaussianPeak: {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        double d = theta[i] - w;
        s += c[i] * c[i] * d * d;
      }
      return std::exp(-s);
    }
    case GenzFamily::C0Continuous: {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += c[i] * std::abs(theta[i] - w);
      return std::exp(-s);
    }
    case GenzFamily::Discontinuous: {
      if (theta[0] > w) return 0.0;
      if (n >= 2 && theta[1] > w) return 0.0;
      return std::exp(c.dot(theta));
    }
  }
  return 0.0;
}

namespace {

// One-dimensional factors of the product-form families, written to stay
// accurate as c -> 0.
double osc_factor(double c) {
  // integral of the phase term: 2 sin(c/2) / c
  if (c == 0.0) return 1.0;
  return 2.0 * std::sin(0.5 * c) / c;
}

double product_peak_factor(double c, double w) {
  return c * (std::atan(c * (1.0 - w)) + std::atan(c * w));
}

double gaussian_peak_factor(double c, double w) {
  constexpr double kSqrtPi = 1.7724538509055160272981674833411;
  return kSqrtPi / (2.0 * c) * (std::erf(c * (1.0 - w)) + std::erf(c * w));
}

double c0_factor(double c, double w) {
  if (w <= 0.0) return std::exp(c * w) * (-std::expm1(-c)) / c;
  if (w >= 1.0) return std::exp(-c * w) * std::expm1(c) / c;
  return (-std::expm1(-c * w) - std::expm1(-c * (1.0 - w))) / c;
}

double discontinuous_factor(double c, double hi) {
  // integral of exp(c t) over [0, hi]
  return std::expm1(c * hi) / c;
}

// 64-point Gauss-Laguerre rule (weight e^-x on [0, inf)), nodes by Newton on
// the Laguerre recurrence, weights via L_{m-1} at the roots.
struct LaguerreRule {
  static constexpr int m = 64;
  double x[m];
  double w[m];

  LaguerreRule() {
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
      if (i == 0) z = 3.0 / (1.0 + 2.4 * m);
      else if (i == 1) z += 15.0 / (1.0 + 2.5 * m);
      else z += ((1.0 + 2.55 * (i - 1)) / (1.9 * (i - 1))) * (z - x[i - 2]);
      double p1 = 1.0, p2 = 0.0, pp = 1.0;
      for (int it = 0; it < 100; ++it) {
        p1 = 1.0;
        p2 = 0.0;
        for (int j = 1; j <= m; ++j) {
          double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j - 1.0 - z) * p2 - (j - 1.0) * p3) / j;
        }
        pp = m * (p1 - p2) / z;
        double step = p1 / pp;
        z -= step;
        if (std::abs(step) <= 1e-15 * z) break;
      }
      x[i] = z;
      w[i] = -1.0 / (pp * m * p2);
    }
  }
};

}  // namespace

double genz_reference_integral(const GenzSpec& spec) {
  Eigen::VectorXd c = genz_coefficients(spec);
  int n = spec.n;
  double w = spec.W;
  switch (spec.family) {
    case GenzFamily::Oscillatory: {
      double prod = 1.0;
      for (int i = 0; i < n; ++i) prod *= osc_factor(c[i]);
      return std::cos(2.0 * kPi * w + 0.5 * c.sum()) * prod;
    }
    case GenzFamily::ProductPeak: {
      double prod = 1.0;
      for (int i = 0; i < n; ++i) prod *= product_peak_factor(c[i], w);
      return prod;
    }
    case GenzFamily::CornerPeak: {
      // The textbook value is an alternating sum over the cube's corners,
      // which cancels catastrophically once the coefficients decay. Via
      // 1/A^(n+1) = int x^n e^(-Ax) dx / n! the same integral becomes
      //   int_0^inf e^-x prod_i (1 - e^(-c_i x)) / (c_i (i+1)) dx,
      // an all-positive integrand handled by scaled Gauss-Laguerre. The
      // substitution x -> lambda x keeps every exponential rate inside
      // (-1, 1), where the rule converges spectrally for any c.
      static const LaguerreRule rule;
      const double lambda = 2.0 / (2.0 + c.sum());
      double total = 0.0;
      for (int j = 0; j < LaguerreRule::m; ++j) {
        double xj = rule.x[j];
        double term = rule.w[j] * std::exp((1.0 - lambda) * xj);
        for (int i = 0; i < n; ++i)
          term *= -std::expm1(-c[i] * lambda * xj) / (c[i] * (i + 1.0));
        total += term;
      }
      return lambda * total;
    }
    case GenzFamily::GaussianPeak: {
      double prod = 1.0;
      for (int i = 0; i < n; ++i) prod *= gaussian_peak_factor(c[i], w);
      return prod;
    }
    case GenzFamily::C0Continuous: {
      double prod = 1.0;
      for (int i = 0; i < n; ++i) prod *= c0_factor(c[i], w);
      return prod;
    }
    case GenzFamily::Discontinuous: {
      double prod = 1.0;
      for (int i = 0; i < n; ++i) {
        double hi = (i < 2) ? std::min(w, 1.0) : 1.0;
        if (hi <= 0.0) return 0.0;
        prod *= discontinuous_factor(c[i], hi);
      }
      return prod;
    }
  }
  return 0.0;
}

GenzSpec genz_spec_from_config(const Config& config) {
  GenzSpec spec;
  if (config.contains("family")) {
    const Json& f = config.at("family");
    if (!f.is_string() || !genz_family_from_string(f.get<std::string>(), spec.family))
      invalid("config \"family\" must be one of oscillatory, product-peak, corner-peak, "
              "gaussian-peak, c0-continuous, discontinuous");
  }
  if (config.contains("decay")) {
    const Json& d = config.at("decay");
    if (!d.is_string() || !genz_decay_from_string(d.get<std::string>(), spec.decay))
      invalid("config \"decay\" must be one of none, quadratic, quartic, exponential, "
              "squared-exponential");
  }
  if (config.contains("n")) {
    const Json& v = config.at("n");
    if (!v.is_number_integer() && !v.is_number_unsigned()) invalid("config \"n\" must be an integer");
    long long n = v.get<long long>();
    if (n < 1 || n > 40) invalid("config \"n\" must be in [1, 40]");
    spec.n = static_cast<int>(n);
  }
  if (config.contains("C")) {
    const Json& v = config.at("C");
    if (!v.is_number()) invalid("config \"C\" must be a number");
    spec.C = v.get<double>();
    if (!(spec.C > 0.0) || !std::isfinite(spec.C)) invalid("config \"C\" must be positive");
  }
  if (config.contains("W")) {
    const Json& v = config.at("W");
    if (!v.is_number()) invalid("config \"W\" must be a number");
    spec.W = v.get<double>();
    if (!std::isfinite(spec.W)) invalid("config \"W\" must be finite");
  }
  return spec;
}

std::vector<std::size_t> GenzModel::input_sizes(const Config& config) const {
  return {static_cast<std::size_t>(genz_spec_from_config(config).n)};
}

ParameterList GenzModel::evaluate(const ParameterList& input, const Config& config) const {
  GenzSpec spec = genz_spec_from_config(config);
  return single(Vector::Constant(1, genz_evaluate(input[0], spec)));
}

}  // namespace bridge
