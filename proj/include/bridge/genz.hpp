#pragma once

#include <Eigen/Dense>
#include <string>

#include "bridge/model.hpp"

namespace bridge {

enum class GenzFamily {
  Oscillatory,
  ProductPeak,
  CornerPeak,
  GaussianPeak,
  C0Continuous,
  Discontinuous,
};

enum class GenzDecay {
  None,
  Quadratic,
  Quartic,
  Exponential,
  SquaredExponential,
};

struct GenzSpec {
  GenzFamily family = GenzFamily::Oscillatory;
  int n = 1;
  GenzDecay decay = GenzDecay::SquaredExponential;
  double C = 1.0;      // sum of the coefficients
  double W = 0.5;      // shift, used as every w_i
  double c_min = 5e-6; // smallest raw coefficient of the exponential decays
};

bool genz_family_from_string(const std::string& s, GenzFamily& out);
bool genz_decay_from_string(const std::string& s, GenzDecay& out);
const char* to_string(GenzFamily f);
const char* to_string(GenzDecay d);

// Raw decay weights are normalized so the coefficients sum to C.
Eigen::VectorXd genz_coefficients(const GenzSpec& spec);

double genz_evaluate(const Eigen::VectorXd& theta, const GenzSpec& spec);

// Closed-form integral over [0,1]^n (for the discontinuous family the
// integrand's support is [0,W]^min(n,2) x [0,1]^(n-2)).
double genz_reference_integral(const GenzSpec& spec);

// Config keys: family, n, decay, C, W.
GenzSpec genz_spec_from_config(const Config& config);

class GenzModel : public Model {
 public:
  std::string name() const override { return "genz"; }
  std::vector<std::size_t> input_sizes(const Config& config) const override;
  std::vector<std::size_t> output_sizes(const Config&) const override { return {1}; }
  ParameterList evaluate(const ParameterList& input, const Config& config) const override;
};

}  // namespace bridge
