#pragma once

#include <Eigen/Dense>
#include <string>

#include "bridge/model.hpp"

namespace bridge {

// Periodic 1-D blur: Gaussian kernel (sd 2 cells, truncated at +-6 cells),
// weights normalized to sum 1.
struct DeconvSpec {
  int n = 128;
  double kernel_sd = 2.0;
  int kernel_halfwidth = 6;
  double noise_sd = 0.01;
};

Eigen::VectorXd deconv_kernel(const DeconvSpec& spec = {});
Eigen::VectorXd deconv_apply(const Eigen::VectorXd& x, const DeconvSpec& spec = {});

// Documented piecewise-constant ground truth: 1 on cells [32, 64),
// 0.5 on [80, 104), 0 elsewhere.
Eigen::VectorXd deconv_true_signal(const DeconvSpec& spec = {});

// Synthetic observations b = A x_true + noise_sd * eps, eps drawn from the
// counter generator with (seed, stream) = (424242, 1).
Eigen::VectorXd deconv_data(const DeconvSpec& spec = {});

enum class DeconvPrior { Gaussian, GMRF, LMRF, CMRF };
bool deconv_prior_from_string(const std::string& s, DeconvPrior& out);
const char* to_string(DeconvPrior p);

// Log prior densities up to additive constants; differences are periodic,
// d_i = x_i - x_{i-1} with x_{-1} = x_{n-1}.
double deconv_prior_logpdf(const Eigen::VectorXd& x, DeconvPrior prior, double delta);
// Defined for Gaussian and GMRF only.
Eigen::VectorXd deconv_prior_grad(const Eigen::VectorXd& x, DeconvPrior prior, double delta);

double deconv_posterior_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& data,
                               DeconvPrior prior, double delta, const DeconvSpec& spec = {});

class DeconvForwardModel : public Model {
 public:
  explicit DeconvForwardModel(DeconvSpec spec = {}) : spec_(spec) {}

  std::string name() const override { return "deconv-forward"; }
  std::vector<std::size_t> input_sizes(const Config&) const override {
    return {static_cast<std::size_t>(spec_.n)};
  }
  std::vector<std::size_t> output_sizes(const Config&) const override {
    return {static_cast<std::size_t>(spec_.n)};
  }
  ParameterList evaluate(const ParameterList& input, const Config&) const override;

 private:
  DeconvSpec spec_;
};

// config keys: "prior" in {Gaussian, GMRF, LMRF, CMRF} (default Gaussian),
// "delta" > 0 (default 0.01). Gradient is available for the two smooth
// priors; the others answer UnsupportedFeature.
class DeconvPosteriorModel : public Model {
 public:
  explicit DeconvPosteriorModel(DeconvSpec spec = {});

  std::string name() const override { return "deconv-posterior"; }
  std::vector<std::size_t> input_sizes(const Config&) const override {
    return {static_cast<std::size_t>(spec_.n)};
  }
  std::vector<std::size_t> output_sizes(const Config&) const override { return {1}; }
  Capabilities capabilities() const override { return {.evaluate = true, .gradient = true}; }
  ParameterList evaluate(const ParameterList& input, const Config& config) const override;
  Vector gradient(std::size_t, std::size_t, const ParameterList& input, const Vector& sens,
                  const Config& config) const override;

  const Eigen::VectorXd& data() const { return data_; }

 private:
  struct Choice {
    DeconvPrior prior;
    double delta;
  };
  Choice choice_from(const Config& config) const;

  DeconvSpec spec_;
  Eigen::VectorXd data_;
};

}  // namespace bridge
