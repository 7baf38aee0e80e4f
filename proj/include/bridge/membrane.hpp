#pragma once

#include <Eigen/Dense>

#include "bridge/model.hpp"

namespace bridge {

// Diffusion on the unit square, -div(a grad u) = 10 with u = 0 on the
// boundary. The coefficient is piecewise constant on an 8x8 subdivision
// (input index k = J*8 + I, I along x, J along y). The solve uses a
// cell-centered finite-volume scheme with harmonic face averages on a
// uniform fine grid, and the solution is read out by bilinear interpolation
// at the 13x13 interior lattice x = k/14, y = l/14 (output index l*13 + k).
struct MembraneSpec {
  int coarse = 8;
  int fine = 64;  // fine cells per side; must be a multiple of coarse
  int eval = 13;
  double forcing = 10.0;
};

Eigen::VectorXd membrane_solve(const Eigen::VectorXd& coeff, const MembraneSpec& spec = {});

// Checkerboard 0.8 / 1.25, cell (I, J) low when I+J is even.
Eigen::VectorXd membrane_true_field(int coarse = 8);

class MembraneForwardModel : public Model {
 public:
  explicit MembraneForwardModel(MembraneSpec spec = {}) : spec_(spec) {}

  std::string name() const override { return "membrane-forward"; }
  std::vector<std::size_t> input_sizes(const Config&) const override {
    return {static_cast<std::size_t>(spec_.coarse * spec_.coarse)};
  }
  std::vector<std::size_t> output_sizes(const Config&) const override {
    return {static_cast<std::size_t>(spec_.eval * spec_.eval)};
  }
  ParameterList evaluate(const ParameterList& input, const Config&) const override;

 private:
  MembraneSpec spec_;
};

// Log-posterior of the 64 coefficients: Gaussian misfit against synthetic
// observations from the checkerboard field (noise sd 0.05) plus the
// log-normal-style penalty -sum (ln theta_i)^2 / (2 sigma_pr^2), sigma_pr = 2.
// Both terms are kept free of normalization constants. Non-positive
// coefficients yield the outside-support sentinel.
class MembranePosteriorModel : public Model {
 public:
  explicit MembranePosteriorModel(MembraneSpec spec = {});

  std::string name() const override { return "membrane-posterior"; }
  std::vector<std::size_t> input_sizes(const Config&) const override {
    return {static_cast<std::size_t>(spec_.coarse * spec_.coarse)};
  }
  std::vector<std::size_t> output_sizes(const Config&) const override { return {1}; }
  ParameterList evaluate(const ParameterList& input, const Config&) const override;

  const Eigen::VectorXd& observations() const { return observations_; }

  static constexpr double kNoiseSd = 0.05;
  static constexpr double kPriorSd = 2.0;

 private:
  MembraneSpec spec_;
  Eigen::VectorXd observations_;
};

}  // namespace bridge
