#pragma once

#include <Eigen/Dense>
#include <array>

#include "bridge/model.hpp"

namespace bridge {

// Cantilever bending beam, (D u'')'' = q on [0, L] with u(0) = u'(0) = 0 and
// u''(L) = u'''(L) = 0, D(x) = r E(x). Discretized on n_nodes equispaced
// nodes by composing second differences of the bending moment M = D u'';
// u'(0) = 0 enters through a ghost displacement node and the free end through
// M_{n-1} = 0 plus a ghost moment node for M'(L) = 0.
struct BeamSpec {
  int n_nodes = 31;
  double r = 0.1;
  double length = 1.0;
  double load = 1e-3;  // constant q
};

// stiffness holds E at every node; entries must be positive.
Eigen::VectorXd beam_solve(const Eigen::VectorXd& stiffness, const BeamSpec& spec = {});

// Piecewise-constant expansion of per-region values onto n_nodes nodes.
// Region j covers nodes [floor(j*n/p), floor((j+1)*n/p)).
Eigen::VectorXd expand_regions(const Eigen::VectorXd& values, int n_nodes);

// Uniform-box input distribution and output nodes of interest for forward
// uncertainty propagation through the beam.
struct BeamPropagation {
  Eigen::Vector3d lo{1.0, 1.0, 1.0};
  Eigen::Vector3d hi{1.05, 1.05, 1.05};
  std::array<int, 2> qoi{10, 25};
};
BeamPropagation beam_propagation_distribution();

// Forward map from lumped region stiffnesses to the full displacement field.
// config {"regions": p} picks the number of lumped regions (default 3);
// p = n_nodes gives per-node stiffness.
class BeamForwardModel : public Model {
 public:
  explicit BeamForwardModel(BeamSpec spec = {}) : spec_(spec) {}

  std::string name() const override { return "beam-forward"; }
  std::vector<std::size_t> input_sizes(const Config& config) const override;
  std::vector<std::size_t> output_sizes(const Config&) const override;
  ParameterList evaluate(const ParameterList& input, const Config& config) const override;

  const BeamSpec& spec() const { return spec_; }

 private:
  int regions_from(const Config& config) const;
  BeamSpec spec_;
};

// Log-posterior of the three region stiffnesses given noiseless synthetic
// displacements observed at every third node. Likelihood is the plain
// Gaussian misfit (no normalization constant); the N(1, 0.1^2) priors enter
// with their full log-densities. Non-positive stiffness yields the
// outside-support sentinel instead of an error.
class BeamPosteriorModel : public Model {
 public:
  explicit BeamPosteriorModel(BeamSpec spec = {});

  std::string name() const override { return "beam-posterior"; }
  std::vector<std::size_t> input_sizes(const Config&) const override { return {3}; }
  std::vector<std::size_t> output_sizes(const Config&) const override { return {1}; }
  ParameterList evaluate(const ParameterList& input, const Config&) const override;

  static Eigen::Vector3d true_stiffness() { return {1.00, 1.02, 0.98}; }
  const Eigen::VectorXd& observations() const { return observations_; }
  const std::vector<int>& observed_nodes() const { return observed_nodes_; }

  static constexpr double kPriorMean = 1.0;
  static constexpr double kPriorSd = 0.1;
  static constexpr double kNoiseVar = 1e-6;

 private:
  BeamSpec spec_;
  std::vector<int> observed_nodes_;
  Eigen::VectorXd observations_;
};

}  // namespace bridge
