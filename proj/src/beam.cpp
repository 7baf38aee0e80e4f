#include "bridge/beam.hpp"

#include "bridge/densities.hpp"

namespace bridge {

Eigen::VectorXd beam_solve(const Eigen::VectorXd& stiffness, const BeamSpec& spec) {
  const int n = spec.n_nodes;
  if (n < 5) throw BridgeError(ErrorType::InvalidInput, "beam needs at least 5 nodes");
  if (stiffness.size() != n)
    throw BridgeError(ErrorType::InvalidInput, "stiffness length does not match node count");
  for (int i = 0; i < n; ++i)
    if (!(stiffness[i] > 0.0) || !std::isfinite(stiffness[i]))
      throw BridgeError(ErrorType::InvalidInput, "stiffness must be positive everywhere");

  const double h = spec.length / (n - 1);
  const double rhs = std::pow(h, 4) * spec.load;
  Eigen::VectorXd D = spec.r * stiffness;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Constant(n, rhs);

  // Clamped end: u_0 = 0.
  A(0, 0) = 1.0;
  b[0] = 0.0;

  // Moment equation at node 1 with the ghost u_{-1} = u_1 folded in.
  A(1, 0) = -2.0 * D[0] - 2.0 * D[1];
  A(1, 1) = 2.0 * D[0] + 4.0 * D[1] + D[2];
  A(1, 2) = -2.0 * D[1] - 2.0 * D[2];
  A(1, 3) = D[2];

  for (int i = 2; i <= n - 3; ++i) {
    A(i, i - 2) = D[i - 1];
    A(i, i - 1) = -2.0 * D[i - 1] - 2.0 * D[i];
    A(i, i) = D[i - 1] + 4.0 * D[i] + D[i + 1];
    A(i, i + 1) = -2.0 * D[i] - 2.0 * D[i + 1];
    A(i, i + 2) = D[i + 1];
  }

  // Free end: M_{n-1} = 0 removes the last moment, M'(L) = 0 mirrors the
  // ghost moment, leaving 2 M_{n-2} = h^2 q at the tip node.
  A(n - 2, n - 4) = D[n - 3];
  A(n - 2, n - 3) = -2.0 * D[n - 3] - 2.0 * D[n - 2];
  A(n - 2, n - 2) = D[n - 3] + 4.0 * D[n - 2];
  A(n - 2, n - 1) = -2.0 * D[n - 2];

  A(n - 1, n - 3) = 2.0 * D[n - 2];
  A(n - 1, n - 2) = -4.0 * D[n - 2];
  A(n - 1, n - 1) = 2.0 * D[n - 2];

  return A.partialPivLu().solve(b);
}

Eigen::VectorXd expand_regions(const Eigen::VectorXd& values, int n_nodes) {
  const int p = static_cast<int>(values.size());
  if (p < 1 || p > n_nodes)
    throw BridgeError(ErrorType::InvalidInput, "region count must be in [1, node count]");
  Eigen::VectorXd out(n_nodes);
  for (int j = 0; j < p; ++j) {
    int lo = static_cast<int>(static_cast<long long>(j) * n_nodes / p);
    int hi = static_cast<int>(static_cast<long long>(j + 1) * n_nodes / p);
    for (int i = lo; i < hi; ++i) out[i] = values[j];
  }
  return out;
}

BeamPropagation beam_propagation_distribution() { return {}; }

int BeamForwardModel::regions_from(const Config& config) const {
  int p = 3;
  if (config.contains("regions")) {
    const Json& v = config.at("regions");
    if (!v.is_number_integer() && !v.is_number_unsigned())
      throw BridgeError(ErrorType::InvalidInput, "config \"regions\" must be an integer");
    long long r = v.get<long long>();
    if (r < 1 || r > spec_.n_nodes)
      throw BridgeError(ErrorType::InvalidInput,
                        "config \"regions\" must be in [1, " + std::to_string(spec_.n_nodes) + "]");
    p = static_cast<int>(r);
  }
  return p;
}

std::vector<std::size_t> BeamForwardModel::input_sizes(const Config& config) const {
  return {static_cast<std::size_t>(regions_from(config))};
}

std::vector<std::size_t> BeamForwardModel::output_sizes(const Config&) const {
  return {static_cast<std::size_t>(spec_.n_nodes)};
}

ParameterList BeamForwardModel::evaluate(const ParameterList& input, const Config& config) const {
  regions_from(config);  // validates the key even though the size is implied
  Eigen::VectorXd field = expand_regions(input[0], spec_.n_nodes);
  return single(beam_solve(field, spec_));
}

BeamPosteriorModel::BeamPosteriorModel(BeamSpec spec) : spec_(spec) {
  for (int i = 0; i < spec_.n_nodes; i += 3) observed_nodes_.push_back(i);
  Eigen::VectorXd u = beam_solve(expand_regions(true_stiffness(), spec_.n_nodes), spec_);
  observations_.resize(static_cast<Eigen::Index>(observed_nodes_.size()));
  for (std::size_t k = 0; k < observed_nodes_.size(); ++k)
    observations_[static_cast<Eigen::Index>(k)] = u[observed_nodes_[k]];
}

ParameterList BeamPosteriorModel::evaluate(const ParameterList& input, const Config&) const {
  const Vector& m = input[0];
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (!(m[i] > 0.0)) return single(Vector::Constant(1, kLogFloor));

  Eigen::VectorXd u = beam_solve(expand_regions(m, spec_.n_nodes), spec_);
  double misfit = 0.0;
  for (std::size_t k = 0; k < observed_nodes_.size(); ++k) {
    double d = observations_[static_cast<Eigen::Index>(k)] - u[observed_nodes_[k]];
    misfit += d * d;
  }
  double value = -0.5 * misfit / kNoiseVar;
  for (Eigen::Index i = 0; i < m.size(); ++i)
    value += normal_logpdf(m[i], kPriorMean, kPriorSd);
  return single(Vector::Constant(1, clamp_log(value)));
}

}  // namespace bridge
