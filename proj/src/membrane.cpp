#include "bridge/membrane.hpp"

#include <Eigen/Sparse>
#include <cmath>
#include <vector>

#include "bridge/densities.hpp"

namespace bridge {

namespace {

// Fine-grid coefficient lookup: cell (i, j) inherits the coarse cell it sits in.
struct CoeffGrid {
  const Eigen::VectorXd& a;
  int coarse;
  int per;  // fine cells per coarse cell
  double operator()(int i, int j) const {
    return a[(j / per) * coarse + (i / per)];
  }
};

}  // namespace

Eigen::VectorXd membrane_solve(const Eigen::VectorXd& coeff, const MembraneSpec& spec) {
  const int nc = spec.coarse;
  const int n = spec.fine;
  if (n % nc != 0)
    throw BridgeError(ErrorType::InvalidInput, "fine grid must be a multiple of the coarse grid");
  if (coeff.size() != nc * nc)
    throw BridgeError(ErrorType::InvalidInput, "coefficient length does not match the subdivision");
  for (Eigen::Index k = 0; k < coeff.size(); ++k)
    if (!(coeff[k] > 0.0) || !std::isfinite(coeff[k]))
      throw BridgeError(ErrorType::InvalidInput, "coefficients must be positive everywhere");

  CoeffGrid a{coeff, nc, n / nc};
  const double h = 1.0 / n;
  const int unknowns = n * n;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(unknowns) * 5);
  Eigen::VectorXd b = Eigen::VectorXd::Constant(unknowns, spec.forcing * h * h);

  auto idx = [n](int i, int j) { return j * n + i; };

  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      double diag = 0.0;
      double ac = a(i, j);
      auto face = [&](int ni, int nj) {
        if (ni < 0 || nj < 0 || ni >= n || nj >= n) {
          // Dirichlet wall at distance h/2.
          diag += 2.0 * ac;
        } else {
          double an = a(ni, nj);
          double t = 2.0 * ac * an / (ac + an);
          diag += t;
          trips.emplace_back(idx(i, j), idx(ni, nj), -t);
        }
      };
      face(i - 1, j);
      face(i + 1, j);
      face(i, j - 1);
      face(i, j + 1);
      trips.emplace_back(idx(i, j), idx(i, j), diag);
    }
  }

  Eigen::SparseMatrix<double> A(unknowns, unknowns);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success)
    throw BridgeError(ErrorType::InternalError, "factorization of the diffusion operator failed");
  Eigen::VectorXd u = solver.solve(b);
  // One refinement pass keeps grid-symmetry mismatches near rounding level.
  u += solver.solve(b - A * u);

  const int m = spec.eval;
  Eigen::VectorXd out(m * m);
  for (int l = 0; l < m; ++l) {
    double y = static_cast<double>(l + 1) / (m + 1);
    double gy = y / h - 0.5;
    int j0 = std::min(std::max(static_cast<int>(std::floor(gy)), 0), n - 2);
    double wy = gy - j0;
    for (int k = 0; k < m; ++k) {
      double x = static_cast<double>(k + 1) / (m + 1);
      double gx = x / h - 0.5;
      int i0 = std::min(std::max(static_cast<int>(std::floor(gx)), 0), n - 2);
      double wx = gx - i0;
      out[l * m + k] = (1 - wx) * (1 - wy) * u[idx(i0, j0)] +
                       wx * (1 - wy) * u[idx(i0 + 1, j0)] +
                       (1 - wx) * wy * u[idx(i0, j0 + 1)] +
                       wx * wy * u[idx(i0 + 1, j0 + 1)];
    }
  }
  return out;
}

Eigen::VectorXd membrane_true_field(int coarse) {
  Eigen::VectorXd a(coarse * coarse);
  for (int J = 0; J < coarse; ++J)
    for (int I = 0; I < coarse; ++I) a[J * coarse + I] = ((I + J) % 2 == 0) ? 0.8 : 1.25;
  return a;
}

ParameterList MembraneForwardModel::evaluate(const ParameterList& input, const Config&) const {
  return single(membrane_solve(input[0], spec_));
}

MembranePosteriorModel::MembranePosteriorModel(MembraneSpec spec) : spec_(spec) {
  observations_ = membrane_solve(membrane_true_field(spec_.coarse), spec_);
}

ParameterList MembranePosteriorModel::evaluate(const ParameterList& input, const Config&) const {
  const Vector& theta = input[0];
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (!(theta[i] > 0.0)) return single(Vector::Constant(1, kLogFloor));

  Eigen::VectorXd z = membrane_solve(theta, spec_);
  double value = -(observations_ - z).squaredNorm() / (2.0 * kNoiseSd * kNoiseSd);
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    double lt = std::log(theta[i]);
    value -= lt * lt / (2.0 * kPriorSd * kPriorSd);
  }
  return single(Vector::Constant(1, clamp_log(value)));
}

}  // namespace bridge
