#include "bridge/samplers.hpp"

#include <chrono>
#include <cmath>

#include "bridge/client.hpp"

namespace bridge {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t model_input_dim(const Model& model, const Config& config) {
  auto sizes = model.input_sizes(config);
  if (sizes.size() != 1)
    throw BridgeError(ErrorType::InvalidInput,
                      "sampler needs a single-block input, model \"" + model.name() + "\" has " +
                          std::to_string(sizes.size()) + " blocks");
  return sizes[0];
}

Vector slice(const Vector& flat, const std::vector<std::size_t>& qoi) {
  if (qoi.empty()) return flat;
  Vector out(qoi.size());
  for (std::size_t k = 0; k < qoi.size(); ++k) out[static_cast<Eigen::Index>(k)] = flat[static_cast<Eigen::Index>(qoi[k])];
  return out;
}

}  // namespace

McResult mc_estimate(const Model& model, const McJob& job) {
  const auto t0 = Clock::now();
  if (job.concurrency < 1)
    throw BridgeError(ErrorType::InvalidInput, "concurrency must be >= 1");
  const std::size_t dim = model_input_dim(model, job.config);

  std::vector<ParameterList> inputs;
  if (const auto* box = std::get_if<BoxDistribution>(&job.dist)) {
    if (box->lo.size() != box->hi.size() || static_cast<std::size_t>(box->lo.size()) != dim)
      throw BridgeError(ErrorType::InvalidInput,
                        "box bounds must both have the model's input length " +
                            std::to_string(dim));
    for (Eigen::Index j = 0; j < box->lo.size(); ++j) {
      if (!std::isfinite(box->lo[j]) || !std::isfinite(box->hi[j]) || box->lo[j] > box->hi[j])
        throw BridgeError(ErrorType::InvalidInput, "box bounds must be finite with low <= high");
    }
    if (job.n < 1) throw BridgeError(ErrorType::InvalidInput, "sample count must be >= 1");
    CounterRng rng{job.seed, 0};
    inputs.reserve(job.n);
    for (std::size_t i = 0; i < job.n; ++i) {
      Vector x(dim);
      for (std::size_t j = 0; j < dim; ++j)
        x[static_cast<Eigen::Index>(j)] =
            rng.uniform(i * dim + j, box->lo[static_cast<Eigen::Index>(j)],
                        box->hi[static_cast<Eigen::Index>(j)]);
      inputs.push_back(single(std::move(x)));
    }
  } else {
    const auto& fixed = std::get<FixedList>(job.dist);
    if (fixed.points.empty())
      throw BridgeError(ErrorType::InvalidInput, "fixed input list must not be empty");
    inputs.reserve(fixed.points.size());
    for (const Vector& p : fixed.points) {
      if (static_cast<std::size_t>(p.size()) != dim)
        throw BridgeError(ErrorType::InvalidInput,
                          "fixed input length " + std::to_string(p.size()) +
                              " does not match the model's input length " + std::to_string(dim));
      inputs.push_back(single(p));
    }
  }
  const std::size_t n = inputs.size();

  std::size_t total_out = 0;
  for (std::size_t s : model.output_sizes(job.config)) total_out += s;
  for (std::size_t q : job.qoi)
    if (q >= total_out)
      throw BridgeError(ErrorType::InvalidInput,
                        "qoi index " + std::to_string(q) + " out of range for output length " +
                            std::to_string(total_out));

  std::vector<ParameterList> raw = evaluate_many(model, inputs, job.config, job.concurrency);

  const std::size_t m = job.qoi.empty() ? total_out : job.qoi.size();
  std::vector<Vector> flats(n);
  for (std::size_t i = 0; i < n; ++i) flats[i] = slice(flatten(raw[i]), job.qoi);

  McResult r;
  r.n = n;
  r.mean = Vector::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i) r.mean += flats[i];
  r.mean /= static_cast<double>(n);

  r.standard_error = Vector::Zero(static_cast<Eigen::Index>(m));
  if (n > 1) {
    Vector ss = Vector::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < n; ++i) {
      Vector d = flats[i] - r.mean;
      ss += d.cwiseProduct(d);
    }
    r.standard_error = (ss / (static_cast<double>(n - 1) * static_cast<double>(n))).cwiseSqrt();
  }

  if (job.keep_samples) {
    r.inputs.reserve(n);
    for (auto& in : inputs) r.inputs.push_back(std::move(in[0]));
    r.outputs = std::move(flats);
  }
  r.wall_s = seconds_since(t0);
  return r;
}

namespace {

double log_density_at(const Model& target, const Vector& x, const Config& config) {
  Vector out = flatten(target.evaluate(single(x), config));
  if (out.size() != 1)
    throw BridgeError(ErrorType::InvalidInput, "target model \"" + target.name() +
                                                   "\" must return a single scalar log-density");
  return out[0];
}

}  // namespace

MhResult mh_chain(const Model& target, const MhOptions& options, const ProposalFn& propose) {
  const auto t0 = Clock::now();
  const std::size_t dim = static_cast<std::size_t>(options.x0.size());
  if (dim == 0) throw BridgeError(ErrorType::InvalidInput, "x0 must be non-empty");
  if (!all_finite(options.x0))
    throw BridgeError(ErrorType::InvalidInput, "x0 must be finite");

  double ell = log_density_at(target, options.x0, options.config);
  if (ell <= kOutsideSupport)
    throw BridgeError(ErrorType::InvalidInput, "x0 lies outside the target's support");

  CounterRng rng{options.seed, 0};
  Vector x = options.x0;

  MhResult r;
  r.proposed = options.steps;
  Vector mean = Vector::Zero(options.x0.size());
  Vector m2 = Vector::Zero(options.x0.size());
  std::size_t count = 0;
  auto account = [&](const Vector& state, double value) {
    ++count;
    Vector d = state - mean;
    mean += d / static_cast<double>(count);
    m2 += d.cwiseProduct(state - mean);
    if (options.keep_samples) {
      r.samples.push_back(state);
      r.log_density.push_back(value);
    }
  };
  account(x, ell);

  for (std::size_t t = 0; t < options.steps; ++t) {
    const std::uint64_t slot = t * (dim + 1);
    Vector proposal = propose(x, t);
    double u = rng.uniform(2 * (slot + dim));
    double ell_new = log_density_at(target, proposal, options.config);
    if (ell_new > kOutsideSupport && std::log(u) < ell_new - ell) {
      x = proposal;
      ell = ell_new;
      ++r.accepted;
    }
    account(x, ell);
  }

  r.acceptance_rate =
      r.proposed == 0 ? 0.0 : static_cast<double>(r.accepted) / static_cast<double>(r.proposed);
  r.mean = mean;
  r.variance = count > 1 ? Vector((m2 / static_cast<double>(count - 1)).eval())
                         : Vector(Vector::Zero(options.x0.size()));
  r.wall_s = seconds_since(t0);
  return r;
}

MhResult mh_chain(const Model& target, const MhOptions& options) {
  const std::size_t dim = static_cast<std::size_t>(options.x0.size());
  if (options.sigma.size() != options.x0.size())
    throw BridgeError(ErrorType::InvalidInput, "sigma must have the same length as x0");
  for (Eigen::Index j = 0; j < options.sigma.size(); ++j)
    if (!std::isfinite(options.sigma[j]) || options.sigma[j] < 0)
      throw BridgeError(ErrorType::InvalidInput, "sigma must be finite and non-negative");

  CounterRng rng{options.seed, 0};
  auto propose = [&rng, dim, &options](const Vector& x, std::size_t t) {
    const std::uint64_t slot = t * (dim + 1);
    Vector p = x;
    for (std::size_t j = 0; j < dim; ++j)
      p[static_cast<Eigen::Index>(j)] +=
          options.sigma[static_cast<Eigen::Index>(j)] * rng.normal(slot + j);
    return p;
  };
  return mh_chain(target, options, propose);
}

}  // namespace bridge
