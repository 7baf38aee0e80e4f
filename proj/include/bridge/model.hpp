#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "bridge/protocol.hpp"
#include "bridge/types.hpp"

namespace bridge {

// Pointwise model. Evaluate is the plain forward map; the derivative ops act
// on one (output block, input block) pair:
//   gradient       = sens^T J          (length input_sizes[in_wrt])
//   apply_jacobian = J vec             (length output_sizes[out_wrt])
//   apply_hessian  = H(sens) vec       (length input_sizes[in_wrt1]),
// where H(sens) = sum_k sens_k d2 F_k / dtheta_{in_wrt1} dtheta_{in_wrt2}.
// Unimplemented ops throw BridgeError(UnsupportedFeature); capabilities()
// must advertise exactly what is implemented.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual std::vector<std::size_t> input_sizes(const Config& config) const = 0;
  virtual std::vector<std::size_t> output_sizes(const Config& config) const = 0;
  virtual Capabilities capabilities() const { return {.evaluate = true}; }

  // Serial models are never invoked concurrently by the server.
  virtual bool parallel() const { return true; }

  virtual ParameterList evaluate(const ParameterList& input, const Config& config) const;
  virtual Vector gradient(std::size_t out_wrt, std::size_t in_wrt, const ParameterList& input,
                          const Vector& sens, const Config& config) const;
  virtual Vector apply_jacobian(std::size_t out_wrt, std::size_t in_wrt,
                                const ParameterList& input, const Vector& vec,
                                const Config& config) const;
  virtual Vector apply_hessian(std::size_t out_wrt, std::size_t in_wrt1, std::size_t in_wrt2,
                               const ParameterList& input, const Vector& sens, const Vector& vec,
                               const Config& config) const;

  ModelMeta meta(const Config& config) const;
};

// Name -> model map. Registration order is preserved; duplicate names are a
// programming error, not a wire fault.
class Registry {
 public:
  void add(std::shared_ptr<Model> model);  // throws std::invalid_argument on duplicates
  std::shared_ptr<Model> find(const std::string& name) const;  // throws ModelNotFound
  std::vector<std::string> names() const;
  bool contains(const std::string& name) const;

  // Lock held around every invocation of a model with parallel() == false.
  std::mutex& serial_guard(const std::string& name) const;

 private:
  struct Entry {
    std::shared_ptr<Model> model;
    mutable std::mutex guard;
  };
  std::vector<std::unique_ptr<Entry>> entries_;
};

struct WireResult {
  int status = 200;
  std::string body;
};

// Full wire round trip against a registry: decode, resolve, validate, invoke,
// encode. Every failure maps to exactly one typed error payload; anything a
// model throws beyond BridgeError becomes InternalError.
WireResult handle_request(const Registry& reg, Op op, const std::string& body);

// Minimal demonstration model: doubles its single scalar input. Evaluate only.
class ScaleModel : public Model {
 public:
  explicit ScaleModel(std::string name = "forward", double factor = 2.0)
      : name_(std::move(name)), factor_(factor) {}

  std::string name() const override { return name_; }
  std::vector<std::size_t> input_sizes(const Config&) const override { return {1}; }
  std::vector<std::size_t> output_sizes(const Config&) const override { return {1}; }
  ParameterList evaluate(const ParameterList& input, const Config&) const override;

 private:
  std::string name_;
  double factor_;
};

// Synthetic latency model used by the benchmark harness: echoes its input
// after sleeping config["ms"] milliseconds. The shared counters make overlap
// auditing possible from outside.
class SleepModel : public Model {
 public:
  struct Stats {
    std::atomic<long> in_flight{0};
    std::atomic<long> overlaps{0};
    std::atomic<long> calls{0};
  };

  explicit SleepModel(std::shared_ptr<Stats> stats = nullptr)
      : stats_(stats ? std::move(stats) : std::make_shared<Stats>()) {}

  std::string name() const override { return "sleep"; }
  std::vector<std::size_t> input_sizes(const Config&) const override { return {1}; }
  std::vector<std::size_t> output_sizes(const Config&) const override { return {1}; }
  ParameterList evaluate(const ParameterList& input, const Config& config) const override;

  const std::shared_ptr<Stats>& stats() const { return stats_; }

 private:
  std::shared_ptr<Stats> stats_;
};

// Adds central finite-difference derivatives on top of a base model, with
// step h_i = 1e-6 * max(1, |theta_i|) per coordinate. Ops the base model
// implements natively are delegated. The Jacobian action reuses the same
// per-coordinate differences, so gradient and apply_jacobian stay adjoint-
// consistent to rounding error.
class FiniteDifferenceModel : public Model {
 public:
  explicit FiniteDifferenceModel(std::shared_ptr<Model> base) : base_(std::move(base)) {}

  std::string name() const override { return base_->name(); }
  std::vector<std::size_t> input_sizes(const Config& c) const override {
    return base_->input_sizes(c);
  }
  std::vector<std::size_t> output_sizes(const Config& c) const override {
    return base_->output_sizes(c);
  }
  bool parallel() const override { return base_->parallel(); }
  Capabilities capabilities() const override;

  ParameterList evaluate(const ParameterList& input, const Config& config) const override;
  Vector gradient(std::size_t out_wrt, std::size_t in_wrt, const ParameterList& input,
                  const Vector& sens, const Config& config) const override;
  Vector apply_jacobian(std::size_t out_wrt, std::size_t in_wrt, const ParameterList& input,
                        const Vector& vec, const Config& config) const override;
  Vector apply_hessian(std::size_t out_wrt, std::size_t in_wrt1, std::size_t in_wrt2,
                       const ParameterList& input, const Vector& sens, const Vector& vec,
                       const Config& config) const override;

 private:
  // Columns of the output-block Jacobian, differenced one coordinate at a time.
  std::vector<Vector> jacobian_columns(std::size_t out_wrt, std::size_t in_wrt,
                                       const ParameterList& input, const Config& config) const;

  std::shared_ptr<Model> base_;
};

inline double fd_step(double theta) { return 1e-6 * std::max(1.0, std::abs(theta)); }

}  // namespace bridge
