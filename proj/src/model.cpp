#include "bridge/model.hpp"

#include <chrono>
#include <stdexcept>
#include <thread>

namespace bridge {

namespace {

[[noreturn]] void unsupported(const std::string& model, const char* op) {
  throw BridgeError(ErrorType::UnsupportedFeature,
                    "model \"" + model + "\" does not support " + op);
}

}  // namespace

ParameterList Model::evaluate(const ParameterList&, const Config&) const {
  unsupported(name(), "Evaluate");
}

Vector Model::gradient(std::size_t, std::size_t, const ParameterList&, const Vector&,
                       const Config&) const {
  unsupported(name(), "Gradient");
}

Vector Model::apply_jacobian(std::size_t, std::size_t, const ParameterList&, const Vector&,
                             const Config&) const {
  unsupported(name(), "ApplyJacobian");
}

Vector Model::apply_hessian(std::size_t, std::size_t, std::size_t, const ParameterList&,
                            const Vector&, const Vector&, const Config&) const {
  unsupported(name(), "ApplyHessian");
}

ModelMeta Model::meta(const Config& config) const {
  return ModelMeta{input_sizes(config), output_sizes(config), capabilities()};
}

void Registry::add(std::shared_ptr<Model> model) {
  if (!model) throw std::invalid_argument("null model");
  for (const auto& e : entries_)
    if (e->model->name() == model->name())
      throw std::invalid_argument("duplicate model name \"" + model->name() + "\"");
  auto entry = std::make_unique<Entry>();
  entry->model = std::move(model);
  entries_.push_back(std::move(entry));
}

std::shared_ptr<Model> Registry::find(const std::string& name) const {
  for (const auto& e : entries_)
    if (e->model->name() == name) return e->model;
  throw BridgeError(ErrorType::ModelNotFound, "no model named \"" + name + "\"");
}

std::vector<std::string> Registry::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e->model->name());
  return out;
}

bool Registry::contains(const std::string& name) const {
  for (const auto& e : entries_)
    if (e->model->name() == name) return true;
  return false;
}

std::mutex& Registry::serial_guard(const std::string& name) const {
  for (const auto& e : entries_)
    if (e->model->name() == name) return e->guard;
  throw BridgeError(ErrorType::ModelNotFound, "no model named \"" + name + "\"");
}

WireResult handle_request(const Registry& reg, Op op, const std::string& body) {
  try {
    if (op == Op::Info) return {200, encode_info(reg.names())};

    Request r = decode_request(op, body);
    std::shared_ptr<Model> model = reg.find(r.name);

    if (op == Op::ModelInfo) return {200, encode_model_info(model->capabilities())};

    ModelMeta meta = model->meta(r.config);
    if (op == Op::InputSizes) return {200, encode_input_sizes(meta.input_sizes)};
    if (op == Op::OutputSizes) return {200, encode_output_sizes(meta.output_sizes)};

    validate_request(r, meta);

    auto invoke = [&]() -> std::string {
      switch (op) {
        case Op::Evaluate: {
          ParameterList out = model->evaluate(r.input, r.config);
          if (out.size() != meta.output_sizes.size())
            throw BridgeError(ErrorType::InternalError,
                              "model returned a wrong number of output vectors");
          for (std::size_t i = 0; i < out.size(); ++i)
            if (static_cast<std::size_t>(out[i].size()) != meta.output_sizes[i])
              throw BridgeError(ErrorType::InternalError,
                                "model returned output[" + std::to_string(i) +
                                    "] with a wrong length");
          return encode_output(out);
        }
        case Op::Gradient: {
          Vector g = model->gradient(r.out_wrt, r.in_wrt, r.input, r.sens, r.config);
          if (static_cast<std::size_t>(g.size()) != meta.input_sizes[r.in_wrt])
            throw BridgeError(ErrorType::InternalError, "gradient has a wrong length");
          return encode_output(g);
        }
        case Op::ApplyJacobian: {
          Vector y = model->apply_jacobian(r.out_wrt, r.in_wrt, r.input, r.vec, r.config);
          if (static_cast<std::size_t>(y.size()) != meta.output_sizes[r.out_wrt])
            throw BridgeError(ErrorType::InternalError, "jacobian action has a wrong length");
          return encode_output(y);
        }
        case Op::ApplyHessian: {
          Vector y = model->apply_hessian(r.out_wrt, r.in_wrt1, r.in_wrt2, r.input, r.sens,
                                          r.vec, r.config);
          if (static_cast<std::size_t>(y.size()) != meta.input_sizes[r.in_wrt1])
            throw BridgeError(ErrorType::InternalError, "hessian action has a wrong length");
          return encode_output(y);
        }
        default:
          throw BridgeError(ErrorType::InternalError, "unhandled operation");
      }
    };

    std::string payload;
    if (model->parallel()) {
      payload = invoke();
    } else {
      std::lock_guard<std::mutex> hold(reg.serial_guard(r.name));
      payload = invoke();
    }
    return {200, payload};
  } catch (const BridgeError& e) {
    return {http_status(e.type()), encode_error(e.type(), e.what())};
  } catch (const std::exception& e) {
    return {500, encode_error(ErrorType::InternalError, e.what())};
  } catch (...) {
    return {500, encode_error(ErrorType::InternalError, "unknown failure inside model")};
  }
}

ParameterList ScaleModel::evaluate(const ParameterList& input, const Config&) const {
  return single(factor_ * input[0]);
}

ParameterList SleepModel::evaluate(const ParameterList& input, const Config& config) const {
  double ms = 0.0;
  if (config.contains("ms")) {
    const Json& v = config.at("ms");
    if (!v.is_number() || v.get<double>() < 0)
      throw BridgeError(ErrorType::InvalidInput, "config \"ms\" must be a number >= 0");
    ms = v.get<double>();
  }
  long before = stats_->in_flight.fetch_add(1);
  if (before > 0) stats_->overlaps.fetch_add(1);
  if (ms > 0)
    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
  stats_->in_flight.fetch_sub(1);
  stats_->calls.fetch_add(1);
  return input;
}

Capabilities FiniteDifferenceModel::capabilities() const {
  Capabilities c = base_->capabilities();
  c.gradient = true;
  c.apply_jacobian = true;
  c.apply_hessian = true;
  return c;
}

ParameterList FiniteDifferenceModel::evaluate(const ParameterList& input,
                                              const Config& config) const {
  return base_->evaluate(input, config);
}

std::vector<Vector> FiniteDifferenceModel::jacobian_columns(std::size_t out_wrt,
                                                            std::size_t in_wrt,
                                                            const ParameterList& input,
                                                            const Config& config) const {
  std::vector<Vector> cols;
  const Vector& block = input[in_wrt];
  cols.reserve(block.size());
  for (Eigen::Index i = 0; i < block.size(); ++i) {
    double h = fd_step(block[i]);
    ParameterList plus = input;
    ParameterList minus = input;
    plus[in_wrt][i] += h;
    minus[in_wrt][i] -= h;
    Vector fp = base_->evaluate(plus, config)[out_wrt];
    Vector fm = base_->evaluate(minus, config)[out_wrt];
    cols.push_back((fp - fm) / (2.0 * h));
  }
  return cols;
}

Vector FiniteDifferenceModel::gradient(std::size_t out_wrt, std::size_t in_wrt,
                                       const ParameterList& input, const Vector& sens,
                                       const Config& config) const {
  if (base_->capabilities().gradient)
    return base_->gradient(out_wrt, in_wrt, input, sens, config);
  std::vector<Vector> cols = jacobian_columns(out_wrt, in_wrt, input, config);
  Vector g(input[in_wrt].size());
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = sens.dot(cols[i]);
  return g;
}

Vector FiniteDifferenceModel::apply_jacobian(std::size_t out_wrt, std::size_t in_wrt,
                                             const ParameterList& input, const Vector& vec,
                                             const Config& config) const {
  if (base_->capabilities().apply_jacobian)
    return base_->apply_jacobian(out_wrt, in_wrt, input, vec, config);
  std::vector<Vector> cols = jacobian_columns(out_wrt, in_wrt, input, config);
  Vector y = Vector::Zero(base_->output_sizes(config)[out_wrt]);
  for (Eigen::Index i = 0; i < vec.size(); ++i) y += vec[i] * cols[i];
  return y;
}

Vector FiniteDifferenceModel::apply_hessian(std::size_t out_wrt, std::size_t in_wrt1,
                                            std::size_t in_wrt2, const ParameterList& input,
                                            const Vector& sens, const Vector& vec,
                                            const Config& config) const {
  if (base_->capabilities().apply_hessian)
    return base_->apply_hessian(out_wrt, in_wrt1, in_wrt2, input, sens, vec, config);

  Eigen::Index n1 = input[in_wrt1].size();
  double vmax = vec.size() ? vec.cwiseAbs().maxCoeff() : 0.0;
  if (vmax == 0.0) return Vector::Zero(n1);
  // Directional step along vec scaled so its largest coordinate moves by the
  // per-coordinate rule's h.
  double eps = 1e-6 * std::max(1.0, input[in_wrt2].cwiseAbs().maxCoeff()) / vmax;

  if (base_->capabilities().gradient) {
    // Difference the native gradient along vec.
    ParameterList plus = input;
    ParameterList minus = input;
    plus[in_wrt2] += eps * vec;
    minus[in_wrt2] -= eps * vec;
    Vector gp = base_->gradient(out_wrt, in_wrt1, plus, sens, config);
    Vector gm = base_->gradient(out_wrt, in_wrt1, minus, sens, config);
    return (gp - gm) / (2.0 * eps);
  }

  // Four-point mixed differences of phi = sens . F on (coordinate, direction).
  auto phi = [&](const ParameterList& at) {
    return sens.dot(base_->evaluate(at, config)[out_wrt]);
  };
  Vector out(n1);
  for (Eigen::Index i = 0; i < n1; ++i) {
    double h = fd_step(input[in_wrt1][i]);
    ParameterList pp = input, pm = input, mp = input, mm = input;
    pp[in_wrt1][i] += h;
    pm[in_wrt1][i] += h;
    mp[in_wrt1][i] -= h;
    mm[in_wrt1][i] -= h;
    pp[in_wrt2] += eps * vec;
    pm[in_wrt2] -= eps * vec;
    mp[in_wrt2] += eps * vec;
    mm[in_wrt2] -= eps * vec;
    out[i] = (phi(pp) - phi(pm) - phi(mp) + phi(mm)) / (4.0 * h * eps);
  }
  return out;
}

}  // namespace bridge
