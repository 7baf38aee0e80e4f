#include "bridge/protocol.hpp"

#include <cmath>
#include <limits>

namespace bridge {

namespace {

[[noreturn]] void bad(const std::string& msg) {
  throw BridgeError(ErrorType::InvalidInput, msg);
}

double number_from(const Json& j, const char* where) {
  if (!j.is_number()) bad(std::string(where) + " must contain only numbers");
  double v = j.get<double>();
  if (!std::isfinite(v)) bad(std::string(where) + " must be finite");
  return v;
}

// Block indices may be omitted; single-block models then need no boilerplate.
std::size_t index_from(const Json& body, const char* key) {
  if (!body.contains(key)) return 0;
  const Json& j = body.at(key);
  if (!j.is_number_integer() && !j.is_number_unsigned())
    bad(std::string("\"") + key + "\" must be a non-negative integer");
  long long v = j.get<long long>();
  if (v < 0) bad(std::string("\"") + key + "\" must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

Json sizes_to_json(const std::vector<std::size_t>& sizes) {
  Json a = Json::array();
  for (std::size_t s : sizes) a.push_back(s);
  return a;
}

std::vector<std::size_t> sizes_from_json(const Json& j, const char* key) {
  if (!j.is_array())
    throw BridgeError(ErrorType::InternalError, std::string("\"") + key + "\" is not an array");
  std::vector<std::size_t> out;
  out.reserve(j.size());
  for (const Json& e : j) {
    if (!e.is_number_integer() && !e.is_number_unsigned())
      throw BridgeError(ErrorType::InternalError, std::string("\"") + key + "\" holds a non-integer");
    long long v = e.get<long long>();
    if (v < 0)
      throw BridgeError(ErrorType::InternalError, std::string("\"") + key + "\" holds a negative size");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

Json parse_or_invalid(const std::string& body) {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded()) bad("request body is not valid JSON");
  return j;
}

Json parse_or_internal(const std::string& body, const char* what) {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw BridgeError(ErrorType::InternalError, std::string(what) + ": response is not a JSON object");
  return j;
}

const Json& field_or_internal(const Json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end())
    throw BridgeError(ErrorType::InternalError,
                      std::string(what) + ": response lacks \"" + key + "\"");
  return *it;
}

}  // namespace

const char* to_string(ErrorType t) {
  switch (t) {
    case ErrorType::ModelNotFound: return "ModelNotFound";
    case ErrorType::UnsupportedFeature: return "UnsupportedFeature";
    case ErrorType::InvalidInput: return "InvalidInput";
    case ErrorType::InternalError: return "InternalError";
    case ErrorType::NoBackendAvailable: return "NoBackendAvailable";
  }
  return "InternalError";
}

bool error_type_from_string(const std::string& s, ErrorType& out) {
  if (s == "ModelNotFound") out = ErrorType::ModelNotFound;
  else if (s == "UnsupportedFeature") out = ErrorType::UnsupportedFeature;
  else if (s == "InvalidInput") out = ErrorType::InvalidInput;
  else if (s == "InternalError") out = ErrorType::InternalError;
  else if (s == "NoBackendAvailable") out = ErrorType::NoBackendAvailable;
  else return false;
  return true;
}

int http_status(ErrorType t) {
  switch (t) {
    case ErrorType::ModelNotFound:
    case ErrorType::UnsupportedFeature:
    case ErrorType::InvalidInput:
      return 400;
    case ErrorType::NoBackendAvailable:
      return 503;
    case ErrorType::InternalError:
      return 500;
  }
  return 500;
}

bool all_finite(const Vector& v) { return v.allFinite(); }

bool all_finite(const ParameterList& p) {
  for (const Vector& v : p)
    if (!v.allFinite()) return false;
  return true;
}

Vector flatten(const ParameterList& p) {
  Eigen::Index n = 0;
  for (const Vector& v : p) n += v.size();
  Vector out(n);
  Eigen::Index at = 0;
  for (const Vector& v : p) {
    out.segment(at, v.size()) = v;
    at += v.size();
  }
  return out;
}

const char* endpoint(Op op) {
  switch (op) {
    case Op::Info: return "/Info";
    case Op::InputSizes: return "/InputSizes";
    case Op::OutputSizes: return "/OutputSizes";
    case Op::ModelInfo: return "/ModelInfo";
    case Op::Evaluate: return "/Evaluate";
    case Op::Gradient: return "/Gradient";
    case Op::ApplyJacobian: return "/ApplyJacobian";
    case Op::ApplyHessian: return "/ApplyHessian";
  }
  return "/Info";
}

bool op_from_endpoint(const std::string& path, Op& out) {
  static const Op all[] = {Op::Info,     Op::InputSizes, Op::OutputSizes,   Op::ModelInfo,
                           Op::Evaluate, Op::Gradient,   Op::ApplyJacobian, Op::ApplyHessian};
  for (Op op : all) {
    if (path == endpoint(op)) {
      out = op;
      return true;
    }
  }
  return false;
}

bool Capabilities::supports(Op op) const {
  switch (op) {
    case Op::Evaluate: return evaluate;
    case Op::Gradient: return gradient;
    case Op::ApplyJacobian: return apply_jacobian;
    case Op::ApplyHessian: return apply_hessian;
    default: return true;  // metadata ops are always available
  }
}

Json to_json(const Vector& v) {
  if (!v.allFinite())
    throw BridgeError(ErrorType::InvalidInput, "vector contains NaN or Inf");
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) bad("expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const Json& e : j) v[i++] = number_from(e, "vector");
  return v;
}

Json to_json(const ParameterList& p) {
  Json a = Json::array();
  for (const Vector& v : p) a.push_back(to_json(v));
  return a;
}

ParameterList parameter_list_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) bad("expected a non-empty array of vectors");
  ParameterList p;
  p.reserve(j.size());
  for (const Json& e : j) p.push_back(vector_from_json(e));
  return p;
}

Request decode_request(Op op, const std::string& body) {
  Json j = parse_or_invalid(body);
  if (!j.is_object()) bad("request body must be a JSON object");

  Request r;
  r.op = op;

  auto name_it = j.find("name");
  if (name_it == j.end() || !name_it->is_string()) bad("missing or non-string \"name\"");
  r.name = name_it->get<std::string>();

  auto cfg_it = j.find("config");
  if (cfg_it != j.end()) {
    if (!cfg_it->is_object()) bad("\"config\" must be an object");
    r.config = *cfg_it;
  }

  auto input_field = [&]() -> const Json& {
    auto it = j.find("input");
    if (it == j.end()) bad("missing field \"input\"");
    return *it;
  };
  auto vec_field = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end()) bad(std::string("missing field \"") + key + "\"");
    return vector_from_json(*it);
  };

  switch (op) {
    case Op::Info:
    case Op::InputSizes:
    case Op::OutputSizes:
    case Op::ModelInfo:
      break;
    case Op::Evaluate:
      r.input = parameter_list_from_json(input_field());
      break;
    case Op::Gradient:
      r.out_wrt = index_from(j, "outWrt");
      r.in_wrt = index_from(j, "inWrt");
      r.input = parameter_list_from_json(input_field());
      r.sens = vec_field("sens");
      break;
    case Op::ApplyJacobian:
      r.out_wrt = index_from(j, "outWrt");
      r.in_wrt = index_from(j, "inWrt");
      r.input = parameter_list_from_json(input_field());
      r.vec = vec_field("vec");
      break;
    case Op::ApplyHessian:
      r.out_wrt = index_from(j, "outWrt");
      r.in_wrt1 = index_from(j, "inWrt1");
      r.in_wrt2 = index_from(j, "inWrt2");
      r.input = parameter_list_from_json(input_field());
      r.sens = vec_field("sens");
      r.vec = vec_field("vec");
      break;
  }
  return r;
}

std::string encode_request(const Request& r) {
  Json j = Json::object();
  j["name"] = r.name;
  // A null config means "no options" and goes on the wire as {}.
  const Json cfg = r.config.is_null() ? Json::object() : r.config;
  switch (r.op) {
    case Op::Info:
      break;
    case Op::InputSizes:
    case Op::OutputSizes:
      j["config"] = cfg;
      break;
    case Op::ModelInfo:
      break;
    case Op::Evaluate:
      j["input"] = to_json(r.input);
      j["config"] = cfg;
      break;
    case Op::Gradient:
      j["outWrt"] = r.out_wrt;
      j["inWrt"] = r.in_wrt;
      j["input"] = to_json(r.input);
      j["sens"] = to_json(r.sens);
      j["config"] = cfg;
      break;
    case Op::ApplyJacobian:
      j["outWrt"] = r.out_wrt;
      j["inWrt"] = r.in_wrt;
      j["input"] = to_json(r.input);
      j["vec"] = to_json(r.vec);
      j["config"] = cfg;
      break;
    case Op::ApplyHessian:
      j["outWrt"] = r.out_wrt;
      j["inWrt1"] = r.in_wrt1;
      j["inWrt2"] = r.in_wrt2;
      j["input"] = to_json(r.input);
      j["sens"] = to_json(r.sens);
      j["vec"] = to_json(r.vec);
      j["config"] = cfg;
      break;
  }
  return j.dump();
}

void validate_request(const Request& r, const ModelMeta& meta) {
  if (!meta.caps.supports(r.op))
    throw BridgeError(ErrorType::UnsupportedFeature,
                      std::string("model does not support ") + endpoint(r.op) + "");

  bool has_input = r.op == Op::Evaluate || r.op == Op::Gradient ||
                   r.op == Op::ApplyJacobian || r.op == Op::ApplyHessian;
  if (!has_input) return;

  if (r.input.size() != meta.input_sizes.size())
    bad("input holds " + std::to_string(r.input.size()) + " vectors, expected " +
        std::to_string(meta.input_sizes.size()));
  for (std::size_t i = 0; i < r.input.size(); ++i) {
    if (static_cast<std::size_t>(r.input[i].size()) != meta.input_sizes[i])
      bad("input[" + std::to_string(i) + "] has length " +
          std::to_string(r.input[i].size()) + ", expected " +
          std::to_string(meta.input_sizes[i]));
  }

  auto check_out = [&](std::size_t k) {
    if (k >= meta.output_sizes.size()) bad("outWrt out of range");
  };
  auto check_in = [&](std::size_t k, const char* key) {
    if (k >= meta.input_sizes.size()) bad(std::string(key) + " out of range");
  };

  switch (r.op) {
    case Op::Gradient:
      check_out(r.out_wrt);
      check_in(r.in_wrt, "inWrt");
      if (static_cast<std::size_t>(r.sens.size()) != meta.output_sizes[r.out_wrt])
        bad("sens has length " + std::to_string(r.sens.size()) + ", expected " +
            std::to_string(meta.output_sizes[r.out_wrt]));
      break;
    case Op::ApplyJacobian:
      check_out(r.out_wrt);
      check_in(r.in_wrt, "inWrt");
      if (static_cast<std::size_t>(r.vec.size()) != meta.input_sizes[r.in_wrt])
        bad("vec has length " + std::to_string(r.vec.size()) + ", expected " +
            std::to_string(meta.input_sizes[r.in_wrt]));
      break;
    case Op::ApplyHessian:
      check_out(r.out_wrt);
      check_in(r.in_wrt1, "inWrt1");
      check_in(r.in_wrt2, "inWrt2");
      if (static_cast<std::size_t>(r.sens.size()) != meta.output_sizes[r.out_wrt])
        bad("sens has length " + std::to_string(r.sens.size()) + ", expected " +
            std::to_string(meta.output_sizes[r.out_wrt]));
      if (static_cast<std::size_t>(r.vec.size()) != meta.input_sizes[r.in_wrt2])
        bad("vec has length " + std::to_string(r.vec.size()) + ", expected " +
            std::to_string(meta.input_sizes[r.in_wrt2]));
      break;
    default:
      break;
  }
}

std::string encode_info(const std::vector<std::string>& models) {
  Json j = Json::object();
  j["protocolVersion"] = kProtocolVersion;
  j["models"] = models;
  return j.dump();
}

std::string encode_model_info(const Capabilities& c) {
  Json s = Json::object();
  s["Evaluate"] = c.evaluate;
  s["Gradient"] = c.gradient;
  s["ApplyJacobian"] = c.apply_jacobian;
  s["ApplyHessian"] = c.apply_hessian;
  Json j = Json::object();
  j["support"] = s;
  return j.dump();
}

std::string encode_input_sizes(const std::vector<std::size_t>& sizes) {
  Json j = Json::object();
  j["inputSizes"] = sizes_to_json(sizes);
  return j.dump();
}

std::string encode_output_sizes(const std::vector<std::size_t>& sizes) {
  Json j = Json::object();
  j["outputSizes"] = sizes_to_json(sizes);
  return j.dump();
}

std::string encode_output(const ParameterList& out) {
  Json j = Json::object();
  j["output"] = to_json(out);
  return j.dump();
}

std::string encode_output(const Vector& out) {
  Json j = Json::object();
  j["output"] = to_json(out);
  return j.dump();
}

std::string encode_error(ErrorType t, const std::string& message) {
  Json inner = Json::object();
  inner["type"] = to_string(t);
  inner["message"] = message;
  Json j = Json::object();
  j["error"] = inner;
  return j.dump();
}

InfoResponse decode_info(const std::string& body) {
  Json j = parse_or_internal(body, "/Info");
  InfoResponse out;
  const Json& ver = field_or_internal(j, "protocolVersion", "/Info");
  if (!ver.is_string())
    throw BridgeError(ErrorType::InternalError, "/Info: protocolVersion is not a string");
  out.protocol_version = ver.get<std::string>();
  const Json& models = field_or_internal(j, "models", "/Info");
  if (!models.is_array())
    throw BridgeError(ErrorType::InternalError, "/Info: models is not an array");
  for (const Json& m : models) {
    if (!m.is_string())
      throw BridgeError(ErrorType::InternalError, "/Info: model names must be strings");
    out.models.push_back(m.get<std::string>());
  }
  return out;
}

Capabilities decode_model_info(const std::string& body) {
  Json j = parse_or_internal(body, "/ModelInfo");
  const Json& s = field_or_internal(j, "support", "/ModelInfo");
  if (!s.is_object())
    throw BridgeError(ErrorType::InternalError, "/ModelInfo: support is not an object");
  Capabilities c;
  c.evaluate = s.value("Evaluate", false);
  c.gradient = s.value("Gradient", false);
  c.apply_jacobian = s.value("ApplyJacobian", false);
  c.apply_hessian = s.value("ApplyHessian", false);
  return c;
}

std::vector<std::size_t> decode_input_sizes(const std::string& body) {
  Json j = parse_or_internal(body, "/InputSizes");
  return sizes_from_json(field_or_internal(j, "inputSizes", "/InputSizes"), "inputSizes");
}

std::vector<std::size_t> decode_output_sizes(const std::string& body) {
  Json j = parse_or_internal(body, "/OutputSizes");
  return sizes_from_json(field_or_internal(j, "outputSizes", "/OutputSizes"), "outputSizes");
}

ParameterList decode_output_list(const std::string& body) {
  Json j = parse_or_internal(body, "/Evaluate");
  try {
    return parameter_list_from_json(field_or_internal(j, "output", "/Evaluate"));
  } catch (const BridgeError& e) {
    throw BridgeError(ErrorType::InternalError, std::string("/Evaluate: ") + e.what());
  }
}

Vector decode_output_vector(const std::string& body) {
  Json j = parse_or_internal(body, "derivative response");
  try {
    return vector_from_json(field_or_internal(j, "output", "derivative response"));
  } catch (const BridgeError& e) {
    throw BridgeError(ErrorType::InternalError, std::string("derivative response: ") + e.what());
  }
}

bool decode_error(const std::string& body, std::string& type, std::string& message) {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return false;
  auto it = j.find("error");
  if (it == j.end() || !it->is_object()) return false;
  auto t = it->find("type");
  if (t == it->end() || !t->is_string()) return false;
  type = t->get<std::string>();
  auto m = it->find("message");
  message = (m != it->end() && m->is_string()) ? m->get<std::string>() : "";
  return true;
}

void throw_wire_error(int status, const std::string& body) {
  std::string type, message;
  if (decode_error(body, type, message)) {
    ErrorType t;
    if (error_type_from_string(type, t)) throw BridgeError(t, message);
    throw BridgeError(ErrorType::InternalError, "error type \"" + type + "\": " + message);
  }
  throw BridgeError(ErrorType::InternalError,
                    "http status " + std::to_string(status) + " with unrecognized body");
}

}  // namespace bridge
