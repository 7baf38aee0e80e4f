#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bridge/error.hpp"
#include "bridge/types.hpp"

namespace bridge {

inline constexpr const char* kProtocolVersion = "1.0";

// Wire operations. Info is the only GET; the rest are POSTs with JSON bodies.
enum class Op {
  Info,
  InputSizes,
  OutputSizes,
  ModelInfo,
  Evaluate,
  Gradient,
  ApplyJacobian,
  ApplyHessian,
};

const char* endpoint(Op op);  // e.g. "/Evaluate"
bool op_from_endpoint(const std::string& path, Op& out);

struct Capabilities {
  bool evaluate = false;
  bool gradient = false;
  bool apply_jacobian = false;
  bool apply_hessian = false;

  bool supports(Op op) const;
  bool operator==(const Capabilities&) const = default;
};

// Sizes and capabilities a request is validated against. Sizes are those for
// the request's config.
struct ModelMeta {
  std::vector<std::size_t> input_sizes;
  std::vector<std::size_t> output_sizes;
  Capabilities caps;
};

// Decoded body of a POST request.
struct Request {
  Op op = Op::Evaluate;
  std::string name;
  ParameterList input;       // Evaluate, Gradient, ApplyJacobian, ApplyHessian
  Vector sens;               // Gradient, ApplyHessian
  Vector vec;                // ApplyJacobian, ApplyHessian
  std::size_t out_wrt = 0;   // derivative ops
  std::size_t in_wrt = 0;    // Gradient, ApplyJacobian
  std::size_t in_wrt1 = 0;   // ApplyHessian
  std::size_t in_wrt2 = 0;   // ApplyHessian
  Config config = Config::object();
};

// Throws BridgeError(InvalidInput) on malformed bodies; NaN/Inf never pass.
Request decode_request(Op op, const std::string& body);
std::string encode_request(const Request& r);

// Throws BridgeError(UnsupportedFeature | InvalidInput) when the request
// violates the model's declared capabilities, dimensions or index ranges.
void validate_request(const Request& r, const ModelMeta& meta);

// Response encoders. ParameterLists containing NaN/Inf are rejected
// (InvalidInput) so the wire only ever carries finite numbers.
std::string encode_info(const std::vector<std::string>& models);
std::string encode_model_info(const Capabilities& c);
std::string encode_input_sizes(const std::vector<std::size_t>& sizes);
std::string encode_output_sizes(const std::vector<std::size_t>& sizes);
std::string encode_output(const ParameterList& out);  // {"output":[[...],...]}
std::string encode_output(const Vector& out);         // {"output":[...]}
std::string encode_error(ErrorType t, const std::string& message);

// Response decoders (client side). Throw BridgeError(InternalError) when the
// peer's answer does not match the schema.
struct InfoResponse {
  std::string protocol_version;
  std::vector<std::string> models;
};
InfoResponse decode_info(const std::string& body);
Capabilities decode_model_info(const std::string& body);
std::vector<std::size_t> decode_input_sizes(const std::string& body);
std::vector<std::size_t> decode_output_sizes(const std::string& body);
ParameterList decode_output_list(const std::string& body);
Vector decode_output_vector(const std::string& body);

// Returns false unless the body is a well-formed error payload.
bool decode_error(const std::string& body, std::string& type, std::string& message);

// Rethrows an error payload as a BridgeError; unknown type strings map to
// InternalError so a client never silently drops a fault.
[[noreturn]] void throw_wire_error(int status, const std::string& body);

// JSON <-> ParameterList helpers shared by the codecs.
Json to_json(const ParameterList& p);
ParameterList parameter_list_from_json(const Json& j);  // throws InvalidInput
Json to_json(const Vector& v);
Vector vector_from_json(const Json& j);  // throws InvalidInput

}  // namespace bridge
