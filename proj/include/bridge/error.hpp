#pragma once

#include <stdexcept>
#include <string>

namespace bridge {

// Fault categories carried in wire error payloads. The first four are the
// model protocol's closed set; NoBackendAvailable is emitted only by the
// load balancer when a pool has no healthy member.
enum class ErrorType {
  ModelNotFound,
  UnsupportedFeature,
  InvalidInput,
  InternalError,
  NoBackendAvailable,
};

const char* to_string(ErrorType t);
bool error_type_from_string(const std::string& s, ErrorType& out);

// Client faults map to 400, server faults to 500, pool exhaustion to 503.
int http_status(ErrorType t);

class BridgeError : public std::runtime_error {
 public:
  BridgeError(ErrorType type, const std::string& message)
      : std::runtime_error(message), type_(type) {}
  ErrorType type() const { return type_; }

 private:
  ErrorType type_;
};

}  // namespace bridge
