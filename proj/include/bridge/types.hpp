#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "json.hpp"

namespace bridge {

using Vector = Eigen::VectorXd;

// A model input or output: one or more vectors whose lengths are fixed by the
// model (per config). Vectors in one list may differ in length.
using ParameterList = std::vector<Vector>;

// JSON type used for all wire payloads. Ordered so that emitted documents
// keep a stable, documented field order.
using Json = nlohmann::ordered_json;

// Opaque per-request options, forwarded verbatim to the model.
using Config = Json;

bool all_finite(const Vector& v);
bool all_finite(const ParameterList& p);

inline ParameterList single(Vector v) {
  ParameterList p;
  p.push_back(std::move(v));
  return p;
}

// Flattens a list into one vector, concatenating blocks in order.
Vector flatten(const ParameterList& p);

}  // namespace bridge
