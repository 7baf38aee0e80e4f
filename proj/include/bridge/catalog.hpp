#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bridge/model.hpp"

namespace bridge {

// Names every model the CLI can serve. "forward" is the minimal doubling
// model and "sleep" the latency model used by the benchmark harness.
std::vector<std::string> catalog_names();

// Throws std::invalid_argument (listing the catalog) for unknown names.
std::shared_ptr<Model> make_model(const std::string& name);

std::shared_ptr<Registry> make_registry(const std::vector<std::string>& names);

}  // namespace bridge
