#include "bridge/catalog.hpp"

#include <functional>
#include <sstream>

#include "bridge/beam.hpp"
#include "bridge/deconv.hpp"
#include "bridge/densities.hpp"
#include "bridge/genz.hpp"
#include "bridge/membrane.hpp"

namespace bridge {

namespace {

struct CatalogEntry {
  const char* name;
  std::function<std::shared_ptr<Model>()> make;
};

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"forward", [] { return std::make_shared<ScaleModel>(); }},
      {"sleep", [] { return std::make_shared<SleepModel>(); }},
      {"banana", [] { return std::make_shared<BananaModel>(); }},
      {"donut", [] { return std::make_shared<DonutModel>(); }},
      {"funnel", [] { return std::make_shared<FunnelModel>(); }},
      {"gaussian-mixture", [] { return std::make_shared<GaussianMixtureModel>(); }},
      {"genz", [] { return std::make_shared<GenzModel>(); }},
      {"beam-forward",
       [] { return std::make_shared<FiniteDifferenceModel>(std::make_shared<BeamForwardModel>()); }},
      {"beam-posterior",
       [] {
         return std::make_shared<FiniteDifferenceModel>(std::make_shared<BeamPosteriorModel>());
       }},
      {"membrane-forward", [] { return std::make_shared<MembraneForwardModel>(); }},
      {"membrane-posterior", [] { return std::make_shared<MembranePosteriorModel>(); }},
      {"deconv-forward", [] { return std::make_shared<DeconvForwardModel>(); }},
      {"deconv-posterior", [] { return std::make_shared<DeconvPosteriorModel>(); }},
  };
  return entries;
}

}  // namespace

std::vector<std::string> catalog_names() {
  std::vector<std::string> out;
  for (const auto& e : catalog()) out.push_back(e.name);
  return out;
}

std::shared_ptr<Model> make_model(const std::string& name) {
  for (const auto& e : catalog())
    if (name == e.name) return e.make();
  std::ostringstream msg;
  msg << "unknown model \"" << name << "\"; available:";
  for (const auto& e : catalog()) msg << " " << e.name;
  throw std::invalid_argument(msg.str());
}

std::shared_ptr<Registry> make_registry(const std::vector<std::string>& names) {
  auto reg = std::make_shared<Registry>();
  for (const std::string& n : names) reg->add(make_model(n));
  return reg;
}

}  // namespace bridge
