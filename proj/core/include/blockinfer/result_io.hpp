#ifndef BLOCKINFER_RESULT_IO_HPP
#define BLOCKINFER_RESULT_IO_HPP

#include <string>

#include "json.hpp"

#include "blockinfer/explore.hpp"

namespace blockinfer {

nlohmann::json params_to_json(const EmissionParams& params);
EmissionParams params_from_json(const nlohmann::json& j);

// Full fit report: per-Q table, selected model, memberships, parameters,
// config echo. Timing fields are added by the CLI afterwards.
nlohmann::json result_to_json(const ExplorationState& state, const NetworkData& data,
                              FamilyId family, const ExploreConfig& cfg);

struct ReloadedResult {
  Membership membership;
  EmissionParams params;
  double J = 0.0;
  double ICL = 0.0;
};

// Reads back the selected model; reloading and recomputing J must reproduce
// the stored value.
ReloadedResult reload_result(const nlohmann::json& j);

void write_labels_csv(const std::string& path, const std::vector<int>& labels);

}  // namespace blockinfer

#endif
