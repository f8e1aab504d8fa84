#pragma once

#include <nlohmann/json.hpp>

#include "therif/cluster/selection.hpp"

namespace therif::cluster {

void to_json(nlohmann::json& j, const ClusterDemographics& d);
void from_json(const nlohmann::json& j, ClusterDemographics& d);
// NaN silhouettes (k = 1) are written as null.
void to_json(nlohmann::json& j, const ClusteringReport& r);
void from_json(const nlohmann::json& j, ClusteringReport& r);

}  // namespace therif::cluster
