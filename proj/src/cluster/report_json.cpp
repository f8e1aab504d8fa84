#include "therif/cluster/report_json.hpp"

#include <cmath>
#include <limits>

namespace therif::cluster {

using nlohmann::json;

void to_json(json& j, const ClusterDemographics& d) {
  j = json{{"size", d.size}, {"share", d.share}, {"dyslexic_share", d.dyslexic_share}, {"age_share", d.age_share}};
}

void from_json(const json& j, ClusterDemographics& d) {
  j.at("size").get_to(d.size);
  j.at("share").get_to(d.share);
  j.at("dyslexic_share").get_to(d.dyslexic_share);
  j.at("age_share").get_to(d.age_share);
}

void to_json(json& j, const ClusteringReport& r) {
  json sil = json::array();
  for (double s : r.silhouette_curve) sil.push_back(std::isfinite(s) ? json(s) : json(nullptr));
  j = json{{"iteration", r.iteration},
           {"chosen_k", r.chosen_k},
           {"silhouette", r.silhouette},
           {"inertia_curve", r.inertia_curve},
           {"silhouette_curve", sil},
           {"knee_k", r.knee_k ? json(*r.knee_k) : json(nullptr)},
           {"knee_fallback", r.knee_fallback},
           {"degenerate", r.degenerate},
           {"members", r.members},
           {"representatives", r.representatives},
           {"demographics", r.demographics},
           {"skipped_formats", r.skipped_formats}};
}

void from_json(const json& j, ClusteringReport& r) {
  j.at("iteration").get_to(r.iteration);
  j.at("chosen_k").get_to(r.chosen_k);
  j.at("silhouette").get_to(r.silhouette);
  j.at("inertia_curve").get_to(r.inertia_curve);
  r.silhouette_curve.clear();
  for (const auto& s : j.at("silhouette_curve")) {
    r.silhouette_curve.push_back(s.is_null() ? std::numeric_limits<double>::quiet_NaN() : s.get<double>());
  }
  const auto& knee = j.at("knee_k");
  r.knee_k = knee.is_null() ? std::nullopt : std::optional<int>(knee.get<int>());
  j.at("knee_fallback").get_to(r.knee_fallback);
  r.degenerate = j.value("degenerate", false);
  j.at("members").get_to(r.members);
  j.at("representatives").get_to(r.representatives);
  r.demographics = j.value("demographics", std::vector<ClusterDemographics>{});
  r.skipped_formats = j.value("skipped_formats", std::vector<std::string>{});
}

}  // namespace therif::cluster
