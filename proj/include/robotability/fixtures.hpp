#pragma once

// Reference catalog of the 24 robotability indicators and the published
// weight columns for it. Column values are kept exactly as published (they
// sum to 1 only up to rounding); `fixture_weights` rescales them to a valid
// WeightSet.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "robotability/ahp.hpp"
#include "robotability/features.hpp"
#include "robotability/scoring.hpp"

namespace robotability::fixtures {

enum class WeightColumn { All, Academia, Industry, Other, NycPoc, Trashbot };

inline std::string_view to_string(WeightColumn c) {
  switch (c) {
    case WeightColumn::All: return "all";
    case WeightColumn::Academia: return "academia";
    case WeightColumn::Industry: return "industry";
    case WeightColumn::Other: return "other";
    case WeightColumn::NycPoc: return "nyc-poc";
    case WeightColumn::Trashbot: return "trashbot";
  }
  return "all";
}

inline WeightColumn parse_weight_column(std::string_view s) {
  for (auto c : {WeightColumn::All, WeightColumn::Academia, WeightColumn::Industry,
                 WeightColumn::Other, WeightColumn::NycPoc, WeightColumn::Trashbot})
    if (to_string(c) == s) return c;
  throw ValidationError("unknown fixture weight column '" + std::string(s) + "'");
}

struct PublishedRow {
  std::string_view id;
  // All, Academia, Industry, Other, NYC POC, Trashbot; negative = not in that column.
  std::array<double, 6> weights;
};

inline constexpr std::array<PublishedRow, 24> kPublishedWeights{{
    {"pedestrian_density", {0.111, 0.080, 0.069, 0.062, 0.147, 0.173}},
    {"crowd_dynamics", {0.084, 0.082, 0.046, 0.034, 0.095, 0.119}},
    {"pedestrian_flow", {0.081, 0.072, 0.023, 0.034, -1, -1}},
    {"surface_condition", {0.066, 0.063, 0.053, 0.050, 0.092, 0.119}},
    {"sidewalk_width", {0.062, 0.058, 0.063, 0.064, 0.079, 0.083}},
    {"street_furniture", {0.059, 0.061, 0.060, 0.058, 0.076, 0.090}},
    {"intersection_safety", {0.057, 0.051, 0.024, 0.019, 0.066, -1}},
    {"weather", {0.049, 0.058, 0.038, 0.040, -1, -1}},
    {"curb_ramps", {0.048, 0.055, 0.044, 0.049, 0.060, 0.078}},
    {"wireless", {0.046, 0.032, 0.054, 0.056, 0.054, 0.057}},
    {"digital_maps", {0.040, 0.035, 0.026, 0.037, 0.048, 0.062}},
    {"surface_roughness", {0.036, 0.043, 0.052, 0.062, 0.038, 0.038}},
    {"gps_signal", {0.034, 0.031, 0.038, 0.028, 0.041, 0.051}},
    {"local_attitudes", {0.032, 0.033, 0.047, 0.046, -1, -1}},
    {"vehicle_traffic", {0.031, 0.034, 0.037, 0.026, 0.038, -1}},
    {"traffic_management", {0.030, 0.032, 0.041, 0.049, 0.034, -1}},
    {"slope_gradient", {0.029, 0.038, 0.048, 0.062, 0.037, 0.048}},
    {"zoning", {0.026, 0.033, 0.038, 0.037, 0.031, -1}},
    {"street_lighting", {0.019, 0.020, 0.037, 0.023, -1, -1}},
    {"bicycle_traffic", {0.017, 0.028, 0.018, 0.021, 0.020, 0.025}},
    {"charging_proximity", {0.015, 0.017, 0.043, 0.043, 0.018, 0.023}},
    {"bike_lanes", {0.012, 0.016, 0.029, 0.037, 0.013, 0.016}},
    {"cctv", {0.012, 0.014, 0.035, 0.034, 0.014, 0.019}},
    {"shade", {0.008, 0.014, 0.037, 0.030, -1, -1}},
}};

/// Published value for a feature in a column, if the column lists it.
inline std::optional<double> published_weight(WeightColumn c, std::string_view id) {
  for (const auto& row : kPublishedWeights)
    if (row.id == id) {
      const double w = row.weights[static_cast<std::size_t>(c)];
      if (w < 0) return std::nullopt;
      return w;
    }
  return std::nullopt;
}

/// A published column rescaled to sum to one, in catalog order.
inline WeightSet fixture_weights(WeightColumn c) {
  std::vector<FeatureId> ids;
  std::vector<double> raw;
  for (const auto& row : kPublishedWeights) {
    const double w = row.weights[static_cast<std::size_t>(c)];
    if (w < 0) continue;
    ids.emplace_back(row.id);
    raw.push_back(w);
  }
  return WeightSet::normalized(ids, raw, "file:fixture-" + std::string(to_string(c)));
}

/// Factors left out for a trash-barrel sidewalk robot that never crosses streets.
inline const std::vector<FeatureId>& trashbot_exclusions() {
  static const std::vector<FeatureId> ids{"traffic_management", "zoning",          "shade",
                                          "intersection_safety", "vehicle_traffic", "bike_lanes"};
  return ids;
}

namespace detail {

inline FeatureDef def(std::string id, std::string name, int polarity, ExtractorKind kind,
                      std::vector<std::string> sources = {},
                      std::map<std::string, double> params = {}) {
  FeatureDef f;
  f.id = std::move(id);
  f.display_name = std::move(name);
  f.polarity = polarity;
  f.extractor = kind;
  f.sources = std::move(sources);
  f.params = std::move(params);
  return f;
}

}  // namespace detail

/// Street furniture classes and their footprint weights.
inline std::map<std::string, double> furniture_weights() {
  return {{"bus_stop_shelter", 2.0}, {"trash_can", 0.5},     {"linknyc", 2.0},
          {"city_bench", 1.5},       {"bicycle_parking_shelter", 2.0},
          {"bicycle_rack", 1.5},     {"tree", 0.15},         {"newsstand", 3.0},
          {"parking_meter", 0.15},   {"scaffolding", 2.0},   {"fire_hydrant", 0.25},
          {"street_sign", 0.05}};
}

/// Traffic-management layers, one point per installation.
inline std::vector<std::string> traffic_layers() {
  return {"slow_zones",        "turn_calming", "sip_corridors",
          "sip_intersections", "barnes_dance", "leading_pedestrian_intervals"};
}

/// The 24-indicator catalog wired to the synthetic-city source names; 19 active.
inline FeatureCatalog reference_catalog() {
  using K = ExtractorKind;
  using detail::def;
  FeatureCatalog c;
  auto& f = c.features;
  f.push_back(def("pedestrian_density", "Pedestrian density", -1, K::ObservationCount, {"pedestrians"}));
  f.push_back(def("crowd_dynamics", "Crowd dynamics", -1, K::EdgeAttribute));
  f.back().attribute = "land_use_intensity";
  f.push_back(def("pedestrian_flow", "Pedestrian flow", -1, K::ObservationCount));
  f.push_back(def("surface_condition", "Surface condition", +1, K::EdgeAttribute));
  f.back().attribute = "surface_rating";
  f.push_back(def("sidewalk_width", "Sidewalk width", +1, K::EdgeAttribute));
  f.back().attribute = "width";
  f.push_back(def("street_furniture", "Density of street furniture", -1, K::DensityJoin, {"furniture"},
                  {{"radius", 7.5}}));
  f.back().class_weights = furniture_weights();
  // Collision density is the proxy; safety is its inverse.
  f.push_back(def("intersection_safety", "Intersection safety", +1, K::DensityJoin, {"collisions"},
                  {{"radius", 7.5}, {"invert", 1}}));
  f.push_back(def("weather", "Weather conditions", +1, K::Uniform, {}, {{"value", 1.0}}));
  f.push_back(def("curb_ramps", "Curb ramp availability", +1, K::DensityJoin, {"curb_ramps"},
                  {{"radius", 7.5}}));
  f.push_back(def("wireless", "Wireless communication infrastructure", +1, K::ThresholdBinary,
                  {"wireless"}, {{"threshold", 10.0}}));
  f.push_back(def("digital_maps", "Existence of detailed digital maps", +1, K::Uniform, {},
                  {{"value", 1.0}}));
  f.push_back(def("surface_roughness", "Sidewalk / surface roughness", -1, K::Uniform, {},
                  {{"value", 1.0}}));
  f.push_back(def("gps_signal", "GPS signal strength", +1, K::Uniform, {}, {{"value", 1.0}}));
  f.push_back(def("local_attitudes", "Local attitudes towards robots", +1, K::Uniform));
  f.push_back(def("vehicle_traffic", "Vehicle traffic", -1, K::ObservationCount, {"vehicles"}));
  f.push_back(def("traffic_management", "Traffic management systems", +1, K::AdditiveLayers,
                  traffic_layers(), {{"radius", 7.5}}));
  f.push_back(def("slope_gradient", "Slope gradient", -1, K::SlopeGradient, {},
                  {{"K", 8}, {"D", 30.0}}));
  // Lower speed limits mean more stringent regulation.
  f.push_back(def("zoning", "Zoning laws and regulation", +1, K::EdgeAttribute, {}, {{"invert", 1}}));
  f.back().attribute = "speed_limit";
  f.push_back(def("street_lighting", "Street lighting", +1, K::Uniform));
  f.push_back(def("bicycle_traffic", "Bicycle traffic", -1, K::ObservationCount, {"bicycles"}));
  f.push_back(def("charging_proximity", "Proximity to charging stations", +1, K::NearestFacility,
                  {"charging"}));
  f.push_back(def("bike_lanes", "Bike lane availability", +1, K::EdgeAttribute));
  f.back().attribute = "bike_lane_class";
  f.push_back(def("cctv", "Surveillance coverage (CCTV)", +1, K::DensityJoin, {"cctv"},
                  {{"radius", 7.5}}));
  f.push_back(def("shade", "Existence of shade", +1, K::Uniform));

  c.excluded = {{"pedestrian_flow", "data unavailable"},
                {"weather", "determined at deployment time"},
                {"local_attitudes", "data unavailable"},
                {"street_lighting", "data unavailable"},
                {"shade", "data unavailable"}};
  return c;
}

/// Profile over every active catalog feature.
inline RobotProfile full_profile(const FeatureCatalog& catalog, std::string name = "full") {
  RobotProfile p;
  p.name = std::move(name);
  p.included_features = catalog.active_ids();
  return p;
}

/// Active features minus the trash-barrel robot's exclusions.
inline RobotProfile trashbot_profile(const FeatureCatalog& catalog) {
  RobotProfile p;
  p.name = "trashbot";
  for (const auto& id : catalog.active_ids())
    if (std::find(trashbot_exclusions().begin(), trashbot_exclusions().end(), id) ==
        trashbot_exclusions().end())
      p.included_features.push_back(id);
  return p;
}

}  // namespace robotability::fixtures
