#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace pai {

/// Pedestrian infrastructure taxonomy, in inventory table order.
enum class FeatureClass : uint8_t {
  // planimetric
  Sidewalk,
  Crosswalk,
  CurbRamp,
  Landscape,
  Stair,
  DetectableWarningSurface,
  StormWaterInlet,
  ManholeCover,
  TrafficBarrier,
  RetainingWall,
  // volumetric
  Bench,
  Bollard,
  FireHydrant,
  Mailbox,
  Memorial,
  PhoneBooth,
  ParkingMeter,
  Post,
  PublicSculpture,
  PublicVendingMachine,
  TreeTrunk,
  TreeCanopy,
  WasteContainer,
};

inline constexpr std::size_t kFeatureClassCount = 23;

enum class FeatureGroup { Planimetric, Volumetric };

const std::array<FeatureClass, kFeatureClassCount>& all_feature_classes();
FeatureGroup group_of(FeatureClass c);
/// "Curb ramp"
std::string display_name(FeatureClass c);
/// "curb_ramp"
std::string snake_name(FeatureClass c);
/// Accepts any case and ignores spaces, underscores and hyphens
/// ("Fire Hydrant", "fire_hydrant", "FIREHYDRANT").
std::optional<FeatureClass> parse_feature_class(std::string_view text);

/// Deterministic preference used to break vote ties: planimetric before
/// volumetric, then by snake name.
bool tie_break_less(FeatureClass a, FeatureClass b);

/// Labelled-cloud classification codes (user-definable LAS range 64..86).
inline constexpr uint8_t kFirstFeatureLasCode = 64;
uint8_t las_code(FeatureClass c);
std::optional<FeatureClass> feature_from_las_code(uint8_t code);

enum class ExtractionLevel { N, P, C, NA };
std::string to_string(ExtractionLevel level);  // "N", "P", "C", "N/A"
ExtractionLevel parse_extraction_level(std::string_view text);

}  // namespace pai
