#include "pai/feature_class.hpp"

#include <cctype>

#include "pai/error.hpp"

namespace pai {
namespace {

struct ClassInfo {
  FeatureClass cls;
  const char* display;
  const char* snake;
};

constexpr std::array<ClassInfo, kFeatureClassCount> kInfo = {{
    {FeatureClass::Sidewalk, "Sidewalk", "sidewalk"},
    {FeatureClass::Crosswalk, "Crosswalk", "crosswalk"},
    {FeatureClass::CurbRamp, "Curb ramp", "curb_ramp"},
    {FeatureClass::Landscape, "Landscape", "landscape"},
    {FeatureClass::Stair, "Stair", "stair"},
    {FeatureClass::DetectableWarningSurface, "Detectable warning surface", "detectable_warning_surface"},
    {FeatureClass::StormWaterInlet, "Storm water inlet", "storm_water_inlet"},
    {FeatureClass::ManholeCover, "Manhole cover", "manhole_cover"},
    {FeatureClass::TrafficBarrier, "Traffic barrier", "traffic_barrier"},
    {FeatureClass::RetainingWall, "Retaining wall", "retaining_wall"},
    {FeatureClass::Bench, "Bench", "bench"},
    {FeatureClass::Bollard, "Bollard", "bollard"},
    {FeatureClass::FireHydrant, "Fire hydrant", "fire_hydrant"},
    {FeatureClass::Mailbox, "Mailbox", "mailbox"},
    {FeatureClass::Memorial, "Memorial", "memorial"},
    {FeatureClass::PhoneBooth, "Phone booth", "phone_booth"},
    {FeatureClass::ParkingMeter, "Parking meter", "parking_meter"},
    {FeatureClass::Post, "Post", "post"},
    {FeatureClass::PublicSculpture, "Public sculpture", "public_sculpture"},
    {FeatureClass::PublicVendingMachine, "Public vending machine", "public_vending_machine"},
    {FeatureClass::TreeTrunk, "Tree trunk", "tree_trunk"},
    {FeatureClass::TreeCanopy, "Tree canopy", "tree_canopy"},
    {FeatureClass::WasteContainer, "Waste container", "waste_container"},
}};

const ClassInfo& info(FeatureClass c) { return kInfo[static_cast<std::size_t>(c)]; }

std::string squash(std::string_view text) {
  std::string out;
  for (unsigned char ch : text) {
    if (ch == ' ' || ch == '_' || ch == '-') continue;
    out.push_back(static_cast<char>(std::tolower(ch)));
  }
  return out;
}

}  // namespace

const std::array<FeatureClass, kFeatureClassCount>& all_feature_classes() {
  static const auto all = [] {
    std::array<FeatureClass, kFeatureClassCount> a{};
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = kInfo[i].cls;
    return a;
  }();
  return all;
}

FeatureGroup group_of(FeatureClass c) {
  return static_cast<int>(c) <= static_cast<int>(FeatureClass::RetainingWall) ? FeatureGroup::Planimetric
                                                                                : FeatureGroup::Volumetric;
}

std::string display_name(FeatureClass c) { return info(c).display; }
std::string snake_name(FeatureClass c) { return info(c).snake; }

std::optional<FeatureClass> parse_feature_class(std::string_view text) {
  const std::string key = squash(text);
  for (const auto& i : kInfo) {
    if (squash(i.snake) == key) return i.cls;
  }
  return std::nullopt;
}

bool tie_break_less(FeatureClass a, FeatureClass b) {
  const auto ga = group_of(a), gb = group_of(b);
  if (ga != gb) return ga == FeatureGroup::Planimetric;
  return snake_name(a) < snake_name(b);
}

uint8_t las_code(FeatureClass c) { return static_cast<uint8_t>(kFirstFeatureLasCode + static_cast<int>(c)); }

std::optional<FeatureClass> feature_from_las_code(uint8_t code) {
  if (code < kFirstFeatureLasCode || code >= kFirstFeatureLasCode + kFeatureClassCount) return std::nullopt;
  return static_cast<FeatureClass>(code - kFirstFeatureLasCode);
}

std::string to_string(ExtractionLevel level) {
  switch (level) {
    case ExtractionLevel::N: return "N";
    case ExtractionLevel::P: return "P";
    case ExtractionLevel::C: return "C";
    case ExtractionLevel::NA: return "N/A";
  }
  return "N";
}

ExtractionLevel parse_extraction_level(std::string_view text) {
  std::string t;
  for (unsigned char ch : text) t.push_back(static_cast<char>(std::toupper(ch)));
  if (t == "N") return ExtractionLevel::N;
  if (t == "P") return ExtractionLevel::P;
  if (t == "C") return ExtractionLevel::C;
  if (t == "N/A" || t == "NA") return ExtractionLevel::NA;
  throw Error(ErrorKind::Parse, "unknown extraction level '" + std::string(text) + "' (expected N, P, C or N/A)");
}

}  // namespace pai
