#pragma once

#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pai/assessment.hpp"

namespace pai::test {

/// Reference extraction levels, Rep1..Rep9 per feature.
inline const std::vector<std::pair<std::string, std::string>>& reference_levels() {
  static const std::vector<std::pair<std::string, std::string>> rows = {
      {"Sidewalk", "P P P P P C C C C"},
      {"Crosswalk", "C C C C C C C C C"},
      {"Curb ramp", "P P P P N C C C C"},
      {"Landscape", "P P P P P C C P P"},
      {"Stair", "N N P P N N N C C"},
      {"Detectable warning surface", "N C N C N C C C C"},
      {"Storm water inlet", "N N N N N C C C C"},
      {"Manhole cover", "N N N N N C C C C"},
      {"Traffic barrier", "N N N N N N N C C"},
      {"Retaining wall", "N N N N N C C C C"},
      {"Bench", "N/A N/A N/A N/A N/A N/A N/A N/A N/A"},
      {"Bollard", "N/A N/A N/A N/A N/A N/A N/A N/A N/A"},
      {"Fire hydrant", "N N N N N N N C C"},
      {"Mailbox", "N/A N/A N/A N/A N/A N/A N/A N/A N/A"},
      {"Memorial", "N/A N/A N/A N/A N/A N/A N/A N/A N/A"},
      {"Phone booth", "N/A N/A N/A N/A N/A N/A N/A N/A N/A"},
      {"Parking meter", "N N N N N C C C C"},
      {"Post", "N N N N N N N C C"},
      {"Public Sculpture", "N/A N/A N/A N/A N/A N/A N/A N/A N/A"},
      {"Public vending machine", "N/A N/A N/A N/A N/A N/A N/A N/A N/A"},
      {"Tree trunk", "N N N N N N N C C"},
      {"Tree Canopy", "N N P P P N N P P"},
      {"Waste container", "N N N N N N N C C"},
  };
  return rows;
}

inline AssessmentMatrix reference_matrix() {
  AssessmentMatrix m;
  for (const auto& [name, levels] : reference_levels()) {
    const auto cls = parse_feature_class(name);
    std::istringstream in(levels);
    std::string tok;
    for (int rep = 1; in >> tok; ++rep) m[{*cls, static_cast<RepresentationId>(rep)}] = parse_extraction_level(tok);
  }
  return m;
}

/// Row of an aligned text report reduced to "Name L1 L2 ...", single-spaced.
inline std::string squeeze(const std::string& line) {
  std::istringstream in(line);
  std::string out, tok;
  while (in >> tok) out += (out.empty() ? "" : " ") + tok;
  return out;
}

}  // namespace pai::test
