#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>

#include "pai/feature_class.hpp"
#include "pai/raster.hpp"

namespace pai {

/// Operator-entered extraction levels per feature and representation.
using AssessmentMatrix = std::map<std::pair<FeatureClass, RepresentationId>, ExtractionLevel>;

/// Aligned text in inventory-table layout: a header row with Rep1..Rep9, then
/// the assessed features grouped under "Planimetric" and "Volumetric" in
/// table order. Unassessed cells print "-". An empty matrix prints the header only.
std::string assessment_text(const AssessmentMatrix& matrix);
/// {"representations": ["rep1", ...], "rows": [{"feature_class", "group", "levels": {"rep1": "C", ...}}]}
std::string assessment_json(const AssessmentMatrix& matrix);
AssessmentMatrix parse_assessment_json(const std::string& text);

/// Writes assessment.json and assessment.txt into `out_dir`.
void record_assessment(const AssessmentMatrix& matrix, const std::filesystem::path& out_dir);

}  // namespace pai
