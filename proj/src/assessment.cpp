#include "pai/assessment.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "pai/error.hpp"

namespace pai {
namespace {

using nlohmann::json;

constexpr int kReps = 9;

std::set<FeatureClass> assessed(const AssessmentMatrix& m) {
  std::set<FeatureClass> out;
  for (const auto& [key, level] : m) out.insert(key.first);
  return out;
}

std::string cell(const AssessmentMatrix& m, FeatureClass c, int rep) {
  auto it = m.find({c, static_cast<RepresentationId>(rep)});
  return it == m.end() ? "-" : to_string(it->second);
}

}  // namespace

std::string assessment_text(const AssessmentMatrix& matrix) {
  const auto rows = assessed(matrix);
  std::size_t name_width = std::string("Feature").size();
  for (auto c : rows) name_width = std::max(name_width, display_name(c).size());
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  std::ostringstream out;
  std::string header = pad("Feature", name_width);
  for (int r = 1; r <= kReps; ++r) header += "  " + pad("Rep" + std::to_string(r), 4);
  while (!header.empty() && header.back() == ' ') header.pop_back();
  out << header << '\n';
  for (auto group : {FeatureGroup::Planimetric, FeatureGroup::Volumetric}) {
    bool heading = false;
    for (auto c : rows) {
      if (group_of(c) != group) continue;
      if (!heading) {
        out << (group == FeatureGroup::Planimetric ? "Planimetric" : "Volumetric") << '\n';
        heading = true;
      }
      std::string line = pad(display_name(c), name_width);
      for (int r = 1; r <= kReps; ++r) line += "  " + pad(cell(matrix, c, r), 4);
      while (line.back() == ' ') line.pop_back();
      out << line << '\n';
    }
  }
  return out.str();
}

std::string assessment_json(const AssessmentMatrix& matrix) {
  json doc;
  doc["representations"] = json::array();
  for (int r = 1; r <= kReps; ++r) doc["representations"].push_back(to_string(static_cast<RepresentationId>(r)));
  doc["rows"] = json::array();
  for (auto c : assessed(matrix)) {
    json levels = json::object();
    for (int r = 1; r <= kReps; ++r) {
      auto it = matrix.find({c, static_cast<RepresentationId>(r)});
      if (it != matrix.end()) levels[to_string(static_cast<RepresentationId>(r))] = to_string(it->second);
    }
    doc["rows"].push_back({{"feature_class", snake_name(c)},
                           {"group", group_of(c) == FeatureGroup::Planimetric ? "planimetric" : "volumetric"},
                           {"levels", levels}});
  }
  return doc.dump(2) + "\n";
}

AssessmentMatrix parse_assessment_json(const std::string& text) {
  AssessmentMatrix m;
  try {
    const json doc = json::parse(text);
    for (const auto& row : doc.at("rows")) {
      const std::string name = row.at("feature_class").get<std::string>();
      const auto cls = parse_feature_class(name);
      if (!cls) throw Error(ErrorKind::Parse, "unknown feature class '" + name + "' in assessment");
      for (const auto& [rep, level] : row.at("levels").items()) {
        m[{*cls, parse_representation(rep)}] = parse_extraction_level(level.get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("assessment JSON: ") + e.what());
  }
  return m;
}

void record_assessment(const AssessmentMatrix& matrix, const std::filesystem::path& out_dir) {
  detail::write_file_text(out_dir / "assessment.json", assessment_json(matrix));
  detail::write_file_text(out_dir / "assessment.txt", assessment_text(matrix));
}

}  // namespace pai
