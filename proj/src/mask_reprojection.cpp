#include "pai/mask_reprojection.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "binary_io.hpp"
#include "pai/error.hpp"
#include "pai/las.hpp"

namespace pai {
namespace {

using nlohmann::json;

json ring_coordinates(const Ring& ring) {
  json out = json::array();
  for (const auto& p : ring) out.push_back({p.x, p.y});
  if (!ring.empty()) out.push_back({ring.front().x, ring.front().y});  // GeoJSON rings are closed
  return out;
}

}  // namespace

GeoPolygon bev_mask_to_geo(const MaskAnnotation& mask, const std::optional<Geotransform>& geo,
                           const std::string& crs_id) {
  if (!geo) {
    throw Error(ErrorKind::MissingAttribute, "mask image '" + mask.image.image_id + "' has no geotransform");
  }
  auto map_ring = [&](const Ring& r) {
    Ring out;
    out.reserve(r.size());
    for (const auto& p : r) {
      const auto [x, y] = geo->world(p.x + 0.5, p.y + 0.5);
      out.push_back({x, y});
    }
    return out;
  };
  GeoPolygon g;
  g.polygon.outer = map_ring(mask.polygon.outer);
  for (const auto& h : mask.polygon.holes) g.polygon.holes.push_back(map_ring(h));
  g.feature_class = mask.feature_class;
  g.sources = {mask.image.representation};
  g.crs_id = crs_id;
  return g;
}

std::vector<LabelVote> street_mask_to_points(const MaskAnnotation& mask, const CorrespondenceMap& cmap,
                                             int image_width, int image_height) {
  if (cmap.width() != image_width || cmap.height() != image_height) {
    throw Error(ErrorKind::InvalidArgument,
                "correspondence map " + std::to_string(cmap.width()) + "x" + std::to_string(cmap.height()) +
                    " does not match image '" + mask.image.image_id + "' " + std::to_string(image_width) + "x" +
                    std::to_string(image_height));
  }
  const Bitmask inside = rasterize(mask.polygon, image_width, image_height);
  const auto& idx = cmap.indices();
  std::vector<LabelVote> out;
  for (std::size_t k = 0; k < inside.bits.size(); ++k) {
    if (inside.bits[k] && idx[k] != CorrespondenceMap::kNoPoint) out.push_back({idx[k], mask.feature_class});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<LabelVote> view_votes(const std::vector<MaskAnnotation>& masks, const CorrespondenceMap& cmap,
                                  int image_width, int image_height) {
  std::vector<LabelVote> out;
  for (const auto& m : masks) {
    const auto v = street_mask_to_points(m, cmap, image_width, image_height);
    out.insert(out.end(), v.begin(), v.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<TallyEntry> LabeledCloud::tally_of(uint32_t point_index) const {
  auto lo = std::lower_bound(tally.begin(), tally.end(), point_index,
                             [](const TallyEntry& e, uint32_t p) { return e.point_index < p; });
  std::vector<TallyEntry> out;
  for (; lo != tally.end() && lo->point_index == point_index; ++lo) out.push_back(*lo);
  return out;
}

std::size_t LabeledCloud::labeled_count() const {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](const auto& l) { return l.has_value(); }));
}

LabeledCloud pool_labels(const std::vector<std::vector<LabelVote>>& views, std::size_t point_count,
                         uint32_t min_votes) {
  if (min_votes < 1) throw Error(ErrorKind::InvalidArgument, "min_votes must be at least 1");
  std::vector<LabelVote> all;
  for (const auto& view : views) {
    std::vector<LabelVote> v = view;
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());  // one vote per view
    for (const auto& vote : v) {
      if (vote.point_index >= point_count) {
        throw Error(ErrorKind::InvalidArgument,
                    "vote for point " + std::to_string(vote.point_index) + " outside a cloud of " +
                        std::to_string(point_count));
      }
    }
    all.insert(all.end(), v.begin(), v.end());
  }
  std::sort(all.begin(), all.end());

  LabeledCloud out;
  out.labels.assign(point_count, std::nullopt);
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j] == all[i]) ++j;
    out.tally.push_back({all[i].point_index, all[i].feature_class, static_cast<uint32_t>(j - i)});
    i = j;
  }
  for (std::size_t i = 0; i < out.tally.size();) {
    std::size_t j = i;
    const TallyEntry* best = &out.tally[i];
    for (; j < out.tally.size() && out.tally[j].point_index == out.tally[i].point_index; ++j) {
      const TallyEntry& e = out.tally[j];
      if (e.votes > best->votes || (e.votes == best->votes && tie_break_less(e.feature_class, best->feature_class))) {
        best = &e;
      }
    }
    if (best->votes >= min_votes) out.labels[best->point_index] = best->feature_class;
    i = j;
  }
  return out;
}

std::string inventory_geojson(const std::vector<GeoPolygon>& polygons, const std::string& crs_id) {
  json doc;
  doc["type"] = "FeatureCollection";
  // projected coordinates; RFC 7946 readers must be told the CRS explicitly
  doc["crs_id"] = crs_id;
  doc["features"] = json::array();
  for (const auto& g : polygons) {
    if (g.crs_id != crs_id) {
      throw Error(ErrorKind::Alignment, "polygon CRS " + g.crs_id + " differs from inventory CRS " + crs_id);
    }
    Polygon poly = g.polygon;
    normalize_orientation(poly, false);
    json rings = json::array({ring_coordinates(poly.outer)});
    for (const auto& h : poly.holes) rings.push_back(ring_coordinates(h));
    json sources = json::array();
    for (auto s : g.sources) sources.push_back(to_string(s));
    doc["features"].push_back({{"type", "Feature"},
                               {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}},
                               {"properties",
                                {{"feature_class", snake_name(g.feature_class)},
                                 {"group", group_of(g.feature_class) == FeatureGroup::Planimetric ? "planimetric"
                                                                                                  : "volumetric"},
                                 {"sources", sources},
                                 {"area", polygon_area(poly)}}}});
  }
  return doc.dump(1) + "\n";
}

std::string label_map_json() {
  json doc = json::object();
  doc["las_version"] = "1.4";
  doc["point_formats"] = {6, 7};
  doc["unlabeled"] = "original classification code kept";
  doc["classes"] = json::array();
  for (auto c : all_feature_classes()) {
    doc["classes"].push_back({{"code", las_code(c)},
                              {"feature_class", snake_name(c)},
                              {"name", display_name(c)},
                              {"group", group_of(c) == FeatureGroup::Planimetric ? "planimetric" : "volumetric"}});
  }
  return doc.dump(2) + "\n";
}

InventoryFiles export_inventory(const std::vector<GeoPolygon>& polygons, const LabeledCloud& labeled,
                                const PointCloud& cloud, const std::filesystem::path& out_dir) {
  if (labeled.labels.size() != cloud.size()) {
    throw Error(ErrorKind::InvalidArgument, "labeled cloud has " + std::to_string(labeled.labels.size()) +
                                                " labels for " + std::to_string(cloud.size()) + " points");
  }
  InventoryFiles files{out_dir / "inventory.geojson", out_dir / "labeled.las", out_dir / "label_map.json"};
  std::filesystem::create_directories(out_dir);
  detail::write_file_text(files.geojson, inventory_geojson(polygons, cloud.metadata().crs_id));
  std::vector<uint8_t> codes(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    codes[i] = labeled.labels[i] ? las_code(*labeled.labels[i]) : cloud.label(i).las_code();
  }
  write_las_with_codes(cloud, codes, files.las);
  detail::write_file_text(files.label_map, label_map_json());
  return files;
}

std::vector<std::optional<FeatureClass>> import_labels(const std::filesystem::path& las_path) {
  const auto codes = read_las_class_codes(las_path);
  std::vector<std::optional<FeatureClass>> out;
  out.reserve(codes.size());
  for (uint8_t c : codes) out.push_back(feature_from_las_code(c));
  return out;
}

}  // namespace pai
