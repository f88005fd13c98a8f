#include "pai/coco.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <json.hpp>

#include "binary_io.hpp"
#include "pai/error.hpp"

namespace pai {
namespace {

using nlohmann::json;

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

const std::vector<FeatureClass>& export_order() {
  static const auto order = [] {
    std::vector<FeatureClass> v(all_feature_classes().begin(), all_feature_classes().end());
    std::sort(v.begin(), v.end(), [](FeatureClass a, FeatureClass b) { return snake_name(a) < snake_name(b); });
    return v;
  }();
  return order;
}

// COCO flat [x0, y0, x1, y1, ...] in pixel-corner coordinates -> ring in pixel centres.
Ring ring_from_flat(const json& flat) {
  Ring ring;
  if (!flat.is_array() || flat.size() % 2 != 0) return ring;
  for (std::size_t i = 0; i + 1 < flat.size(); i += 2) {
    if (!flat[i].is_number() || !flat[i + 1].is_number()) return {};
    ring.push_back({flat[i].get<double>() - 0.5, flat[i + 1].get<double>() - 0.5});
  }
  if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
  return remove_collinear(ring);
}

json flat_from_ring(const Ring& ring) {
  json flat = json::array();
  for (const auto& p : ring) {
    flat.push_back(p.x + 0.5);
    flat.push_back(p.y + 0.5);
  }
  return flat;
}

bool usable(const Ring& r) { return r.size() >= 3 && signed_area(r) != 0.0; }

// A hole may touch its outline at a vertex, so judge by the majority of vertices.
bool mostly_inside(const Ring& inner, const Ring& outer) {
  std::size_t inside = 0;
  for (const auto& p : inner) inside += ring_contains(outer, p.x, p.y, true);
  return 2 * inside > inner.size();
}

}  // namespace

CocoImport import_document(const nlohmann::json& doc, const ImageRegistry& registry);

void ImageRegistry::add(RegisteredImage image) {
  if (image.id == 0) image.id = next_id_;
  next_id_ = std::max(next_id_, image.id + 1);
  by_name_[image.file_name] = std::move(image);
}

const RegisteredImage* ImageRegistry::find(const std::string& file_name) const {
  auto it = by_name_.find(file_name);
  return it == by_name_.end() ? nullptr : &it->second;
}

std::vector<RegisteredImage> ImageRegistry::images() const {
  std::vector<RegisteredImage> out;
  for (const auto& [name, img] : by_name_) out.push_back(img);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

int coco_category_id(FeatureClass c) {
  const auto& order = export_order();
  return static_cast<int>(std::find(order.begin(), order.end(), c) - order.begin()) + 1;
}

CocoImport import_coco_text(const std::string& text, const ImageRegistry& registry) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, "COCO JSON malformed at " + line_col(text, e.byte > 0 ? e.byte - 1 : 0) + ": " +
                                      e.what());
  }
  try {
    return import_document(doc, registry);
  } catch (const json::type_error& e) {
    throw Error(ErrorKind::Parse, std::string("COCO field has the wrong type: ") + e.what());
  }
}

CocoImport import_coco(const std::filesystem::path& path, const ImageRegistry& registry) {
  return import_coco_text(detail::read_file_text(path), registry);
}

CocoImport import_document(const json& doc, const ImageRegistry& registry) {
  if (!doc.is_object()) throw Error(ErrorKind::Parse, "COCO document must be a JSON object");
  auto array_of = [&](const char* key) {
    if (!doc.contains(key)) return json::array();
    if (!doc[key].is_array()) throw Error(ErrorKind::Parse, std::string("COCO '") + key + "' must be an array");
    return doc[key];
  };

  std::map<long long, const RegisteredImage*> images;
  for (const auto& im : array_of("images")) {
    if (!im.contains("id") || !im.contains("file_name")) throw Error(ErrorKind::Parse, "COCO image needs id and file_name");
    const std::string name = im["file_name"].get<std::string>();
    const RegisteredImage* reg = registry.find(name);
    if (!reg) {
      images[im["id"].get<long long>()] = nullptr;
      continue;
    }
    if ((im.contains("width") && im["width"].get<int>() != reg->width) ||
        (im.contains("height") && im["height"].get<int>() != reg->height)) {
      throw Error(ErrorKind::ReferentialIntegrity, "COCO image '" + name + "' size differs from the registered " +
                                                       std::to_string(reg->width) + "x" + std::to_string(reg->height));
    }
    images[im["id"].get<long long>()] = reg;
  }
  std::map<long long, std::string> categories;
  for (const auto& cat : array_of("categories")) {
    if (!cat.contains("id") || !cat.contains("name")) throw Error(ErrorKind::Parse, "COCO category needs id and name");
    categories[cat["id"].get<long long>()] = cat["name"].get<std::string>();
  }

  CocoImport out;
  for (const auto& ann : array_of("annotations")) {
    if (!ann.contains("image_id") || !ann.contains("category_id")) {
      throw Error(ErrorKind::Parse, "COCO annotation needs image_id and category_id");
    }
    const long long ann_id = ann.value("id", 0LL);
    const long long image_id = ann["image_id"].get<long long>();
    auto img = images.find(image_id);
    if (img == images.end()) {
      throw Error(ErrorKind::ReferentialIntegrity,
                  "annotation " + std::to_string(ann_id) + " references missing image id " + std::to_string(image_id));
    }
    if (!img->second) {
      throw Error(ErrorKind::ReferentialIntegrity,
                  "annotation " + std::to_string(ann_id) + " references an image this run does not know");
    }
    const long long cat_id = ann["category_id"].get<long long>();
    const auto cat = categories.find(cat_id);
    const std::string cat_name = cat == categories.end() ? "#" + std::to_string(cat_id) : cat->second;
    const auto cls = cat == categories.end() ? std::nullopt : parse_feature_class(cat->second);
    if (!cls) {
      out.rejects.push_back({ann_id, cat_name, "unknown category"});
      continue;
    }
    const json& seg = ann.contains("segmentation") ? ann["segmentation"] : json();
    if (ann.value("iscrowd", 0) != 0 || !seg.is_array() || seg.empty()) {
      out.rejects.push_back({ann_id, cat_name, "not a polygon annotation (RLE or empty)"});
      continue;
    }
    std::vector<Ring> rings;
    bool bad = false;
    for (const auto& flat : seg) {
      Ring r = ring_from_flat(flat);
      if (!usable(r)) {
        bad = true;
        break;
      }
      rings.push_back(std::move(r));
    }
    if (bad) {
      out.rejects.push_back({ann_id, cat_name, "degenerate or malformed polygon"});
      continue;
    }
    std::optional<double> score;
    if (ann.contains("score") && ann["score"].is_number()) score = ann["score"].get<double>();
    const ImageRef ref{img->second->representation, img->second->file_name};

    // first ring is an outline; rings inside the current outline are its holes
    std::vector<Polygon> polys;
    for (auto& r : rings) {
      if (!polys.empty() && mostly_inside(r, polys.back().outer) &&
          std::abs(signed_area(r)) < std::abs(signed_area(polys.back().outer))) {
        polys.back().holes.push_back(std::move(r));
      } else {
        polys.push_back({std::move(r), {}});
      }
    }
    for (auto& p : polys) {
      normalize_orientation(p, true);
      out.annotations.push_back({std::move(p), *cls, ref, score});
    }
  }
  return out;
}

std::string export_coco_text(const std::vector<MaskAnnotation>& annotations, const ImageRegistry& registry) {
  json doc;
  doc["info"] = {{"description", "pedestrian infrastructure masks"}, {"version", "1.0"}};
  doc["licenses"] = json::array();
  doc["images"] = json::array();
  for (const auto& im : registry.images()) {
    doc["images"].push_back({{"id", im.id},
                             {"file_name", im.file_name},
                             {"width", im.width},
                             {"height", im.height},
                             {"representation", to_string(im.representation)}});
  }
  doc["categories"] = json::array();
  for (FeatureClass c : export_order()) {
    doc["categories"].push_back({{"id", coco_category_id(c)},
                                 {"name", snake_name(c)},
                                 {"supercategory", group_of(c) == FeatureGroup::Planimetric ? "planimetric" : "volumetric"}});
  }
  doc["annotations"] = json::array();
  long long next_id = 1;
  for (const auto& a : annotations) {
    const RegisteredImage* im = registry.find(a.image.image_id);
    if (!im) {
      throw Error(ErrorKind::ReferentialIntegrity, "mask references unregistered image '" + a.image.image_id + "'");
    }
    Polygon poly = a.polygon;
    normalize_orientation(poly, true);
    json seg = json::array({flat_from_ring(poly.outer)});
    for (const auto& h : poly.holes) seg.push_back(flat_from_ring(h));
    const Extent2D box = bounding_box(poly.outer);
    json ann = {{"id", next_id++},
                {"image_id", im->id},
                {"category_id", coco_category_id(a.feature_class)},
                {"segmentation", seg},
                {"area", polygon_area(poly)},
                {"bbox", {box.min_x + 0.5, box.min_y + 0.5, box.width(), box.height()}},
                {"iscrowd", 0}};
    if (a.score) ann["score"] = *a.score;
    doc["annotations"].push_back(std::move(ann));
  }
  return doc.dump(1);
}

void export_coco(const std::vector<MaskAnnotation>& annotations, const ImageRegistry& registry,
                 const std::filesystem::path& path) {
  detail::write_file_text(path, export_coco_text(annotations, registry));
}

std::vector<MaskAnnotation> canonical_annotations(std::vector<MaskAnnotation> annotations) {
  for (auto& a : annotations) {
    normalize_orientation(a.polygon, true);
    a.polygon = canonical_polygon(a.polygon);
  }
  std::sort(annotations.begin(), annotations.end(), [](const MaskAnnotation& a, const MaskAnnotation& b) {
    return std::tie(a.image, a.feature_class, a.polygon.outer, a.polygon.holes, a.score) <
           std::tie(b.image, b.feature_class, b.polygon.outer, b.polygon.holes, b.score);
  });
  return annotations;
}

}  // namespace pai
