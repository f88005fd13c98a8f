#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pai/segmentation.hpp"

namespace pai {

struct RegisteredImage {
  std::string file_name;  // relative to the run directory
  int width = 0;
  int height = 0;
  RepresentationId representation = RepresentationId::Rep1;
  int id = 0;  // COCO image id used on export
};

/// Images a run knows about, keyed by file name.
class ImageRegistry {
 public:
  /// Assigns the next id when `image.id` is 0. Re-adding a file name replaces it.
  void add(RegisteredImage image);
  const RegisteredImage* find(const std::string& file_name) const;
  std::vector<RegisteredImage> images() const;  // ordered by id
  bool empty() const { return by_name_.empty(); }

 private:
  std::map<std::string, RegisteredImage> by_name_;
  int next_id_ = 1;
};

struct CocoReject {
  long long annotation_id = 0;
  std::string category;
  std::string reason;
};

struct CocoImport {
  std::vector<MaskAnnotation> annotations;
  std::vector<CocoReject> rejects;
};

/// COCO 1.0 polygon annotations -> masks.
/// COCO polygons are in pixel-corner coordinates; masks use pixel centres, so
/// every vertex moves by -0.5. In a `segmentation` list the first ring is the
/// outline, later rings inside it are holes and the rest become separate masks.
/// Stored bboxes and areas are ignored. Unknown categories, RLE / crowd
/// annotations and degenerate rings are collected in `rejects`.
/// Malformed JSON -> ErrorKind::Parse with line:column; an annotation whose
/// image is absent from the file or the registry -> ErrorKind::ReferentialIntegrity.
CocoImport import_coco(const std::filesystem::path& path, const ImageRegistry& registry);
CocoImport import_coco_text(const std::string& text, const ImageRegistry& registry);

/// Writes every registered image, all 23 categories (ids 1..23 by sorted snake
/// name) and one annotation per mask with recomputed bbox and area.
void export_coco(const std::vector<MaskAnnotation>& annotations, const ImageRegistry& registry,
                 const std::filesystem::path& path);
std::string export_coco_text(const std::vector<MaskAnnotation>& annotations, const ImageRegistry& registry);

/// COCO category id of a class under the export numbering.
int coco_category_id(FeatureClass c);

/// Orientation-normalized, rotation-canonical rings, sorted: two annotation
/// lists describing the same masks compare equal after this.
std::vector<MaskAnnotation> canonical_annotations(std::vector<MaskAnnotation> annotations);

}  // namespace pai
