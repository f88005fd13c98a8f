#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "pai/feature_class.hpp"
#include "pai/http.hpp"
#include "pai/polygon.hpp"
#include "pai/raster.hpp"

namespace pai {

struct PromptPoint {
  double u = 0.0;
  double v = 0.0;
  bool positive = true;
  bool operator==(const PromptPoint&) const = default;
};

/// Which rendered image a mask belongs to.
struct ImageRef {
  RepresentationId representation = RepresentationId::Rep1;
  std::string image_id;  // file name relative to the run directory
  bool operator==(const ImageRef&) const = default;
  auto operator<=>(const ImageRef&) const = default;
};

/// Polygon in image pixel coordinates (pixel centres at integers), outer ring
/// counterclockwise and holes clockwise as displayed.
struct MaskAnnotation {
  Polygon polygon;
  FeatureClass feature_class = FeatureClass::Sidewalk;
  ImageRef image;
  std::optional<double> score;
  bool operator==(const MaskAnnotation&) const = default;
};

struct StubOptions {
  int tolerance = 10;            // gray levels either side of the prompt pixel
  double simplify_epsilon = 0.0; // Douglas-Peucker in pixels; 0 keeps every vertex
};

/// Deterministic stand-in for a promptable model. Each positive prompt grows
/// the 4-connected region of valid pixels within +/- tolerance of the prompt
/// pixel's gray value; negative prompts grow regions the same way and remove
/// them. Every connected component of the result becomes one mask with score
/// 1.0. A region that takes in every valid pixel has no boundary to find and
/// contributes nothing. RGB images are segmented on their luma.
std::vector<MaskAnnotation> segment_stub(const RasterImage& image, const std::vector<PromptPoint>& prompts,
                                         FeatureClass class_hint, const ImageRef& ref, const StubOptions& options = {});

/// Same rule on the pixel mask level (used by the stub and by tests).
Bitmask stub_region(const RasterImage& image, const std::vector<PromptPoint>& prompts, int tolerance);

struct RemoteOptions {
  std::string endpoint;  // base URL; requests go to <endpoint>/segment
  RetryPolicy retry;
  std::chrono::milliseconds timeout{60000};
  bool multimask = false;
};

/// Client for the promptable segmentation service:
///   POST /segment {"image_png_b64", "prompts": [{"x","y","positive"}], "multimask"}
///     -> {"masks": [{"polygon": [[x, y], ...], "score": s}]}
/// Polygon coordinates use the same pixel-centre convention as MaskAnnotation.
///  - no response (refused, timeout): ErrorKind::Transport
///  - non-2xx: ErrorKind::Service with a body excerpt
///  - unparsable body: ErrorKind::Parse
/// Returned masks carry `class_hint`; degenerate polygons (< 3 vertices or zero
/// area) are dropped.
std::vector<MaskAnnotation> segment_remote(const RasterImage& image, const std::vector<PromptPoint>& prompts,
                                           FeatureClass class_hint, const ImageRef& ref, const RemoteOptions& options,
                                           Transport& transport);

struct HealthStatus {
  bool ok = false;
  std::string backend;  // "sam" or "stub"
  std::string detail;
};
/// GET <endpoint>/healthz; never throws for service-side problems.
HealthStatus check_health(const std::string& endpoint, Transport& transport,
                          std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

/// Request body for POST /segment.
std::string encode_segment_request(const RasterImage& image, const std::vector<PromptPoint>& prompts, bool multimask);

/// Server side of the wire format backed by segment_stub; returns the JSON
/// response body. Throws ErrorKind::Parse for malformed requests.
std::string stub_service_response(const std::string& request_json, const StubOptions& options = {});

}  // namespace pai
