#include "pai/segmentation.hpp"

#include <cmath>
#include <cstdlib>

#include <json.hpp>

#include "pai/error.hpp"
#include "pai/hash.hpp"
#include "pai/image_io.hpp"

namespace pai {
namespace {

using nlohmann::json;

std::pair<int, int> prompt_pixel(const RasterImage& image, const PromptPoint& p) {
  const double c = std::floor(p.u + 0.5), r = std::floor(p.v + 0.5);
  if (!std::isfinite(c) || !std::isfinite(r) || !image.in_bounds(static_cast<long>(c), static_cast<long>(r))) {
    throw Error(ErrorKind::InvalidArgument, "prompt (" + std::to_string(p.u) + ", " + std::to_string(p.v) +
                                                ") outside the " + std::to_string(image.width()) + "x" +
                                                std::to_string(image.height()) + " image");
  }
  return {static_cast<int>(c), static_cast<int>(r)};
}

// Flood fill from (c, r) over valid pixels within tolerance of the seed value.
Bitmask grow(const RasterImage& gray, int c, int r, int tolerance) {
  Bitmask region(gray.width(), gray.height());
  if (!gray.valid(c, r)) return region;
  const int seed = gray.gray(c, r);
  std::vector<std::pair<int, int>> stack{{c, r}};
  region.set(c, r);
  while (!stack.empty()) {
    const auto [pc, pr] = stack.back();
    stack.pop_back();
    const int dc[] = {1, -1, 0, 0}, dr[] = {0, 0, 1, -1};
    for (int d = 0; d < 4; ++d) {
      const int nc = pc + dc[d], nr = pr + dr[d];
      if (!gray.in_bounds(nc, nr) || region.at(nc, nr) || !gray.valid(nc, nr)) continue;
      if (std::abs(int(gray.gray(nc, nr)) - seed) > tolerance) continue;
      region.set(nc, nr);
      stack.push_back({nc, nr});
    }
  }
  return region;
}

json ring_to_json(const Ring& ring) {
  json out = json::array();
  for (const auto& p : ring) out.push_back({p.x, p.y});
  return out;
}

Ring ring_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorKind::Parse, "polygon must be an array of [x, y] pairs");
  Ring ring;
  for (const auto& v : j) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw Error(ErrorKind::Parse, "polygon vertex must be [x, y]");
    }
    ring.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  // tolerate an explicitly closed ring
  if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
  return ring;
}

std::string excerpt(const std::string& body) {
  return body.size() > 300 ? body.substr(0, 300) + "..." : body;
}

}  // namespace

Bitmask stub_region(const RasterImage& image, const std::vector<PromptPoint>& prompts, int tolerance) {
  const RasterImage gray = image.channels() == 1 ? image : image.to_gray();
  const std::size_t valid_count = static_cast<std::size_t>(
      std::count(gray.validity().begin(), gray.validity().end(), uint8_t{1}));
  Bitmask keep(gray.width(), gray.height());
  Bitmask drop(gray.width(), gray.height());
  for (const auto& p : prompts) {
    const auto [c, r] = prompt_pixel(gray, p);
    Bitmask region = grow(gray, c, r, tolerance);
    if (p.positive && region.count() == valid_count) continue;  // no boundary: nothing to segment
    Bitmask& target = p.positive ? keep : drop;
    for (std::size_t k = 0; k < region.bits.size(); ++k) target.bits[k] |= region.bits[k];
  }
  for (std::size_t k = 0; k < keep.bits.size(); ++k) keep.bits[k] &= static_cast<uint8_t>(!drop.bits[k]);
  return keep;
}

std::vector<MaskAnnotation> segment_stub(const RasterImage& image, const std::vector<PromptPoint>& prompts,
                                         FeatureClass class_hint, const ImageRef& ref, const StubOptions& options) {
  const Bitmask region = stub_region(image, prompts, options.tolerance);
  std::vector<MaskAnnotation> out;
  for (auto& poly : trace_components(region)) {
    if (options.simplify_epsilon > 0.0) {
      poly.outer = simplify(poly.outer, options.simplify_epsilon);
      for (auto& h : poly.holes) h = simplify(h, options.simplify_epsilon);
    }
    out.push_back({std::move(poly), class_hint, ref, 1.0});
  }
  return out;
}

std::string encode_segment_request(const RasterImage& image, const std::vector<PromptPoint>& prompts, bool multimask) {
  const auto png = encode_png(image);
  json body;
  body["image_png_b64"] = base64_encode(std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
  body["prompts"] = json::array();
  for (const auto& p : prompts) body["prompts"].push_back({{"x", p.u}, {"y", p.v}, {"positive", p.positive}});
  body["multimask"] = multimask;
  return body.dump();
}

std::vector<MaskAnnotation> segment_remote(const RasterImage& image, const std::vector<PromptPoint>& prompts,
                                           FeatureClass class_hint, const ImageRef& ref, const RemoteOptions& options,
                                           Transport& transport) {
  HttpRequest req;
  req.method = "POST";
  req.url = options.endpoint + (options.endpoint.ends_with('/') ? "segment" : "/segment");
  req.content_type = "application/json";
  req.body = encode_segment_request(image, prompts, options.multimask);
  req.timeout = options.timeout;
  const HttpResponse res = send_with_retry(transport, req, options.retry);
  if (res.status < 200 || res.status >= 300) {
    throw Error(ErrorKind::Service, "segmentation service returned HTTP " + std::to_string(res.status) + ": " +
                                        excerpt(res.body));
  }
  json body;
  try {
    body = json::parse(res.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("segmentation response is not JSON: ") + e.what());
  }
  if (!body.is_object() || !body.contains("masks") || !body["masks"].is_array()) {
    throw Error(ErrorKind::Parse, "segmentation response lacks a masks array");
  }
  std::vector<MaskAnnotation> out;
  for (const auto& m : body["masks"]) {
    if (!m.is_object() || !m.contains("polygon")) throw Error(ErrorKind::Parse, "mask without polygon");
    Polygon poly;
    poly.outer = remove_collinear(ring_from_json(m["polygon"]));
    if (m.contains("holes")) {
      for (const auto& h : m["holes"]) {
        Ring hole = remove_collinear(ring_from_json(h));
        if (hole.size() >= 3 && signed_area(hole) != 0.0) poly.holes.push_back(std::move(hole));
      }
    }
    if (poly.outer.size() < 3 || signed_area(poly.outer) == 0.0) continue;
    normalize_orientation(poly, true);
    std::optional<double> score;
    if (m.contains("score") && m["score"].is_number()) score = m["score"].get<double>();
    out.push_back({std::move(poly), class_hint, ref, score});
  }
  return out;
}

HealthStatus check_health(const std::string& endpoint, Transport& transport, std::chrono::milliseconds timeout) {
  HttpRequest req;
  req.url = endpoint + (endpoint.ends_with('/') ? "healthz" : "/healthz");
  req.timeout = timeout;
  HealthStatus status;
  HttpResponse res;
  try {
    res = transport.send(req);
  } catch (const Error& e) {
    status.detail = e.what();
    return status;
  }
  if (res.status != 200) {
    status.detail = "HTTP " + std::to_string(res.status);
    return status;
  }
  try {
    const json body = json::parse(res.body);
    status.ok = body.value("status", "") == "ok";
    status.backend = body.value("backend", "");
    if (!status.ok) status.detail = "status " + body.value("status", std::string("missing"));
  } catch (const json::exception& e) {
    status.detail = std::string("unparsable health response: ") + e.what();
  }
  return status;
}

std::string stub_service_response(const std::string& request_json, const StubOptions& options) {
  json req;
  try {
    req = json::parse(request_json);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("request is not JSON: ") + e.what());
  }
  if (!req.is_object() || !req.contains("image_png_b64") || !req["image_png_b64"].is_string()) {
    throw Error(ErrorKind::Parse, "request lacks image_png_b64");
  }
  const std::string png = base64_decode(req["image_png_b64"].get<std::string>());
  const RasterImage image = decode_png(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(png.data()), png.size()));
  std::vector<PromptPoint> prompts;
  for (const auto& p : req.value("prompts", json::array())) {
    if (!p.contains("x") || !p.contains("y")) throw Error(ErrorKind::Parse, "prompt needs x and y");
    prompts.push_back({p["x"].get<double>(), p["y"].get<double>(), p.value("positive", true)});
  }
  json out;
  out["masks"] = json::array();
  for (const auto& m : segment_stub(image, prompts, FeatureClass::Sidewalk, {}, options)) {
    json mask = {{"polygon", ring_to_json(m.polygon.outer)}, {"score", m.score.value_or(1.0)}};
    if (!m.polygon.holes.empty()) {
      mask["holes"] = json::array();
      for (const auto& h : m.polygon.holes) mask["holes"].push_back(ring_to_json(h));
    }
    out["masks"].push_back(std::move(mask));
  }
  return out.dump();
}

}  // namespace pai
