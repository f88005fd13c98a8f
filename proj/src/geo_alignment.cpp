#include "pai/geo_alignment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <span>
#include <thread>

#include <json.hpp>

#include "binary_io.hpp"
#include "pai/error.hpp"
#include "pai/hash.hpp"
#include "pai/image_io.hpp"
#include "pai/render.hpp"

namespace pai {
namespace {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  return std::string(buf, res.ptr);
}

std::optional<int> epsg_code(const std::string& crs_id) {
  std::string id = crs_id;
  for (auto& c : id) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (id == "CRS:84") return std::nullopt;
  if (id.rfind("EPSG:", 0) != 0) return std::nullopt;
  int code = 0;
  const auto* first = id.data() + 5;
  const auto res = std::from_chars(first, id.data() + id.size(), code);
  if (res.ec != std::errc() || res.ptr != id.data() + id.size()) return std::nullopt;
  return code;
}

bool looks_like_service_exception(const HttpResponse& res) {
  if (res.content_type.find("xml") != std::string::npos) return true;
  const auto first = res.body.find_first_not_of(" \t\r\n");
  return first != std::string::npos && res.body[first] == '<';
}

void check_response(const HttpResponse& res, const std::string& url) {
  if (res.status < 200 || res.status >= 300) {
    std::string excerpt = res.body.substr(0, 200);
    throw Error(ErrorKind::Transport,
                "HTTP " + std::to_string(res.status) + " from " + url + (excerpt.empty() ? "" : ": " + excerpt));
  }
  if (looks_like_service_exception(res)) {
    throw Error(ErrorKind::Service, "service exception from " + url + ":\n" + res.body);
  }
}

RasterImage decode_body(const HttpResponse& res, const std::string& url) {
  const std::span<const uint8_t> bytes(reinterpret_cast<const uint8_t*>(res.body.data()), res.body.size());
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    throw Error(ErrorKind::Service, "undecodable image from " + url + ": " + e.what());
  }
}

// --- Web Mercator tiles ---------------------------------------------------

constexpr double kEarthRadius = 6378137.0;
constexpr int kTileSize = 256;

struct GlobalPixel {
  double x;
  double y;
};

// Position in zoom-0 global pixels for a coordinate in the source CRS.
GlobalPixel to_global(double x, double y, bool geographic) {
  const double pi = std::numbers::pi;
  double mx = x, my = y;
  if (geographic) {
    const double lat = std::clamp(y, -85.05112878, 85.05112878) * pi / 180.0;
    mx = kEarthRadius * x * pi / 180.0;
    my = kEarthRadius * std::log(std::tan(pi / 4.0 + lat / 2.0));
  }
  const double world = 2.0 * pi * kEarthRadius;
  return {(mx + pi * kEarthRadius) / world * kTileSize, (pi * kEarthRadius - my) / world * kTileSize};
}

std::string expand_template(std::string tmpl, int z, long x, long y) {
  auto replace = [&](const std::string& key, const std::string& value) {
    for (auto pos = tmpl.find(key); pos != std::string::npos; pos = tmpl.find(key, pos + value.size())) {
      tmpl.replace(pos, key.size(), value);
    }
  };
  replace("{z}", std::to_string(z));
  replace("{x}", std::to_string(x));
  replace("{y}", std::to_string(y));
  return tmpl;
}

RasterImage fetch_xyz(const Extent2D& bbox, int width, int height, double resolution, bool geographic,
                      const SatelliteSource& source, Transport& transport) {
  const GlobalPixel tl0 = to_global(bbox.min_x, bbox.max_y, geographic);
  const GlobalPixel br0 = to_global(bbox.max_x, bbox.min_y, geographic);
  const double need = std::max(width / std::max(br0.x - tl0.x, 1e-300), height / std::max(br0.y - tl0.y, 1e-300));
  int zoom = static_cast<int>(std::ceil(std::log2(need) - 1e-6));
  zoom = std::clamp(zoom, 0, source.max_zoom);
  const double scale = std::ldexp(1.0, zoom);
  const long tiles_per_axis = 1L << zoom;
  auto tile_range = [&](double lo, double hi) {
    const long a = std::clamp(static_cast<long>(std::floor(lo * scale / kTileSize)), 0L, tiles_per_axis - 1);
    const long b = std::clamp(static_cast<long>(std::floor(hi * scale / kTileSize - 1e-9)), 0L, tiles_per_axis - 1);
    return std::pair{a, std::max(a, b)};
  };
  const auto [tx0, tx1] = tile_range(tl0.x, br0.x);
  const auto [ty0, ty1] = tile_range(tl0.y, br0.y);
  const long count = (tx1 - tx0 + 1) * (ty1 - ty0 + 1);
  if (count > source.max_tiles) {
    throw Error(ErrorKind::Configuration, "request needs " + std::to_string(count) + " tiles at zoom " +
                                              std::to_string(zoom) + " (limit " + std::to_string(source.max_tiles) +
                                              "); use a coarser resolution");
  }

  std::map<std::pair<long, long>, RasterImage> tiles;
  for (long ty = ty0; ty <= ty1; ++ty) {
    for (long tx = tx0; tx <= tx1; ++tx) {
      HttpRequest req;
      req.url = expand_template(source.endpoint, zoom, tx, ty);
      const HttpResponse res = send_with_retry(transport, req, source.retry);
      if (res.status == 404) continue;  // outside coverage: leave no-data
      check_response(res, req.url);
      RasterImage tile = decode_body(res, req.url);
      if (tile.width() != kTileSize || tile.height() != kTileSize) {
        throw Error(ErrorKind::Service, req.url + " returned a " + std::to_string(tile.width()) + "x" +
                                            std::to_string(tile.height()) + " tile");
      }
      tiles.emplace(std::pair{tx, ty}, std::move(tile));
    }
  }

  RasterImage out(width, height, 3, RepresentationId::Rep5);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double x = bbox.min_x + (c + 0.5) * resolution;
      const double y = bbox.max_y - (r + 0.5) * resolution;
      const GlobalPixel g = to_global(x, y, geographic);
      const double gx = g.x * scale, gy = g.y * scale;
      const long tx = static_cast<long>(std::floor(gx / kTileSize));
      const long ty = static_cast<long>(std::floor(gy / kTileSize));
      const auto it = tiles.find({tx, ty});
      if (it == tiles.end()) continue;
      const int px = std::clamp(static_cast<int>(std::floor(gx - tx * kTileSize)), 0, kTileSize - 1);
      const int py = std::clamp(static_cast<int>(std::floor(gy - ty * kTileSize)), 0, kTileSize - 1);
      const RasterImage& tile = it->second;
      if (!tile.valid(px, py)) continue;
      if (tile.channels() == 3) {
        out.set_rgb(c, r, tile.rgb(px, py));
      } else {
        const uint8_t v = tile.gray(px, py);
        out.set_rgb(c, r, Rgb{v, v, v});
      }
    }
  }
  return out;
}

void write_atomically(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
  const auto tmp = path.string() + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  detail::write_file_bytes(tmp, bytes);
  std::filesystem::rename(tmp, path);
}

}  // namespace

bool crs_northing_first(const std::string& crs_id) {
  const auto code = epsg_code(crs_id);
  if (!code) return false;
  static const std::set<int> northing_first = {
      4326, 4258, 4269, 4267, 4283, 4612, 4617, 4619, 4979, 4937,  // geographic lat/lon
      2193,                                                              // NZGD2000 / NZTM
      3006, 3007, 3008, 3009, 3010, 3011, 3012, 3013, 3014, 3015, 3016,  // SWEREF99
      3017, 3018,
      31466, 31467, 31468, 31469,                                        // DHDN Gauss-Kruger
      3844,                                                              // Stereo 70
  };
  return northing_first.count(*code) > 0;
}

WmsRequest make_wms_request(const Extent2D& extent, const std::string& crs_id, double resolution,
                            const std::string& endpoint, const std::string& layer) {
  if (!(resolution > 0.0)) throw Error(ErrorKind::InvalidArgument, "resolution must be positive");
  if (!(extent.width() > 0.0) || !(extent.height() > 0.0)) {
    throw Error(ErrorKind::DegenerateInput, "satellite request extent has zero width or height");
  }
  WmsRequest req;
  req.endpoint = endpoint;
  req.layer = layer;
  req.crs_id = crs_id;
  const auto [w, h] = bev_dimensions(extent, resolution);
  req.width = w;
  req.height = h;
  req.bbox = {extent.min_x, extent.max_y - h * resolution, extent.min_x + w * resolution, extent.max_y};
  return req;
}

std::string wms_getmap_url(const WmsRequest& r) {
  const bool ne = r.axis_order == AxisOrder::NorthEast ||
                  (r.axis_order == AxisOrder::Auto && crs_northing_first(r.crs_id));
  const auto& b = r.bbox;
  const std::string bbox = ne ? format_number(b.min_y) + "," + format_number(b.min_x) + "," +
                                    format_number(b.max_y) + "," + format_number(b.max_x)
                              : format_number(b.min_x) + "," + format_number(b.min_y) + "," +
                                    format_number(b.max_x) + "," + format_number(b.max_y);
  std::string url = r.endpoint;
  if (url.find('?') == std::string::npos) {
    url += '?';
  } else if (url.back() != '?' && url.back() != '&') {
    url += '&';
  }
  url += "SERVICE=WMS&VERSION=1.3.0&REQUEST=GetMap";
  url += "&LAYERS=" + url_encode(r.layer, ",:");
  url += "&STYLES=" + url_encode(r.style, ",:");
  url += "&CRS=" + url_encode(r.crs_id, ":");
  url += "&BBOX=" + bbox;
  url += "&WIDTH=" + std::to_string(r.width);
  url += "&HEIGHT=" + std::to_string(r.height);
  url += "&FORMAT=" + url_encode(r.format, "/");
  return url;
}

std::string satellite_cache_key(const Extent2D& extent, const std::string& crs_id, double resolution,
                                const SatelliteSource& source) {
  nlohmann::json key = {
      {"version", 1},
      {"kind", source.kind == SatelliteSourceKind::Wms ? "wms" : "xyz"},
      {"endpoint", source.endpoint},
      {"layer", source.layer},
      {"format", source.format},
      {"axis_order", static_cast<int>(source.axis_order)},
      {"crs", crs_id},
      {"bbox", {format_number(extent.min_x), format_number(extent.min_y), format_number(extent.max_x),
                format_number(extent.max_y)}},
      {"resolution", format_number(resolution)},
  };
  return key.dump();
}

RasterImage fetch_satellite(const Extent2D& extent, const std::string& crs_id, double resolution,
                            const SatelliteSource& source, Transport& transport, const FetchOptions& options) {
  WmsRequest req = make_wms_request(extent, crs_id, resolution, source.endpoint, source.layer);
  req.format = source.format;
  req.axis_order = source.axis_order;
  const Geotransform geo{req.bbox.min_x, req.bbox.max_y, resolution};

  std::filesystem::path png_path, meta_path;
  const std::string key = satellite_cache_key(extent, crs_id, resolution, source);
  if (!options.cache_dir.empty()) {
    const std::string digest = sha256_hex(key);
    png_path = options.cache_dir / (digest + ".png");
    meta_path = options.cache_dir / (digest + ".json");
    if (!options.refresh && std::filesystem::exists(png_path) && std::filesystem::exists(meta_path)) {
      RasterImage cached = read_png(png_path);
      if (cached.width() == req.width && cached.height() == req.height) {
        cached.set_representation(RepresentationId::Rep5);
        cached.geo = geo;
        cached.crs_id = crs_id;
        return cached;
      }
    }
  }

  RasterImage image;
  std::string source_url;
  if (source.kind == SatelliteSourceKind::Wms) {
    HttpRequest http;
    http.url = source_url = wms_getmap_url(req);
    const HttpResponse res = send_with_retry(transport, http, source.retry);
    check_response(res, http.url);
    image = decode_body(res, http.url);
    if (image.width() != req.width || image.height() != req.height) {
      throw Error(ErrorKind::Service, "WMS returned " + std::to_string(image.width()) + "x" +
                                          std::to_string(image.height()) + " for a " + std::to_string(req.width) +
                                          "x" + std::to_string(req.height) + " request");
    }
  } else {
    const auto code = epsg_code(crs_id);
    if (!code || (*code != 3857 && *code != 900913 && *code != 4326)) {
      throw Error(ErrorKind::Configuration, "XYZ tile sources need an EPSG:3857 or EPSG:4326 extent, got " + crs_id);
    }
    source_url = source.endpoint;
    image = fetch_xyz(req.bbox, req.width, req.height, resolution, *code == 4326, source, transport);
  }
  image.set_representation(RepresentationId::Rep5);
  image.geo = geo;
  image.crs_id = crs_id;

  if (!png_path.empty()) {
    const auto bytes = encode_png(image);
    nlohmann::json meta = {
        {"key", nlohmann::json::parse(key)},
        {"source_url", source_url},
        {"width", req.width},
        {"height", req.height},
        {"geotransform", {geo.origin_x, geo.origin_y, geo.cell_size}},
        {"crs", crs_id},
        {"png_sha256", sha256_hex(std::span<const uint8_t>(bytes))},
    };
    std::filesystem::create_directories(options.cache_dir);
    const std::string text = meta.dump(2) + "\n";
    write_atomically(png_path, bytes);
    write_atomically(meta_path, std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
  }
  return image;
}

Extent2D raster_extent(const RasterImage& image) {
  if (!image.geo) throw Error(ErrorKind::Alignment, "raster has no geotransform");
  const auto& g = *image.geo;
  return {g.origin_x, g.origin_y - image.height() * g.cell_size, g.origin_x + image.width() * g.cell_size,
          g.origin_y};
}

AlignmentReport align_check(const RasterImage& bev, const RasterImage& sat) {
  if (!bev.geo || !sat.geo) throw Error(ErrorKind::Alignment, "both rasters need a geotransform");
  if (bev.crs_id != sat.crs_id) {
    throw Error(ErrorKind::Alignment, "CRS mismatch: " + bev.crs_id + " vs " + sat.crs_id);
  }
  const Extent2D a = raster_extent(bev), b = raster_extent(sat);
  AlignmentReport report;
  const Extent2D inter{std::max(a.min_x, b.min_x), std::max(a.min_y, b.min_y), std::min(a.max_x, b.max_x),
                       std::min(a.max_y, b.max_y)};
  if (inter.min_x < inter.max_x && inter.min_y < inter.max_y) report.overlap = inter;
  const double cell = bev.geo->cell_size;
  report.offset_col = (sat.geo->origin_x - bev.geo->origin_x) / cell;
  report.offset_row = (bev.geo->origin_y - sat.geo->origin_y) / cell;
  report.scale = sat.geo->cell_size / cell;
  return report;
}

}  // namespace pai
