#include "pai/local_wms.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "pai/error.hpp"
#include "pai/geo_alignment.hpp"
#include "pai/image_io.hpp"

namespace pai {
namespace {

std::string percent_decode(const std::string& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == '%' && i + 2 < v.size() && std::isxdigit(static_cast<unsigned char>(v[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(v[i + 2]))) {
      out.push_back(static_cast<char>(std::stoi(v.substr(i + 1, 2), nullptr, 16)));
      i += 2;
    } else {
      out.push_back(v[i] == '+' ? ' ' : v[i]);
    }
  }
  return out;
}

std::map<std::string, std::string> query_of(const std::string& url) {
  std::map<std::string, std::string> q;
  const auto pos = url.find('?');
  if (pos == std::string::npos) return q;
  std::stringstream ss(url.substr(pos + 1));
  for (std::string kv; std::getline(ss, kv, '&');) {
    const auto eq = kv.find('=');
    std::string key = percent_decode(kv.substr(0, eq));
    for (auto& ch : key) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    q[key] = eq == std::string::npos ? "" : percent_decode(kv.substr(eq + 1));
  }
  return q;
}

HttpResponse exception_report(const std::string& code, const std::string& text) {
  return {200,
          "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
          "<ServiceExceptionReport version=\"1.3.0\" xmlns=\"http://www.opengis.net/ogc\">\n"
          "  <ServiceException code=\"" + code + "\">" + text + "</ServiceException>\n"
          "</ServiceExceptionReport>\n",
          "application/vnd.ogc.se_xml"};
}

}  // namespace

RasterWmsTransport::RasterWmsTransport(RasterImage source) : source_(std::move(source)) {
  if (!source_.geo) throw Error(ErrorKind::MissingAttribute, "WMS source raster has no geotransform");
}

HttpResponse RasterWmsTransport::send(const HttpRequest& request) {
  ++requests_;
  auto q = query_of(request.url);
  auto get = [&](const std::string& k) {
    auto it = q.find(k);
    return it == q.end() ? std::string() : it->second;
  };
  if (get("SERVICE") != "WMS" || get("REQUEST") != "GetMap" || get("VERSION") != "1.3.0") {
    return {400, "expected SERVICE=WMS&VERSION=1.3.0&REQUEST=GetMap", "text/plain"};
  }
  if (get("CRS") != source_.crs_id) return exception_report("InvalidCRS", "layer is only offered in " + source_.crs_id);
  std::vector<double> b;
  int width = 0, height = 0;
  try {
    std::stringstream ss(get("BBOX"));
    for (std::string part; std::getline(ss, part, ',');) b.push_back(std::stod(part));
    width = std::stoi(get("WIDTH"));
    height = std::stoi(get("HEIGHT"));
  } catch (const std::exception&) {
    return {400, "bad BBOX, WIDTH or HEIGHT", "text/plain"};
  }
  if (b.size() != 4 || width <= 0 || height <= 0 || width > 8192 || height > 8192) {
    return {400, "bad BBOX, WIDTH or HEIGHT", "text/plain"};
  }
  if (crs_northing_first(source_.crs_id)) b = {b[1], b[0], b[3], b[2]};
  const Extent2D box{b[0], b[1], b[2], b[3]};
  const Extent2D cover = raster_extent(source_);
  const double slack = 1e-6 * source_.geo->cell_size;
  if (box.min_x < cover.min_x - slack || box.max_x > cover.max_x + slack || box.min_y < cover.min_y - slack ||
      box.max_y > cover.max_y + slack || !(box.width() > 0) || !(box.height() > 0)) {
    return exception_report("InvalidBBOX", "BBOX outside layer coverage");
  }
  RasterImage out(width, height, source_.channels(), RepresentationId::Rep5);
  const double cx = box.width() / width, cy = box.height() / height;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      auto [sc, sr] = source_.geo->pixel_of(box.min_x + (c + 0.5) * cx, box.max_y - (r + 0.5) * cy);
      sc = std::clamp<long>(sc, 0, source_.width() - 1);
      sr = std::clamp<long>(sr, 0, source_.height() - 1);
      const int ic = static_cast<int>(sc), ir = static_cast<int>(sr);
      if (!source_.valid(ic, ir)) continue;
      if (source_.channels() == 3) {
        out.set_rgb(c, r, source_.rgb(ic, ir));
      } else {
        out.set_gray(c, r, source_.gray(ic, ir));
      }
    }
  }
  const auto png = encode_png(out);
  return {200, std::string(png.begin(), png.end()), "image/png"};
}

}  // namespace pai
