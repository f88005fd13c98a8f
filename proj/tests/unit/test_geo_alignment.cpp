#include <doctest.h>

#include <cstdio>
#include <jpeglib.h>

#include <random>

#include "pai/error.hpp"
#include "pai/geo_alignment.hpp"
#include "pai/hash.hpp"
#include "pai/image_io.hpp"
#include "pai/local_wms.hpp"
#include "support/fake_wms.hpp"
#include "support/temp_dir.hpp"

using namespace pai;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

std::string what_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

test::RecordingTransport wms_transport(const Extent2D& coverage) {
  return test::RecordingTransport([coverage](const HttpRequest& req) {
    return test::answer_getmap(test::parse_query(req.url), coverage);
  });
}

SatelliteSource wms_source(const std::string& endpoint = "http://wms.test/service") {
  SatelliteSource s;
  s.endpoint = endpoint;
  s.layer = "imagery";
  s.retry.initial_backoff = std::chrono::milliseconds(0);
  return s;
}

RasterImage geo_raster(int w, int h, double ox, double oy, double cell, const std::string& crs = "EPSG:2263") {
  RasterImage img(w, h, 1, RepresentationId::Rep1);
  img.geo = Geotransform{ox, oy, cell};
  img.crs_id = crs;
  return img;
}

std::string jpeg_bytes(int w, int h, Rgb color) {
  jpeg_compress_struct info;
  jpeg_error_mgr err;
  info.err = jpeg_std_error(&err);
  jpeg_create_compress(&info);
  unsigned char* out = nullptr;
  unsigned long size = 0;
  jpeg_mem_dest(&info, &out, &size);
  info.image_width = static_cast<JDIMENSION>(w);
  info.image_height = static_cast<JDIMENSION>(h);
  info.input_components = 3;
  info.in_color_space = JCS_RGB;
  jpeg_set_defaults(&info);
  jpeg_set_quality(&info, 95, TRUE);
  jpeg_start_compress(&info, TRUE);
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
  for (int c = 0; c < w; ++c) row[c * 3] = color.r, row[c * 3 + 1] = color.g, row[c * 3 + 2] = color.b;
  while (info.next_scanline < info.image_height) {
    JSAMPROW p = row.data();
    jpeg_write_scanlines(&info, &p, 1);
  }
  jpeg_finish_compress(&info);
  jpeg_destroy_compress(&info);
  std::string bytes(reinterpret_cast<char*>(out), size);
  std::free(out);
  return bytes;
}

}  // namespace

TEST_SUITE("geo_alignment") {

TEST_CASE("request size follows extent over resolution") {
  const auto req = make_wms_request({0, 0, 100, 50}, "EPSG:32618", 0.5, "http://x/wms", "sat");
  CHECK(req.width == 200);
  CHECK(req.height == 100);
  CHECK(req.bbox == Extent2D{0, 0, 100, 50});

  // a non-multiple extent grows right and down to whole pixels
  const auto odd = make_wms_request({10, 20, 10.7, 20.3}, "EPSG:32618", 0.25, "http://x/wms", "sat");
  CHECK(odd.width == 3);
  CHECK(odd.height == 2);
  CHECK(odd.bbox.min_x == 10.0);
  CHECK(odd.bbox.max_y == 20.3);
  CHECK(odd.bbox.max_x == doctest::Approx(10.75));
  CHECK(odd.bbox.min_y == doctest::Approx(19.8));
  CHECK(std::abs(double(odd.width) / odd.height - odd.bbox.width() / odd.bbox.height()) * odd.height <= 1.0);

  CHECK(kind_of([] { make_wms_request({0, 0, 0, 5}, "EPSG:32618", 1, "u", "l"); }) == ErrorKind::DegenerateInput);
  CHECK(kind_of([] { make_wms_request({0, 0, 5, 5}, "EPSG:32618", 0, "u", "l"); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("GetMap query uses WMS 1.3.0 axis order") {
  WmsRequest req;
  req.endpoint = "https://maps.example/wms";
  req.layer = "ortho 2021";
  req.bbox = {430000, 4460000, 430100, 4460050};
  req.width = 200;
  req.height = 100;

  req.crs_id = "EPSG:3006";  // northing-first projected CRS
  std::string url = wms_getmap_url(req);
  CHECK(url.find("BBOX=4460000,430000,4460050,430100") != std::string::npos);
  CHECK(url.rfind("https://maps.example/wms?SERVICE=WMS&VERSION=1.3.0&REQUEST=GetMap", 0) == 0);
  CHECK(url.find("&LAYERS=ortho%202021") != std::string::npos);
  CHECK(url.find("&CRS=EPSG:3006") != std::string::npos);
  CHECK(url.find("&WIDTH=200&HEIGHT=100&FORMAT=image/png") != std::string::npos);

  req.crs_id = "EPSG:32618";  // UTM is easting-first
  CHECK(wms_getmap_url(req).find("BBOX=430000,4460000,430100,4460050") != std::string::npos);
  req.axis_order = AxisOrder::NorthEast;
  CHECK(wms_getmap_url(req).find("BBOX=4460000,430000,4460050,430100") != std::string::npos);

  req.axis_order = AxisOrder::Auto;
  req.crs_id = "EPSG:4326";
  req.bbox = {-74.01, 40.70, -74.00, 40.71};
  CHECK(wms_getmap_url(req).find("BBOX=40.7,-74.01,40.71,-74") != std::string::npos);
  req.crs_id = "CRS:84";
  CHECK(wms_getmap_url(req).find("BBOX=-74.01,40.7,-74,40.71") != std::string::npos);

  req.endpoint = "https://maps.example/wms?map=city&";
  CHECK(wms_getmap_url(req).rfind("https://maps.example/wms?map=city&SERVICE=WMS", 0) == 0);

  CHECK(crs_northing_first("epsg:4326"));
  CHECK_FALSE(crs_northing_first("EPSG:2263"));
  CHECK_FALSE(crs_northing_first("LOCAL:site"));
}

TEST_CASE("fetch returns a georeferenced Rep5 image matching the extent") {
  const Extent2D coverage{0, 0, 1000, 1000};
  auto transport = wms_transport(coverage);
  const Extent2D extent{100, 200, 150, 225};
  const auto img = fetch_satellite(extent, "EPSG:2263", 0.5, wms_source(), transport);
  CHECK(transport.requests.size() == 1);
  CHECK(img.representation() == RepresentationId::Rep5);
  CHECK(img.width() == 100);
  CHECK(img.height() == 50);
  REQUIRE(img.geo);
  CHECK(*img.geo == Geotransform{100, 225, 0.5});
  CHECK(img.crs_id == "EPSG:2263");
  for (int r = 0; r < img.height(); r += 7) {
    for (int c = 0; c < img.width(); c += 5) {
      const auto [x, y] = img.geo->world_center(c, r);
      CHECK(img.rgb(c, r) == test::truth_color(x, y));
    }
  }
}

TEST_CASE("repeated fetch is served from the cache") {
  test::TempDir dir;
  auto transport = wms_transport({0, 0, 1000, 1000});
  const FetchOptions opts{dir / "cache", false};
  const Extent2D extent{10, 10, 60, 35};
  const auto first = fetch_satellite(extent, "EPSG:2263", 0.5, wms_source(), transport, opts);
  REQUIRE(transport.requests.size() == 1);
  const auto second = fetch_satellite(extent, "EPSG:2263", 0.5, wms_source(), transport, opts);
  CHECK(transport.requests.size() == 1);
  CHECK(second == first);

  const std::string digest = sha256_hex(satellite_cache_key(extent, "EPSG:2263", 0.5, wms_source()));
  const auto png = dir / "cache" / (digest + ".png");
  REQUIRE(std::filesystem::exists(png));
  REQUIRE(std::filesystem::exists(dir / "cache" / (digest + ".json")));
  const std::string before = sha256_file(png);

  // a refresh re-downloads and rewrites byte-identical content
  fetch_satellite(extent, "EPSG:2263", 0.5, wms_source(), transport, {dir / "cache", true});
  CHECK(transport.requests.size() == 2);
  CHECK(sha256_file(png) == before);

  // different resolution, different key
  fetch_satellite(extent, "EPSG:2263", 1.0, wms_source(), transport, opts);
  CHECK(transport.requests.size() == 3);
}

TEST_CASE("service exceptions and HTTP failures") {
  auto transport = wms_transport({0, 0, 100, 100});
  const std::string msg = what_of([&] { fetch_satellite({50, 50, 150, 80}, "EPSG:2263", 1.0, wms_source(), transport); });
  CHECK(msg.find(test::service_exception_xml("BBOX outside layer coverage")) != std::string::npos);
  CHECK(kind_of([&] { fetch_satellite({50, 50, 150, 80}, "EPSG:2263", 1.0, wms_source(), transport); }) ==
        ErrorKind::Service);

  test::RecordingTransport failing([](const HttpRequest&) { return HttpResponse{500, "boom", "text/plain"}; });
  CHECK(kind_of([&] { fetch_satellite({0, 0, 10, 10}, "EPSG:2263", 1.0, wms_source(), failing); }) ==
        ErrorKind::Transport);
  CHECK(what_of([&] { fetch_satellite({0, 0, 10, 10}, "EPSG:2263", 1.0, wms_source(), failing); }).find("HTTP 500") !=
        std::string::npos);
  CHECK(failing.requests.size() == 2);  // 500 is not retried

  test::RecordingTransport wrong_size([](const HttpRequest&) {
    const auto png = encode_png(RasterImage(3, 3, 3, RepresentationId::Rep5));
    return HttpResponse{200, std::string(png.begin(), png.end()), "image/png"};
  });
  CHECK(kind_of([&] { fetch_satellite({0, 0, 10, 10}, "EPSG:2263", 1.0, wms_source(), wrong_size); }) ==
        ErrorKind::Service);

  test::RecordingTransport garbage([](const HttpRequest&) { return HttpResponse{200, "not an image", "image/png"}; });
  CHECK(kind_of([&] { fetch_satellite({0, 0, 10, 10}, "EPSG:2263", 1.0, wms_source(), garbage); }) ==
        ErrorKind::Service);
}

TEST_CASE("transient failures are retried with backoff") {
  int calls = 0;
  test::RecordingTransport flaky([&](const HttpRequest& req) -> HttpResponse {
    if (++calls == 1) throw Error(ErrorKind::Transport, "connection refused");
    if (calls == 2) return {503, "busy", "text/plain"};
    return test::answer_getmap(test::parse_query(req.url), {0, 0, 100, 100});
  });
  std::vector<long> sleeps;
  RetryPolicy policy{3, std::chrono::milliseconds(100), 2.0};
  HttpRequest req;
  req.url = wms_getmap_url(make_wms_request({0, 0, 10, 10}, "EPSG:2263", 1.0, "http://x/wms", "l"));
  const auto res = send_with_retry(flaky, req, policy, [&](auto d) { sleeps.push_back(d.count()); });
  CHECK(res.status == 200);
  CHECK(calls == 3);
  CHECK(sleeps == std::vector<long>{100, 200});

  calls = 0;
  sleeps.clear();
  test::RecordingTransport down([&](const HttpRequest&) -> HttpResponse {
    ++calls;
    throw Error(ErrorKind::Transport, "timeout");
  });
  CHECK_THROWS_AS(send_with_retry(down, req, policy, [&](auto d) { sleeps.push_back(d.count()); }), Error);
  CHECK(calls == 3);
  CHECK(sleeps.size() == 2);
}

TEST_CASE("XYZ tiles are mosaicked onto the request grid") {
  // colour encodes the tile pixel, so every output pixel names its source
  auto tile_png = [](long tx, long ty) {
    RasterImage t(256, 256, 3, RepresentationId::Rep5);
    for (int r = 0; r < 256; ++r) {
      for (int c = 0; c < 256; ++c) t.set_rgb(c, r, Rgb{uint8_t(c), uint8_t(r), uint8_t(tx * 16 + ty)});
    }
    const auto bytes = encode_png(t);
    return std::string(bytes.begin(), bytes.end());
  };
  test::RecordingTransport tiles([&](const HttpRequest& req) -> HttpResponse {
    int z = 0;
    long x = 0, y = 0;
    if (std::sscanf(req.url.c_str(), "http://tiles.test/%d/%ld/%ld.png", &z, &x, &y) != 3) return {400, "", ""};
    if (y == 2) return {404, "", "text/plain"};
    return {200, tile_png(x, y), "image/png"};
  });
  SatelliteSource src;
  src.kind = SatelliteSourceKind::Xyz;
  src.endpoint = "http://tiles.test/{z}/{x}/{y}.png";

  // tile (1, 1) at zoom 2 in Web Mercator, sampled at its native resolution
  const double half = 20037508.342789244;
  const double span = 2 * half / 4;
  const Extent2D tile11{-half + span, half - 2 * span, -half + 2 * span, half - span};
  auto img = fetch_satellite(tile11, "EPSG:3857", span / 256, src, tiles);
  REQUIRE(tiles.requests.size() == 1);
  CHECK(tiles.requests[0].url == "http://tiles.test/2/1/1.png");
  REQUIRE(img.width() == 256);
  REQUIRE(img.height() == 256);
  for (int r = 0; r < 256; r += 15) {
    for (int c = 0; c < 256; c += 15) CHECK(img.rgb(c, r) == Rgb{uint8_t(c), uint8_t(r), 17});
  }

  // two tiles side by side; the row below is missing (404) and stays no-data
  tiles.requests.clear();
  const Extent2D wide{-half + span, half - 3 * span, -half + 3 * span, half - span};
  img = fetch_satellite(wide, "EPSG:3857", span / 256, src, tiles);
  CHECK(tiles.requests.size() == 4);
  CHECK(img.width() == 512);
  CHECK(img.height() == 512);
  CHECK(img.rgb(10, 10) == Rgb{10, 10, 17});
  CHECK(img.rgb(266, 10) == Rgb{10, 10, 33});
  CHECK_FALSE(img.valid(10, 300));

  CHECK(kind_of([&] { fetch_satellite({0, 0, 10, 10}, "EPSG:2263", 1.0, src, tiles); }) == ErrorKind::Configuration);
  src.max_tiles = 1;
  CHECK(kind_of([&] { fetch_satellite(wide, "EPSG:3857", span / 256, src, tiles); }) == ErrorKind::Configuration);
}

TEST_CASE("JPEG tiles decode") {
  const std::string bytes = jpeg_bytes(16, 8, Rgb{200, 100, 50});
  const auto img = decode_image(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size()));
  CHECK(img.width() == 16);
  CHECK(img.height() == 8);
  CHECK(img.channels() == 3);
  CHECK(img.valid(3, 3));
  CHECK(std::abs(int(img.rgb(5, 5).r) - 200) <= 3);
  CHECK(std::abs(int(img.rgb(5, 5).g) - 100) <= 3);
  CHECK(std::abs(int(img.rgb(5, 5).b) - 50) <= 3);
  const uint8_t junk[] = {0xFF, 0xD8, 0xFF, 0x00, 0x01};
  CHECK_THROWS_AS(decode_image(junk), Error);
  const uint8_t other[] = {'G', 'I', 'F', '8'};
  CHECK_THROWS_AS(decode_image(other), Error);
}

TEST_CASE("alignment from geotransforms") {
  const auto bev = geo_raster(100, 50, 1000, 2000, 0.5);
  auto report = align_check(bev, bev);
  CHECK(report.offset_col == 0.0);
  CHECK(report.offset_row == 0.0);
  CHECK(report.scale == 1.0);
  REQUIRE(report.overlap);
  CHECK(*report.overlap == Extent2D{1000, 1975, 1050, 2000});

  report = align_check(bev, geo_raster(100, 50, 1000.5, 2000, 0.5));
  CHECK(report.offset_col == 1.0);
  CHECK(report.offset_row == 0.0);

  report = align_check(bev, geo_raster(10, 10, 5000, 2000, 0.5));
  CHECK_FALSE(report.overlap);

  CHECK(kind_of([&] { align_check(bev, geo_raster(100, 50, 1000, 2000, 0.5, "EPSG:32618")); }) == ErrorKind::Alignment);
  CHECK(kind_of([&] { align_check(bev, RasterImage(4, 4, 1, RepresentationId::Rep5)); }) == ErrorKind::Alignment);
}

TEST_CASE("partial overlap equals the brute-force rectangle intersection") {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> origin(0, 200), size(1, 120);
  for (int trial = 0; trial < 200; ++trial) {
    // integer-valued geometry keeps the oracle exact
    const int ax = origin(rng), ay = origin(rng) + 200, aw = size(rng), ah = size(rng);
    const int bx = origin(rng), by = origin(rng) + 200, bw = size(rng), bh = size(rng);
    const auto report = align_check(geo_raster(aw, ah, ax, ay, 1.0), geo_raster(bw, bh, bx, by, 1.0));
    // brute force: count unit cells inside both rectangles
    long cells = 0;
    int minx = INT32_MAX, maxx = INT32_MIN, miny = INT32_MAX, maxy = INT32_MIN;
    for (int x = 0; x < 400; ++x) {
      for (int y = 0; y < 600; ++y) {
        const bool in_a = x >= ax && x < ax + aw && y >= ay - ah && y < ay;
        const bool in_b = x >= bx && x < bx + bw && y >= by - bh && y < by;
        if (!(in_a && in_b)) continue;
        ++cells;
        minx = std::min(minx, x), maxx = std::max(maxx, x + 1);
        miny = std::min(miny, y), maxy = std::max(maxy, y + 1);
      }
    }
    if (cells == 0) {
      CHECK_FALSE(report.overlap);
    } else {
      REQUIRE(report.overlap);
      CHECK(*report.overlap == Extent2D{double(minx), double(miny), double(maxx), double(maxy)});
    }
    CHECK(report.offset_col == bx - ax);
    CHECK(report.offset_row == ay - by);
  }
}

TEST_CASE("real HTTP round trip through the fixture server") {
  test::FakeWmsServer server({0, 0, 500, 500});
  HttplibTransport http;
  test::TempDir dir;
  const auto img = fetch_satellite({20, 30, 40, 40}, "EPSG:2263", 0.25, wms_source(server.wms_url()), http,
                                   {dir / "cache", false});
  CHECK(server.hits == 1);
  CHECK(img.width() == 80);
  CHECK(img.height() == 40);
  CHECK(img.rgb(0, 0) == test::truth_color(20.125, 39.875));
  fetch_satellite({20, 30, 40, 40}, "EPSG:2263", 0.25, wms_source(server.wms_url()), http, {dir / "cache", false});
  CHECK(server.hits == 1);

  HttpRequest health;
  health.url = server.base_url() + "/healthz";
  const auto res = http.send(health);
  CHECK(res.status == 200);
  CHECK(res.body.find("\"ok\"") != std::string::npos);

  HttpRequest missing;
  missing.url = server.base_url() + "/nope";
  CHECK(http.send(missing).status == 404);

  HttpRequest refused;
  refused.url = "http://127.0.0.1:1/wms";
  refused.timeout = std::chrono::milliseconds(500);
  CHECK(kind_of([&] { http.send(refused); }) == ErrorKind::Transport);
}

TEST_CASE("URL parsing and encoding") {
  auto u = parse_url("https://Example.com:8443/a/b?c=d");
  CHECK(u.scheme == "https");
  CHECK(u.host == "Example.com");
  CHECK(u.port == 8443);
  CHECK(u.target == "/a/b?c=d");
  u = parse_url("http://h");
  CHECK(u.port == 80);
  CHECK(u.target == "/");
  CHECK(kind_of([] { parse_url("ftp://h/x"); }) == ErrorKind::Transport);
  CHECK(url_encode("a b&c/d", "/") == "a%20b%26c/d");
}

TEST_CASE("hash and base64 helpers") {
  CHECK(sha256_hex(std::string_view("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex(std::string_view("")) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(base64_encode("hello") == "aGVsbG8=");
  CHECK(base64_decode("aGVsbG8=") == "hello");
  CHECK(base64_decode("aGk=") == "hi");
  CHECK(base64_decode("") == "");
  std::string all;
  for (int i = 0; i < 256; ++i) all.push_back(char(i));
  CHECK(base64_decode(base64_encode(all)) == all);
  CHECK_THROWS_AS(base64_decode("abc"), Error);
  CHECK_THROWS_AS(base64_decode("ab!d"), Error);
}


TEST_CASE("offline WMS serves the source raster pixel for pixel") {
  for (const std::string crs : {"EPSG:2263", "EPSG:4326"}) {
    CAPTURE(crs);
    const double cell = crs == "EPSG:4326" ? 0.25 : 0.5;
    RasterImage src(40, 20, 3, RepresentationId::Rep5);
    src.geo = Geotransform{10.0, 50.0, cell};
    src.crs_id = crs;
    for (int r = 0; r < 20; ++r) {
      for (int c = 0; c < 40; ++c) src.set_rgb(c, r, Rgb{uint8_t(c * 5), uint8_t(r * 10), uint8_t((c + r) % 7 * 30)});
    }
    src.set_invalid(3, 4);
    RasterWmsTransport wms(src);
    const Extent2D full = raster_extent(src);
    const RasterImage got = fetch_satellite(full, crs, cell, wms_source("file:///ortho.tif"), wms);
    CHECK(got.width() == 40);
    CHECK(got.height() == 20);
    CHECK(got.pixels() == src.pixels());
    CHECK_FALSE(got.valid(3, 4));
    CHECK(wms.request_count() == 1);

    // a sub-window at three times the cell size picks the pixel under each centre
    const Extent2D sub{full.min_x + 4 * cell, full.min_y + 6 * cell, full.min_x + 16 * cell, full.max_y - 2 * cell};
    const RasterImage coarse = fetch_satellite(sub, crs, 3 * cell, wms_source(), wms);
    REQUIRE(coarse.width() == 4);
    REQUIRE(coarse.height() == 4);
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) CHECK(coarse.rgb(c, r) == src.rgb(5 + 3 * c, 3 + 3 * r));
    }
  }
}

TEST_CASE("offline WMS rejects requests it cannot answer") {
  RasterImage src(10, 10, 1, RepresentationId::Rep5);
  src.geo = Geotransform{0.0, 10.0, 1.0};
  src.crs_id = "EPSG:2263";
  RasterWmsTransport wms(src);
  CHECK(kind_of([&] { fetch_satellite({5, 5, 15, 9}, "EPSG:2263", 1.0, wms_source(), wms); }) ==
        ErrorKind::Service);
  CHECK(kind_of([&] { fetch_satellite({1, 1, 5, 5}, "EPSG:3857", 1.0, wms_source(), wms); }) ==
        ErrorKind::Service);
  CHECK(wms.send({"GET", "x?SERVICE=WMS&VERSION=1.1.1&REQUEST=GetMap"}).status == 400);
  CHECK(wms.send({"GET", "x?service=wms&version=1.3.0&request=GetMap&crs=EPSG:2263&bbox=0,0,a,b&width=2&height=2"})
            .status == 400);
}

}  // TEST_SUITE
