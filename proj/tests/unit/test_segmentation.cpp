#include <doctest.h>

#include <httplib.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <thread>

#include <json.hpp>

#include "pai/error.hpp"
#include "pai/feature_class.hpp"
#include "pai/hash.hpp"
#include "pai/image_io.hpp"
#include "pai/polygon.hpp"
#include "pai/segmentation.hpp"
#include "support/fake_wms.hpp"

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

Bitmask random_mask(std::mt19937& rng, int w, int h, double fill) {
  std::bernoulli_distribution on(fill);
  Bitmask m(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) m.set(c, r, on(rng));
  }
  return m;
}

// Reference 4-connected labelling by repeated relaxation (no shared code with the tracer).
std::vector<int> relax_labels(const Bitmask& m) {
  std::vector<int> label(m.bits.size(), -1);
  for (std::size_t k = 0; k < label.size(); ++k) {
    if (m.bits[k]) label[k] = static_cast<int>(k);
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (int r = 0; r < m.height; ++r) {
      for (int c = 0; c < m.width; ++c) {
        const std::size_t k = static_cast<std::size_t>(r) * m.width + c;
        if (label[k] < 0) continue;
        auto pull = [&](int nc, int nr) {
          if (nc < 0 || nr < 0 || nc >= m.width || nr >= m.height) return;
          const int other = label[static_cast<std::size_t>(nr) * m.width + nc];
          if (other >= 0 && other < label[k]) label[k] = other, changed = true;
        };
        pull(c - 1, r), pull(c + 1, r), pull(c, r - 1), pull(c, r + 1);
      }
    }
  }
  return label;
}

RasterImage disk_image(int size, double cx, double cy, double radius) {
  RasterImage img(size, size, 1, RepresentationId::Rep1);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      img.set_gray(c, r, std::hypot(c - cx, r - cy) <= radius ? 255 : 0);
    }
  }
  return img;
}

RasterImage two_squares() {
  RasterImage img(40, 20, 1, RepresentationId::Rep2);
  for (int r = 0; r < 20; ++r) {
    for (int c = 0; c < 40; ++c) img.set_gray(c, r, 20);
  }
  for (int r = 5; r < 15; ++r) {
    for (int c = 3; c < 13; ++c) img.set_gray(c, r, 200);
    for (int c = 25; c < 33; ++c) img.set_gray(c, r, 200);
  }
  return img;
}

/// Segmentation service on 127.0.0.1 backed by the stub.
class StubServer {
 public:
  explicit StubServer(int failures_before_success = 0) : failures_(failures_before_success) {
    server_.Post("/segment", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      if (failures_ > 0) {
        --failures_;
        res.status = 503;
        res.set_content("warming up", "text/plain");
        return;
      }
      try {
        res.set_content(stub_service_response(req.body), "application/json");
      } catch (const Error& e) {
        res.status = 400;
        res.set_content(e.what(), "text/plain");
      }
    });
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok","backend":"stub"})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::atomic<int> hits{0};

 private:
  std::atomic<int> failures_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RemoteOptions fast_options(const std::string& endpoint) {
  RemoteOptions o;
  o.endpoint = endpoint;
  o.retry.initial_backoff = std::chrono::milliseconds(1);
  o.timeout = std::chrono::milliseconds(5000);
  return o;
}

}  // namespace

TEST_SUITE("segmentation_gateway") {
  TEST_CASE("feature classes follow the inventory table grouping") {
    CHECK(all_feature_classes().size() == 23);
    int planimetric = 0;
    for (auto c : all_feature_classes()) planimetric += group_of(c) == FeatureGroup::Planimetric;
    CHECK(planimetric == 10);
    CHECK(group_of(FeatureClass::RetainingWall) == FeatureGroup::Planimetric);
    CHECK(group_of(FeatureClass::Bench) == FeatureGroup::Volumetric);
    CHECK(display_name(FeatureClass::DetectableWarningSurface) == "Detectable warning surface");
    CHECK(parse_feature_class("Fire Hydrant") == FeatureClass::FireHydrant);
    CHECK(parse_feature_class("fire_hydrant") == FeatureClass::FireHydrant);
    CHECK(parse_feature_class("CURB-RAMP") == FeatureClass::CurbRamp);
    CHECK_FALSE(parse_feature_class("lamp post").has_value());
    for (auto c : all_feature_classes()) {
      CHECK(parse_feature_class(display_name(c)) == c);
      CHECK(feature_from_las_code(las_code(c)) == c);
      CHECK(las_code(c) >= 64);
      CHECK(las_code(c) <= 86);
    }
    CHECK_FALSE(feature_from_las_code(63).has_value());
    CHECK_FALSE(feature_from_las_code(87).has_value());
    CHECK(tie_break_less(FeatureClass::Crosswalk, FeatureClass::Sidewalk));
    CHECK(tie_break_less(FeatureClass::TrafficBarrier, FeatureClass::Bench));
    CHECK(to_string(ExtractionLevel::NA) == "N/A");
    CHECK(parse_extraction_level("n/a") == ExtractionLevel::NA);
    CHECK(kind_of([] { parse_extraction_level("X"); }) == ErrorKind::Parse);
  }

  TEST_CASE("ring area, orientation and half-open containment") {
    const Ring square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};  // counterclockwise with y up
    CHECK(signed_area(square) == doctest::Approx(1.0));
    CHECK(screen_signed_area(square) == doctest::Approx(-1.0));
    Polygon p{square, {}};
    normalize_orientation(p, true);
    CHECK(screen_signed_area(p.outer) > 0);
    // y up: left and bottom edges inside, right and top outside
    CHECK(ring_contains(square, 0.0, 0.5, false));
    CHECK_FALSE(ring_contains(square, 1.0, 0.5, false));
    CHECK(ring_contains(square, 0.5, 0.0, false));
    CHECK_FALSE(ring_contains(square, 0.5, 1.0, false));
    // y down: the bottom as displayed is the larger row
    CHECK(ring_contains(square, 0.5, 1.0, true));
    CHECK_FALSE(ring_contains(square, 0.5, 0.0, true));
    // a 2x2 tiling of unit squares claims every lattice point exactly once
    for (double x = 0.0; x <= 2.0; x += 0.5) {
      for (double y = 0.0; y <= 2.0; y += 0.5) {
        int owners = 0;
        for (int i = 0; i < 2; ++i) {
          for (int j = 0; j < 2; ++j) {
            const Ring t{{double(i), double(j)}, {i + 1.0, double(j)}, {i + 1.0, j + 1.0}, {double(i), j + 1.0}};
            owners += ring_contains(t, x, y, false);
          }
        }
        CHECK(owners == (x < 2.0 && y < 2.0 ? 1 : 0));
      }
    }
  }

  TEST_CASE("collinear removal, simplification and canonical rings") {
    const Ring r{{0, 0}, {1, 0}, {2, 0}, {2, 0}, {2, 2}, {0, 2}, {0, 1}};
    CHECK(remove_collinear(r) == Ring{{0, 0}, {2, 0}, {2, 2}, {0, 2}});
    Ring wiggly;
    for (int i = 0; i < 20; ++i) wiggly.push_back({double(i), i % 2 ? 0.01 : 0.0});
    wiggly.push_back({19, 10});
    wiggly.push_back({0, 10});
    const Ring s = simplify(wiggly, 0.1);
    CHECK(s.size() == 4);
    CHECK(std::abs(signed_area(s) - signed_area(wiggly)) < 0.5);
    const Ring rotated{{2, 2}, {0, 2}, {0, 0}, {2, 0}};
    CHECK(canonical_ring(rotated) == canonical_ring(Ring{{0, 0}, {2, 0}, {2, 2}, {0, 2}}));
    CHECK(is_simple(rotated));
    CHECK_FALSE(is_simple(Ring{{0, 0}, {2, 2}, {2, 0}, {0, 2}}));
  }

  TEST_CASE("traced outlines reproduce random masks exactly") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 60; ++trial) {
      const int w = 3 + trial % 17, h = 2 + trial % 13;
      const Bitmask m = random_mask(rng, w, h, 0.3 + 0.01 * trial);
      const auto polys = trace_components(m);
      const auto ref = relax_labels(m);
      std::set<int> ref_components;
      for (int l : ref) {
        if (l >= 0) ref_components.insert(l);
      }
      REQUIRE(polys.size() == ref_components.size());
      std::set<int> seen;
      std::size_t total = 0;
      for (const auto& poly : polys) {
        CHECK(screen_signed_area(poly.outer) > 0);
        CHECK(is_simple(poly.outer));
        for (const auto& hole : poly.holes) {
          CHECK(screen_signed_area(hole) < 0);
          CHECK(is_simple(hole));
        }
        // brute-force containment over every pixel centre
        std::set<int> labels;
        std::size_t inside = 0;
        for (int r = 0; r < h; ++r) {
          for (int c = 0; c < w; ++c) {
            if (!polygon_contains(poly, c, r, true)) continue;
            ++inside;
            const int l = ref[static_cast<std::size_t>(r) * w + c];
            REQUIRE(l >= 0);
            labels.insert(l);
          }
        }
        CHECK(labels.size() == 1);
        const int l = *labels.begin();
        CHECK(seen.insert(l).second);
        CHECK(inside == static_cast<std::size_t>(std::count(ref.begin(), ref.end(), l)));
        CHECK(polygon_area(poly) == doctest::Approx(double(inside)));
        total += inside;
        const Bitmask back = rasterize(poly, w, h);
        CHECK(back.count() == inside);
      }
      CHECK(total == m.count());
    }
  }

  TEST_CASE("ring with a hole and a diagonal saddle") {
    Bitmask m(5, 5);
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) m.set(c, r, !(r == 2 && c == 2));
    }
    auto polys = trace_components(m);
    REQUIRE(polys.size() == 1);
    CHECK(polys[0].holes.size() == 1);
    CHECK(polygon_area(polys[0]) == doctest::Approx(24.0));
    CHECK(polys[0].outer.size() == 4);
    CHECK(bounding_box(polys[0].outer).min_x == -0.5);

    // two holes touching at a corner
    Bitmask s(4, 4);
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) s.set(c, r, true);
    }
    s.set(1, 1, false);
    s.set(2, 2, false);
    polys = trace_components(s);
    REQUIRE(polys.size() == 1);
    CHECK(polygon_area(polys[0]) == doctest::Approx(14.0));
    CHECK(polys[0].holes.size() == 2);
    for (const auto& h : polys[0].holes) CHECK(is_simple(h));
  }

  TEST_CASE("stub disk area within 2 percent of the analytic disk") {
    const double radius = 20.0;
    const RasterImage img = disk_image(64, 31.3, 32.6, radius);
    const auto masks = segment_stub(img, {{31, 33, true}}, FeatureClass::ManholeCover, {RepresentationId::Rep1, "bev"});
    REQUIRE(masks.size() == 1);
    const double analytic = std::numbers::pi * radius * radius;
    CHECK(std::abs(polygon_area(masks[0].polygon) - analytic) / analytic < 0.02);
    CHECK(masks[0].feature_class == FeatureClass::ManholeCover);
    CHECK(masks[0].score == 1.0);
    CHECK(masks[0].polygon.holes.empty());
    CHECK(is_simple(masks[0].polygon.outer));
    // simplification keeps the area close and shrinks the vertex count
    const auto coarse = segment_stub(img, {{31, 33, true}}, FeatureClass::ManholeCover, {}, {10, 1.0});
    CHECK(coarse[0].polygon.outer.size() < masks[0].polygon.outer.size());
    CHECK(std::abs(polygon_area(coarse[0].polygon) - analytic) / analytic < 0.05);
  }

  TEST_CASE("stub flood region matches a threshold oracle") {
    RasterImage img(30, 20, 1, RepresentationId::Rep1);
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> noise(0, 8);
    for (int r = 0; r < 20; ++r) {
      for (int c = 0; c < 30; ++c) img.set_gray(c, r, static_cast<uint8_t>((c >= 10 && c < 22 && r >= 4 && r < 15 ? 150 : 40) + noise(rng)));
    }
    const int seed = img.gray(15, 9);
    const Bitmask got = stub_region(img, {{15, 9, true}}, 10);
    // block is the only connected set of values near the seed
    for (int r = 0; r < 20; ++r) {
      for (int c = 0; c < 30; ++c) {
        const bool in_block = c >= 10 && c < 22 && r >= 4 && r < 15;
        CHECK(got.at(c, r) == (in_block && std::abs(img.gray(c, r) - seed) <= 10));
      }
    }
  }

  TEST_CASE("stub prompts: background, no-data, negatives, disjoint regions") {
    const RasterImage img = two_squares();
    const ImageRef ref{RepresentationId::Rep2, "bev_ground_color.tif"};
    const auto two = segment_stub(img, {{7, 9, true}, {28, 9, true}}, FeatureClass::Sidewalk, ref);
    REQUIRE(two.size() == 2);
    CHECK(polygon_area(two[0].polygon) == doctest::Approx(100.0));
    CHECK(polygon_area(two[1].polygon) == doctest::Approx(80.0));
    CHECK(two[0].image == ref);

    // background prompt floods the background and reports it with two holes
    const auto bg = segment_stub(img, {{0, 0, true}}, FeatureClass::Landscape, ref);
    REQUIRE(bg.size() == 1);
    CHECK(bg[0].polygon.holes.size() == 2);

    // a uniform image has no boundary
    RasterImage flat(10, 10, 1, RepresentationId::Rep1);
    for (int r = 0; r < 10; ++r) {
      for (int c = 0; c < 10; ++c) flat.set_gray(c, r, 0);
    }
    CHECK(segment_stub(flat, {{5, 5, true}}, FeatureClass::Sidewalk, ref).empty());

    RasterImage holes = img;
    holes.set_invalid(0, 0);
    CHECK(segment_stub(holes, {{0, 0, true}}, FeatureClass::Sidewalk, ref).empty());

    // negative prompt removes the second square
    const auto neg = segment_stub(img, {{7, 9, true}, {28, 9, true}, {30, 12, false}}, FeatureClass::Sidewalk, ref);
    REQUIRE(neg.size() == 1);
    CHECK(polygon_area(neg[0].polygon) == doctest::Approx(100.0));

    CHECK(kind_of([&] { segment_stub(img, {{40, 0, true}}, FeatureClass::Sidewalk, ref); }) ==
          ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { segment_stub(img, {{-0.6, 0, true}}, FeatureClass::Sidewalk, ref); }) ==
          ErrorKind::InvalidArgument);
  }

  TEST_CASE("stub is deterministic and segments RGB on luma") {
    const RasterImage img = two_squares();
    const auto a = segment_stub(img, {{7, 9, true}}, FeatureClass::Sidewalk, {});
    const auto b = segment_stub(img, {{7, 9, true}}, FeatureClass::Sidewalk, {});
    CHECK(a == b);
    CHECK(stub_service_response(encode_segment_request(img, {{7, 9, true}}, false)) ==
          stub_service_response(encode_segment_request(img, {{7, 9, true}}, false)));

    RasterImage rgb(40, 20, 3, RepresentationId::Rep6);
    for (int r = 0; r < 20; ++r) {
      for (int c = 0; c < 40; ++c) {
        const uint8_t v = img.gray(c, r);
        rgb.set_rgb(c, r, {v, v, v});
      }
    }
    const auto c = segment_stub(rgb, {{7, 9, true}}, FeatureClass::Sidewalk, {});
    REQUIRE(c.size() == 1);
    CHECK(c[0].polygon == a[0].polygon);
  }

  TEST_CASE("wire request carries the PNG and prompts") {
    const RasterImage img = two_squares();
    const auto body = nlohmann::json::parse(encode_segment_request(img, {{7.5, 9, true}, {1, 2, false}}, true));
    CHECK(body["multimask"] == true);
    REQUIRE(body["prompts"].size() == 2);
    CHECK(body["prompts"][0]["x"] == 7.5);
    CHECK(body["prompts"][1]["positive"] == false);
    const std::string png = base64_decode(body["image_png_b64"].get<std::string>());
    const RasterImage back = decode_png(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(png.data()), png.size()));
    CHECK(back.pixels() == img.pixels());
  }

  TEST_CASE("remote client through a recording transport") {
    const RasterImage img = two_squares();
    test::RecordingTransport t([](const HttpRequest& req) {
      return HttpResponse{200, stub_service_response(req.body), "application/json"};
    });
    const ImageRef ref{RepresentationId::Rep9, "sv_000_front.png"};
    const auto remote = segment_remote(img, {{7, 9, true}, {28, 9, true}}, FeatureClass::Crosswalk, ref,
                                       fast_options("http://seg.local/"), t);
    REQUIRE(t.requests.size() == 1);
    CHECK(t.requests[0].method == "POST");
    CHECK(t.requests[0].url == "http://seg.local/segment");
    CHECK(t.requests[0].content_type == "application/json");
    // substitutable with the in-process stub
    const auto local = segment_stub(img, {{7, 9, true}, {28, 9, true}}, FeatureClass::Crosswalk, ref);
    REQUIRE(remote.size() == local.size());
    for (std::size_t i = 0; i < local.size(); ++i) {
      CHECK(canonical_polygon(remote[i].polygon) == canonical_polygon(local[i].polygon));
      CHECK(remote[i].feature_class == FeatureClass::Crosswalk);
      CHECK(remote[i].image == ref);
    }

    // holes survive the wire
    const auto bg = segment_remote(img, {{0, 0, true}}, FeatureClass::Landscape, ref, fast_options("http://seg.local"), t);
    REQUIRE(bg.size() == 1);
    CHECK(bg[0].polygon.holes.size() == 2);
  }

  TEST_CASE("remote responses: orientation, degenerate masks, empty list") {
    const RasterImage img = two_squares();
    std::string reply;
    test::RecordingTransport t([&](const HttpRequest&) { return HttpResponse{200, reply, "application/json"}; });
    const auto opts = fast_options("http://seg.local");
    // clockwise-as-displayed ring comes back counterclockwise; closed rings are accepted
    reply = R"({"masks":[{"polygon":[[0,0],[0,4],[4,4],[4,0],[0,0]],"score":0.97},
                         {"polygon":[[0,0],[1,1],[2,2]],"score":0.5},
                         {"polygon":[[0,0],[1,0]]}]})";
    auto masks = segment_remote(img, {{1, 1, true}}, FeatureClass::Stair, {}, opts, t);
    REQUIRE(masks.size() == 1);
    CHECK(masks[0].polygon.outer.size() == 4);
    CHECK(screen_signed_area(masks[0].polygon.outer) == doctest::Approx(16.0));
    CHECK(masks[0].score == doctest::Approx(0.97));

    reply = R"({"masks":[]})";
    CHECK(segment_remote(img, {{1, 1, true}}, FeatureClass::Stair, {}, opts, t).empty());

    reply = "not json";
    CHECK(kind_of([&] { segment_remote(img, {{1, 1, true}}, FeatureClass::Stair, {}, opts, t); }) == ErrorKind::Parse);
    reply = R"({"result":[]})";
    CHECK(kind_of([&] { segment_remote(img, {{1, 1, true}}, FeatureClass::Stair, {}, opts, t); }) == ErrorKind::Parse);
  }

  TEST_CASE("remote errors: non-2xx, retries, transport failures") {
    const RasterImage img = two_squares();
    int calls = 0;
    test::RecordingTransport bad([&](const HttpRequest&) {
      ++calls;
      return HttpResponse{500, std::string(1000, 'x'), "text/plain"};
    });
    auto opts = fast_options("http://seg.local");
    try {
      segment_remote(img, {{1, 1, true}}, FeatureClass::Stair, {}, opts, bad);
      FAIL("expected a service error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Service);
      CHECK(std::string(e.what()).find("HTTP 500") != std::string::npos);
      CHECK(std::string(e.what()).size() < 500);
    }
    CHECK(calls == 1);  // 500 is not transient

    int busy = 0;
    test::RecordingTransport flaky([&](const HttpRequest& req) {
      if (busy++ < 2) return HttpResponse{503, "busy", "text/plain"};
      return HttpResponse{200, stub_service_response(req.body), "application/json"};
    });
    CHECK(segment_remote(img, {{7, 9, true}}, FeatureClass::Sidewalk, {}, opts, flaky).size() == 1);
    CHECK(flaky.requests.size() == 3);

    test::RecordingTransport down([](const HttpRequest&) -> HttpResponse {
      throw Error(ErrorKind::Transport, "connection refused");
    });
    CHECK(kind_of([&] { segment_remote(img, {{7, 9, true}}, FeatureClass::Sidewalk, {}, opts, down); }) ==
          ErrorKind::Transport);
    CHECK(down.requests.size() == 3);
  }

  TEST_CASE("remote client over real HTTP against a stub-backed service") {
    StubServer server(1);
    HttplibTransport transport;
    const RasterImage img = two_squares();
    const auto masks = segment_remote(img, {{7, 9, true}, {28, 9, true}}, FeatureClass::Sidewalk, {},
                                      fast_options(server.url()), transport);
    CHECK(masks.size() == 2);
    CHECK(server.hits == 2);  // one 503, then success
    CHECK(polygon_area(masks[0].polygon) == doctest::Approx(100.0));

    // out-of-bounds prompt is answered with 400 and surfaces as a service error
    CHECK(kind_of([&] {
            segment_remote(img, {{50, 0, true}}, FeatureClass::Sidewalk, {}, fast_options(server.url()), transport);
          }) == ErrorKind::Service);

    const HealthStatus health = check_health(server.url(), transport);
    CHECK(health.ok);
    CHECK(health.backend == "stub");
  }

  TEST_CASE("health check reports problems without throwing") {
    HttplibTransport transport;
    const HealthStatus refused = check_health("http://127.0.0.1:1", transport, std::chrono::milliseconds(500));
    CHECK_FALSE(refused.ok);
    CHECK_FALSE(refused.detail.empty());

    test::RecordingTransport sick([](const HttpRequest& req) {
      CHECK(req.url == "http://seg.local/healthz");
      return HttpResponse{200, R"({"status":"loading","backend":"sam"})", "application/json"};
    });
    const HealthStatus loading = check_health("http://seg.local", sick);
    CHECK_FALSE(loading.ok);
    CHECK(loading.backend == "sam");

    test::RecordingTransport broken([](const HttpRequest&) { return HttpResponse{404, "no", "text/plain"}; });
    CHECK(check_health("http://seg.local", broken).detail == "HTTP 404");
    test::RecordingTransport garbage([](const HttpRequest&) { return HttpResponse{200, "{", "text/plain"}; });
    CHECK_FALSE(check_health("http://seg.local", garbage).ok);
  }

  TEST_CASE("stub service rejects malformed requests") {
    CHECK(kind_of([] { stub_service_response("{"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { stub_service_response(R"({"prompts":[]})"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { stub_service_response(R"({"image_png_b64":"@@@"})"); }) == ErrorKind::Parse);
  }
}
