#include <doctest.h>

#include <array>
#include <climits>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "pai/camera.hpp"
#include "pai/error.hpp"
#include "pai/image_io.hpp"
#include "pai/render.hpp"
#include "support/temp_dir.hpp"

using namespace pai;

namespace {

CloudMetadata feet_meta() {
  CloudMetadata m;
  m.crs_id = "EPSG:2263";
  m.linear_unit = LinearUnit::Feet;
  return m;
}

Trajectory straight(double length, double z = 0.0) {
  return Trajectory({{0.0, 0.0, z, 0.0}, {length / 2, 0.0, z, 1.0}, {length, 0.0, z, 2.0}});
}

// Camera at the origin looking along +x, right = -y, down = -z.
CameraPose axis_pose() { return look_along(Eigen::Vector3d::Zero(), Eigen::Vector2d(1, 0), 0.0); }

// A smaller sensor with the same focal length keeps brute-force oracles cheap.
CameraIntrinsics small_sensor() { return CameraIntrinsics{4.15, 78.0, 64, 48}; }

struct OraclePixel {
  uint32_t index = CorrespondenceMap::kNoPoint;
  double depth = std::numeric_limits<double>::infinity();
};

// Straight evaluation of s [u v 1]^T = A [R | -R T] [X 1]^T for every point and
// every pixel; a pixel is covered when it lies in the size x size square whose
// top-left is round(u) - size/2.
std::vector<OraclePixel> zbuffer_oracle(const PointCloud& cloud, const CameraIntrinsics& intr,
                                        const CameraPose& pose, int size) {
  const Eigen::Matrix<double, 3, 4> p = intr.matrix() * pose.rotation_translation();
  std::vector<OraclePixel> out(static_cast<std::size_t>(intr.width) * intr.height);
  for (int row = 0; row < intr.height; ++row) {
    for (int col = 0; col < intr.width; ++col) {
      OraclePixel best;
      for (uint32_t i = 0; i < cloud.size(); ++i) {
        const Eigen::Vector3d h = p * Eigen::Vector4d(cloud.x(i), cloud.y(i), cloud.zs()[i], 1.0);
        if (h.z() <= 0) continue;
        const long cu = std::lround(std::floor(h.x() / h.z() + 0.5));
        const long cv = std::lround(std::floor(h.y() / h.z() + 0.5));
        const long c0 = cu - size / 2, r0 = cv - size / 2;
        if (col < c0 || col >= c0 + size || row < r0 || row >= r0 + size) continue;
        const float d = static_cast<float>(h.z());
        if (d < best.depth) best = {i, d};
      }
      out[static_cast<std::size_t>(row) * intr.width + col] = best;
    }
  }
  return out;
}

PointCloud random_scene(std::size_t n, unsigned seed, bool color = true) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ahead(2.0, 30.0), lateral(-8.0, 8.0), height(-6.0, 6.0);
  std::uniform_int_distribution<int> inten(0, 65535), byte(0, 255), cls(1, 5);
  PointCloudBuilder b(feet_meta(), color);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = std::optional<Rgb>(Rgb{uint8_t(byte(rng)), uint8_t(byte(rng)), uint8_t(byte(rng))});
    b.add(ahead(rng), lateral(rng), height(rng), uint16_t(inten(rng)), ClassLabel::from_las(uint8_t(cls(rng))),
          color ? c : std::nullopt);
  }
  return std::move(b).build();
}

}  // namespace

TEST_SUITE("view_synthesis") {

TEST_CASE("intrinsic matrix from 4.15 mm focal length and 1.22 um pixels") {
  const CameraIntrinsics intr;
  CHECK(intr.focal_px() == doctest::Approx(3401.639344).epsilon(1e-9));
  const auto a = intr.matrix();
  CHECK(a(0, 0) == a(1, 1));
  CHECK(a(0, 2) == 2016.0);
  CHECK(a(1, 2) == 1512.0);
  CHECK(a(2, 2) == 1.0);
  CHECK(a(0, 1) == 0.0);
  CHECK(a(1, 0) == 0.0);
  CHECK_THROWS_AS(CameraIntrinsics({4.15, 0.0, 10, 10}).validate(), Error);

  const auto quarter = intr.scaled(0.25);
  CHECK(quarter.width == 1008);
  CHECK(quarter.height == 756);
  CHECK(quarter.focal_px() == doctest::Approx(intr.focal_px() * 0.25));
}

TEST_CASE("projection of axis and off-axis points") {
  const CameraIntrinsics intr;
  CameraPose pose;  // identity: camera frame == world frame
  auto p = project_point(Eigen::Vector3d(0, 0, 10), intr, pose);
  REQUIRE(p);
  CHECK(p->u == 2016.0);
  CHECK(p->v == 1512.0);
  CHECK(p->s == 10.0);

  p = project_point(Eigen::Vector3d(0.1, 0, 10), intr, pose);
  REQUIRE(p);
  CHECK(p->u == doctest::Approx(4150.0 / 1.22 * 0.1 / 10.0 + 2016.0).epsilon(1e-12));
  CHECK(p->u == doctest::Approx(2050.016).epsilon(1e-6));
  CHECK(p->v == 1512.0);

  CHECK_FALSE(project_point(Eigen::Vector3d(0, 0, -5), intr, pose));
  CHECK_FALSE(project_point(Eigen::Vector3d(1, 1, 0), intr, pose));

  // Same point through a translated, rotated pose.
  const CameraPose moved = look_along(Eigen::Vector3d(1000, 2000, 30), Eigen::Vector2d(0, 1), 0.0);
  p = project_point(Eigen::Vector3d(1000, 2010, 30), intr, moved);
  REQUIRE(p);
  CHECK(p->u == doctest::Approx(2016.0));
  CHECK(p->v == doctest::Approx(1512.0));
  CHECK(p->s == doctest::Approx(10.0));
}

TEST_CASE("pose validation rejects non-rotations") {
  CameraPose pose;
  CHECK_NOTHROW(pose.validate());
  pose.rotation(0, 0) = -1.0;  // reflection
  CHECK_THROWS_AS(pose.validate(), Error);
  pose.rotation = Eigen::Matrix3d::Identity() * 1.001;
  CHECK_THROWS_AS(pose.validate(), Error);
  CHECK_NOTHROW(look_along(Eigen::Vector3d(5, 5, 5), Eigen::Vector2d(0.3, -0.7), 10.0).validate());
}

TEST_CASE("straight 100 m trajectory at 12.5 m spacing gives 8 stations and 24 poses") {
  CameraRig rig;
  rig.spacing = 12.5;
  const auto plan = plan_cameras(straight(100.0, 3.0), rig);
  CHECK(plan.warnings.empty());
  REQUIRE(plan.views.size() == 24);
  for (std::size_t i = 0; i < plan.views.size(); ++i) {
    const auto& v = plan.views[i];
    CHECK(v.station == int(i / 3));
    CHECK(v.pose.position.z() == doctest::Approx(5.0));
    CHECK(v.pose.position.y() == doctest::Approx(0.0));
    CHECK_NOTHROW(v.pose.validate());
    // zero roll: camera x axis stays horizontal
    CHECK(std::abs(v.pose.rotation(0, 2)) < 1e-12);
    // fixed downward pitch of 10 degrees
    CHECK(v.pose.forward().z() == doctest::Approx(-std::sin(10.0 * std::numbers::pi / 180.0)));
  }
  CHECK(plan.views[0].direction == ViewDirection::Front);
  CHECK(plan.views[0].pose.forward().x() > 0.98);
  CHECK(plan.views[1].pose.forward().y() > 0.98);   // left of east is north
  CHECK(plan.views[2].pose.forward().y() < -0.98);  // right of east is south
  CHECK(plan.views.front().arc_length == doctest::Approx(6.25));
  CHECK(plan.views.back().arc_length == doctest::Approx(93.75));

  rig.spacing = 120.0;
  CHECK_THROWS_AS(plan_cameras(straight(100.0), rig), Error);
}

TEST_CASE("single station: front is perpendicular to both side views") {
  CameraRig rig;
  rig.spacing = 10.0;
  const auto plan = plan_cameras(straight(15.0), rig);
  REQUIRE(plan.views.size() == 3);
  auto horizontal = [](const CameraView& v) {
    Eigen::Vector2d h = v.pose.forward().head<2>();
    return Eigen::Vector2d(h.normalized());
  };
  const auto f = horizontal(plan.views[0]), l = horizontal(plan.views[1]), r = horizontal(plan.views[2]);
  CHECK(std::abs(f.dot(l)) < 1e-12);
  CHECK(std::abs(f.dot(r)) < 1e-12);
  // with +/-90 degree yaw the side views look in opposite directions
  CHECK((l + r).norm() < 1e-12);
  CHECK(f.x() * l.y() - f.y() * l.x() > 0.0);  // left is counter-clockwise of front
}

TEST_CASE("front views follow the tangent of a circular trajectory") {
  const double radius = 50.0;
  const int segments = 360;
  std::vector<TrajectorySample> samples;
  for (int k = 0; k <= segments * 3 / 4; ++k) {
    const double a = 2 * std::numbers::pi * k / segments;
    samples.push_back({radius * std::cos(a), radius * std::sin(a), 0.0, double(k)});
  }
  const Trajectory traj(samples);
  const double seg_len = 2 * radius * std::sin(std::numbers::pi / segments);
  CameraRig rig;
  rig.spacing = 2 * 10 * seg_len;  // stations fall on vertices 10, 30, 50, ...
  const auto plan = plan_cameras(traj, rig);
  REQUIRE(plan.views.size() == 3 * 13);
  for (const auto& v : plan.views) {
    if (v.direction != ViewDirection::Front) continue;
    const int vertex = 10 + 20 * v.station;
    const double a = 2 * std::numbers::pi * vertex / segments;
    const Eigen::Vector2d tangent(-std::sin(a), std::cos(a));
    const Eigen::Vector2d h = v.pose.forward().head<2>().normalized();
    const double angle = std::atan2(h.x() * tangent.y() - h.y() * tangent.x(), h.dot(tangent));
    CHECK(std::abs(angle) < 1e-6);
  }
}

TEST_CASE("degenerate tangent skips the station with a warning") {
  // out and back: the chord around the turning point is zero
  const Trajectory traj({{0, 0, 0, 0}, {10, 0, 0, 1}, {0, 0, 0, 2}});
  CameraRig rig;
  rig.spacing = 20.0;
  const auto plan = plan_cameras(traj, rig);
  CHECK(plan.views.empty());
  REQUIRE(plan.warnings.size() == 1);
  CHECK(plan.warnings[0].find("degenerate") != std::string::npos);
}

TEST_CASE("representation matrix") {
  using R = RepresentationId;
  struct Row {
    R id;
    ViewKind view;
    ClassSelector sel;
    PixelAttribute attr;
  };
  const Row rows[] = {
      {R::Rep1, ViewKind::BEV, ClassSelector::GroundAndLowVeg, PixelAttribute::Intensity},
      {R::Rep2, ViewKind::BEV, ClassSelector::All, PixelAttribute::Intensity},
      {R::Rep3, ViewKind::BEV, ClassSelector::GroundAndLowVeg, PixelAttribute::Color},
      {R::Rep4, ViewKind::BEV, ClassSelector::All, PixelAttribute::Color},
      {R::Rep6, ViewKind::StreetView, ClassSelector::GroundAndLowVeg, PixelAttribute::Intensity},
      {R::Rep7, ViewKind::StreetView, ClassSelector::GroundAndLowVeg, PixelAttribute::Color},
      {R::Rep8, ViewKind::StreetView, ClassSelector::All, PixelAttribute::Intensity},
      {R::Rep9, ViewKind::StreetView, ClassSelector::All, PixelAttribute::Color},
  };
  for (const auto& row : rows) {
    CHECK(representation_for(row.view, row.sel, row.attr) == row.id);
    const auto& d = describe(row.id);
    CHECK(d.view == row.view);
    CHECK(d.selector == row.sel);
    CHECK(d.attribute == row.attr);
    CHECK(parse_representation(to_string(row.id)) == row.id);
  }
  CHECK(describe(R::Rep5).view == ViewKind::Satellite);
  CHECK_FALSE(describe(R::Rep5).selector);
  CHECK(to_string(R::Rep5) == "rep5");
  CHECK_THROWS_AS(parse_representation("rep10"), Error);
}

TEST_CASE("BEV of a 100 x 50 ft extent at 0.1 ft is 1000 x 500 with an exact geotransform") {
  PointCloudBuilder b(feet_meta(), false);
  b.add(983000.0, 201000.0, 10, 100, ClassLabel::ground());
  b.add(983100.0, 201050.0, 11, 200, ClassLabel::ground());
  const auto cloud = std::move(b).build();
  const auto out = render_bev(cloud, ClassSelector::All, PixelAttribute::Intensity, 0.1);
  CHECK(out.image.width() == 1000);
  CHECK(out.image.height() == 500);
  CHECK(out.correspondence.width() == 1000);
  REQUIRE(out.image.geo);
  const auto geo = *out.image.geo;
  CHECK(geo.origin_x == 983000.0);
  CHECK(geo.origin_y == 201050.0);
  CHECK(out.image.crs_id == "EPSG:2263");
  CHECK(out.image.representation() == RepresentationId::Rep2);
  // the min corner sits in the bottom-left cell, the max corner is clamped into the top-right one
  CHECK(out.correspondence.at(0, 499)->point_index == 0);
  CHECK(out.correspondence.at(999, 0)->point_index == 1);
  CHECK(out.correspondence.populated() == 2);
  CHECK_FALSE(out.image.valid(500, 250));

  for (int row = 0; row < 500; ++row) {
    for (int col = 0; col < 1000; ++col) {
      const auto [x, y] = geo.world(col, row);
      const auto [c, r] = geo.pixel_of(x, y);
      if (c != col || r != row) {
        FAIL("round trip failed at " << col << "," << row);
      }
    }
  }
}

TEST_CASE("BEV cell shows the highest point; ties keep the lower index") {
  PointCloudBuilder b(feet_meta(), false);
  b.add(0.05, 0.05, 1.0, 10, ClassLabel::ground());
  b.add(0.06, 0.04, 9.0, 20, ClassLabel::high_vegetation());
  b.add(1.0, 1.0, 0.0, 30, ClassLabel::ground());
  b.add(1.0, 1.0, 0.0, 40, ClassLabel::ground());
  const auto cloud = std::move(b).build();
  auto out = render_bev(cloud, ClassSelector::All, PixelAttribute::Intensity, 0.1);
  const int bottom = out.image.height() - 1;
  CHECK(out.correspondence.at(0, bottom)->point_index == 1);
  CHECK(out.correspondence.at(0, bottom)->depth == 9.0f);
  CHECK(out.correspondence.at(out.image.width() - 1, 0)->point_index == 2);

  // the ground-only variant falls back to the z = 1 point
  out = render_bev(cloud, ClassSelector::GroundAndLowVeg, PixelAttribute::Intensity, 0.1);
  CHECK(out.correspondence.at(0, bottom)->point_index == 0);
  CHECK(out.image.representation() == RepresentationId::Rep1);
  CHECK_THROWS_AS(render_bev(cloud, ClassSelector::All, PixelAttribute::Color, 0.1), Error);
  CHECK_THROWS_AS(render_bev(cloud, ClassSelector::All, PixelAttribute::Intensity, 0.0), Error);
}

TEST_CASE("BEV matches a brute-force per-cell max-z scan") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<long> mm(0, 20000), zmm(-3000, 3000);
  PointCloudBuilder b(feet_meta(), true);
  std::vector<std::array<long, 3>> coords;
  for (int i = 0; i < 500; ++i) {
    coords.push_back({mm(rng), mm(rng) / 2, zmm(rng)});
    b.add(coords.back()[0] / 1000.0, coords.back()[1] / 1000.0, coords.back()[2] / 1000.0,
          uint16_t(i * 100), ClassLabel::from_las(uint8_t(1 + i % 5)), Rgb{uint8_t(i), 7, uint8_t(255 - i % 256)});
  }
  const auto cloud = std::move(b).build();
  const long cell_mm = 250;
  for (auto sel : {ClassSelector::All, ClassSelector::GroundAndLowVeg}) {
    const auto out = render_bev(cloud, sel, PixelAttribute::Color, cell_mm / 1000.0);
    long minx = LONG_MAX, maxx = LONG_MIN, miny = LONG_MAX, maxy = LONG_MIN;
    for (const auto& c : coords) {
      minx = std::min(minx, c[0]), maxx = std::max(maxx, c[0]);
      miny = std::min(miny, c[1]), maxy = std::max(maxy, c[1]);
    }
    const long cols = std::max(1L, (maxx - minx + cell_mm - 1) / cell_mm);
    const long rows = std::max(1L, (maxy - miny + cell_mm - 1) / cell_mm);
    REQUIRE(out.image.width() == cols);
    REQUIRE(out.image.height() == rows);
    for (long row = 0; row < rows; ++row) {
      for (long col = 0; col < cols; ++col) {
        long best = -1;
        for (std::size_t i = 0; i < coords.size(); ++i) {
          if (!selects(sel, cloud.label(i))) continue;
          const long c = std::min(cols - 1, (coords[i][0] - minx) / cell_mm);
          const long r = std::min(rows - 1, (maxy - coords[i][1]) / cell_mm);
          if (c != col || r != row) continue;
          if (best < 0 || coords[i][2] > coords[best][2]) best = long(i);
        }
        const auto got = out.correspondence.at(int(col), int(row));
        if (best < 0) {
          CHECK_FALSE(got);
          CHECK_FALSE(out.image.valid(int(col), int(row)));
        } else {
          REQUIRE(got);
          CHECK(got->point_index == uint64_t(best));
          CHECK(out.image.rgb(int(col), int(row)) == cloud.colors()[best]);
        }
      }
    }
  }
}

TEST_CASE("gray mapping stretches the 2nd to 98th intensity percentiles") {
  PointCloudBuilder b(feet_meta(), false);
  for (int i = 0; i <= 100; ++i) b.add(i * 0.1, 0, 0, uint16_t(i * 100), ClassLabel::ground());
  const auto cloud = std::move(b).build();
  const auto idx = select_indices(cloud, ClassSelector::All);
  const auto m = intensity_mapping(cloud, idx);
  CHECK(m.lo == doctest::Approx(200.0));
  CHECK(m.hi == doctest::Approx(9800.0));
  CHECK(m(0) == 0);
  CHECK(m(200) == 0);
  CHECK(m(5000) == 128);
  CHECK(m(9800) == 255);
  CHECK(m(10000) == 255);
}

TEST_CASE("z-buffer keeps the nearer of two points on one ray") {
  PointCloudBuilder b(feet_meta(), false);
  b.add(7.0, 0.0, 0.0, 65535, ClassLabel::ground());
  b.add(3.0, 0.0, 0.0, 0, ClassLabel::ground());
  b.add(30.0, 0.0, 0.0, 30000, ClassLabel::ground());
  const auto cloud = std::move(b).build();
  const auto intr = small_sensor();
  const auto out = render_street_view(cloud, ClassSelector::All, PixelAttribute::Intensity, intr, axis_pose(), 8);
  std::size_t contested = 0;
  for (int r = 0; r < intr.height; ++r) {
    for (int c = 0; c < intr.width; ++c) {
      const auto hit = out.correspondence.at(c, r);
      if (!hit) continue;
      ++contested;
      CHECK(hit->point_index == 1);
      CHECK(hit->depth == 3.0f);
      CHECK(out.image.gray(c, r) == 0);
    }
  }
  CHECK(contested == 64);
  // principal point (32, 24): block spans columns 28..35 and rows 20..27
  CHECK(out.correspondence.at(28, 20));
  CHECK(out.correspondence.at(35, 27));
  CHECK_FALSE(out.correspondence.at(36, 24));
  CHECK(out.image.representation() == RepresentationId::Rep8);
}

TEST_CASE("single point splats an 8 x 8 block, clipped at the border") {
  const auto intr = small_sensor();
  const auto f = intr.focal_px();
  auto render_at = [&](double u, double v) {
    // camera-frame (x, y, z) = ((u - cx) z / f, (v - cy) z / f, z); world = (z, -x, -y)
    const double z = 10.0;
    const double x = (u - intr.cx()) * z / f, y = (v - intr.cy()) * z / f;
    PointCloudBuilder b(feet_meta(), false);
    b.add(z, -x, -y, 1000, ClassLabel::ground());
    return render_street_view(std::move(b).build(), ClassSelector::All, PixelAttribute::Intensity, intr,
                              axis_pose(), 8);
  };
  auto count = [](const RenderResult& r) { return r.correspondence.populated(); };

  auto out = render_at(20.2, 30.3);
  CHECK(count(out) == 64);
  for (int r = 26; r < 34; ++r) {
    for (int c = 16; c < 24; ++c) CHECK(out.correspondence.at(c, r));
  }
  out = render_at(1.0, 2.0);
  CHECK(count(out) == 5 * 6);
  out = render_at(63.0, 47.0);
  CHECK(count(out) == 5 * 5);
  out = render_at(-10.0, 20.0);
  CHECK(count(out) == 0);
}

TEST_CASE("street view equals the brute-force min-depth oracle") {
  const auto cloud = random_scene(1000, 42);
  const auto intr = small_sensor();
  const auto pose = look_along(Eigen::Vector3d(0.5, 0.25, 1.0), Eigen::Vector2d(1, 0.1), 10.0);
  for (int size : {1, 8}) {
    const auto oracle = zbuffer_oracle(cloud, intr, pose, size);
    {
      const auto sel = ClassSelector::All;
      const auto out = render_street_view(cloud, sel, PixelAttribute::Color, intr, pose, size);
      std::size_t mismatches = 0;
      for (int r = 0; r < intr.height; ++r) {
        for (int c = 0; c < intr.width; ++c) {
          const auto& want = oracle[static_cast<std::size_t>(r) * intr.width + c];
          const auto got = out.correspondence.at(c, r);
          if (want.index == CorrespondenceMap::kNoPoint) {
            mismatches += got.has_value();
          } else {
            mismatches += !got || got->point_index != want.index;
            if (got) CHECK(got->depth > 0.0f);
            if (got) CHECK(out.image.rgb(c, r) == cloud.colors()[got->point_index]);
          }
        }
      }
      CHECK(mismatches == 0);
    }
  }
}

TEST_CASE("populated pixels re-project onto themselves") {
  const auto cloud = random_scene(3000, 3, false);
  const auto intr = small_sensor().scaled(2.0);
  const auto pose = look_along(Eigen::Vector3d(0, 0, 1.5), Eigen::Vector2d(1, -0.2), 5.0);
  for (int size : {1, 8}) {
    const auto out = render_street_view(cloud, ClassSelector::All, PixelAttribute::Intensity, intr, pose, size);
    REQUIRE(out.correspondence.populated() > 0);
    // a splat reaches size/2 pixels from its center (0.5 px for single pixels)
    const double tol = size == 1 ? 0.5 : size / 2.0 + 0.5;
    for (int r = 0; r < intr.height; ++r) {
      for (int c = 0; c < intr.width; ++c) {
        const auto p = back_project(c, r, out.correspondence, cloud);
        if (!p) continue;
        const auto px = project_point(*p, intr, pose);
        REQUIRE(px);
        CHECK(std::abs(px->u - c) <= tol);
        CHECK(std::abs(px->v - r) <= tol);
        CHECK(float(px->s) == out.correspondence.at(c, r)->depth);
      }
    }
  }
}

TEST_CASE("back projection returns the rendered point exactly") {
  const auto cloud = random_scene(200, 11);
  const auto intr = small_sensor();
  const auto pose = axis_pose();
  const auto out = render_street_view(cloud, ClassSelector::All, PixelAttribute::Color, intr, pose, 1);
  std::size_t seen = 0;
  for (int r = 0; r < intr.height; ++r) {
    for (int c = 0; c < intr.width; ++c) {
      const auto hit = out.correspondence.at(c, r);
      const auto p = back_project(c, r, out.correspondence, cloud);
      CHECK(hit.has_value() == p.has_value());
      if (!p) continue;
      ++seen;
      CHECK(*p == cloud.point(hit->point_index));
    }
  }
  CHECK(seen > 0);
  CHECK_THROWS_AS(back_project(-1, 0, out.correspondence, cloud), Error);
  CHECK_THROWS_AS(back_project(intr.width, 0, out.correspondence, cloud), Error);
  try {
    back_project(0, intr.height, out.correspondence, cloud);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Bounds);
  }
}

TEST_CASE("rendering is deterministic") {
  const auto cloud = random_scene(2000, 5);
  const auto intr = small_sensor();
  const auto pose = axis_pose();
  const auto a = render_street_view(cloud, ClassSelector::All, PixelAttribute::Color, intr, pose, 8);
  const auto b = render_street_view(cloud, ClassSelector::All, PixelAttribute::Color, intr, pose, 8);
  CHECK(a.image == b.image);
  CHECK(a.correspondence == b.correspondence);
  CHECK_THROWS_AS(render_street_view(cloud, ClassSelector::All, PixelAttribute::Color, intr, pose, 0), Error);
}

TEST_CASE("PNG, GeoTIFF and correspondence files round trip") {
  test::TempDir dir;
  const auto cloud = random_scene(500, 9);
  const auto street =
      render_street_view(cloud, ClassSelector::All, PixelAttribute::Color, small_sensor(), axis_pose(), 3);

  write_png(street.image, dir / "view.png");
  auto png = read_png(dir / "view.png");
  png.set_representation(street.image.representation());
  png.crs_id = street.image.crs_id;
  CHECK(png == street.image);

  const auto gray =
      render_street_view(cloud, ClassSelector::All, PixelAttribute::Intensity, small_sensor(), axis_pose(), 3);
  auto gpng = decode_png(encode_png(gray.image));
  gpng.set_representation(gray.image.representation());
  gpng.crs_id = gray.image.crs_id;
  CHECK(gpng == gray.image);

  write_correspondence(street.correspondence, dir / "view.cmap");
  CHECK(read_correspondence(dir / "view.cmap") == street.correspondence);
  CHECK(std::filesystem::file_size(dir / "view.cmap") == 16 + 64 * 48 * 12);

  const auto bev = render_bev(cloud, ClassSelector::All, PixelAttribute::Color, 0.5);
  write_geotiff(bev.image, dir / "bev.tif");
  const auto tif = read_geotiff(dir / "bev.tif");
  CHECK(tif.width() == bev.image.width());
  CHECK(tif.height() == bev.image.height());
  CHECK(tif.geo == bev.image.geo);
  CHECK(tif.crs_id == "EPSG:2263");
  CHECK(tif.validity() == bev.image.validity());
  for (int r = 0; r < tif.height(); ++r) {
    for (int c = 0; c < tif.width(); ++c) {
      if (!bev.image.valid(c, r)) continue;
      for (int ch = 0; ch < 3; ++ch) {
        CHECK(tif.channel(c, r, ch) == std::max<uint8_t>(1, bev.image.channel(c, r, ch)));
      }
    }
  }

  RasterImage custom = bev.image;
  custom.crs_id = "LOCAL:site-grid";
  write_geotiff(custom, dir / "custom.tif");
  CHECK(read_geotiff(dir / "custom.tif").crs_id == "LOCAL:site-grid");

  RasterImage no_geo(4, 4, 1, RepresentationId::Rep6);
  CHECK_THROWS_AS(write_geotiff(no_geo, dir / "x.tif"), Error);
}

TEST_CASE("malformed correspondence files are rejected") {
  test::TempDir dir;
  CorrespondenceMap cmap(3, 2);
  cmap.set(1, 1, 42, 2.5f);
  write_correspondence(cmap, dir / "ok.cmap");
  std::ifstream in(dir / "ok.cmap", std::ios::binary);
  std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  {
    std::ofstream out(dir / "short.cmap", std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size() - 1));
  }
  CHECK_THROWS_AS(read_correspondence(dir / "short.cmap"), Error);
  bytes[0] = 'X';
  {
    std::ofstream out(dir / "magic.cmap", std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size()));
  }
  CHECK_THROWS_AS(read_correspondence(dir / "magic.cmap"), Error);
  const auto back = read_correspondence(dir / "ok.cmap");
  CHECK(back.at(1, 1)->point_index == 42);
  CHECK(back.at(1, 1)->depth == 2.5f);
  CHECK_FALSE(back.at(0, 0));
}

}  // TEST_SUITE
