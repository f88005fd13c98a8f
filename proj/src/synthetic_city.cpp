#include "pai/synthetic_city.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "pai/error.hpp"
#include "pai/render.hpp"

namespace pai {
namespace {

constexpr double kLength = 100.0;
constexpr double kWidth = 50.0;
constexpr double kCurb = 0.5;

struct Material {
  uint16_t intensity;
  Rgb color;
};

// Gray levels and lumas are far enough apart for a flood fill to stop at every material edge.
constexpr Material kAsphalt{6000, {60, 60, 60}};
constexpr Material kTrunk{9000, {50, 25, 10}};
constexpr Material kGrass{12000, {80, 150, 60}};
constexpr Material kCanopy{15500, {40, 120, 40}};
constexpr Material kPost{19000, {150, 150, 150}};
constexpr Material kConcrete{24000, {190, 190, 190}};
constexpr Material kHydrant{30000, {250, 230, 60}};
constexpr Material kPaint{40000, {250, 250, 250}};

class Scene {
 public:
  Scene(const CityOptions& o, CloudMetadata meta) : o_(o), b_(std::move(meta), true), rng_(20240611) {}

  double road_z(double u) const { return 100.0 + o_.grade * u; }

  double surface_z(double u, double v) const {
    const double g = road_z(u);
    if (v > 10.0 && v < 40.0) return g;
    if (v < 3.0 || v > 47.0) return g + kCurb + o_.crossfall * 7.0;
    return g + kCurb + o_.crossfall * (v < 25.0 ? 10.0 - v : v - 40.0);
  }

  void add(double u, double v, double z, const Material& m, std::optional<FeatureClass> c) {
    if (u < 0.0 || u > kLength || v < 0.0 || v > kWidth) return;  // the tile is cropped to the block
    std::uniform_int_distribution<int> jitter(-200, 200);
    const int level = std::clamp<int>(m.intensity + jitter(rng_), 0, 65535);
    b_.add(o_.origin_x + u, o_.origin_y + v, z, static_cast<uint16_t>(level), ClassLabel::unclassified(), m.color);
    truth_.push_back(c);
  }

  void ground() {
    const long n_u = std::lround(kLength / o_.spacing), n_v = std::lround(kWidth / o_.spacing);
    for (long j = 0; j <= n_v; ++j) {
      const double v = double(j) * o_.spacing;
      for (long i = 0; i <= n_u; ++i) {
        const double u = double(i) * o_.spacing;
        const double z = surface_z(u, v);
        if (v > 10.0 && v < 40.0) {
          if (u >= 45.0 && u <= 55.0) {
            add(u, v, z, kPaint, FeatureClass::Crosswalk);
          } else {
            add(u, v, z, kAsphalt, std::nullopt);
          }
        } else if (v < 3.0 || v > 47.0) {
          add(u, v, z, kGrass, FeatureClass::Landscape);
        } else {
          add(u, v, z, kConcrete, FeatureClass::Sidewalk);
        }
      }
    }
    // curb faces
    for (double v : {10.0, 40.0}) {
      for (long i = 0; i <= n_u; ++i) {
        const double u = double(i) * o_.spacing;
        for (double h = o_.spacing; h < kCurb - 1e-9; h += o_.spacing) add(u, v, road_z(u) + h, kConcrete, std::nullopt);
      }
    }
  }

  void cylinder(double u, double v, double radius, double height, const Material& m, FeatureClass c) {
    const double base = surface_z(u, v);
    const int around = std::max(8, static_cast<int>(std::ceil(2 * std::numbers::pi * radius / o_.spacing)));
    for (double h = 0.0; h <= height + 1e-9; h += o_.spacing) {
      for (int k = 0; k < around; ++k) {
        const double a = 2 * std::numbers::pi * k / around;
        add(u + radius * std::cos(a), v + radius * std::sin(a), base + h, m, c);
      }
    }
    for (double r = o_.spacing; r < radius; r += o_.spacing) {  // cap
      const int ring = std::max(6, static_cast<int>(std::ceil(2 * std::numbers::pi * r / o_.spacing)));
      for (int k = 0; k < ring; ++k) {
        const double a = 2 * std::numbers::pi * k / ring;
        add(u + r * std::cos(a), v + r * std::sin(a), base + height, m, c);
      }
    }
    add(u, v, base + height, m, c);
  }

  void tree(double u, double v) {
    const double base = surface_z(u, v);
    cylinder(u, v, 0.6, 10.0, kTrunk, FeatureClass::TreeTrunk);
    // canopy: Fibonacci sphere of radius 6 centred 15 above the ground
    const double radius = 6.0;
    const int n = static_cast<int>(4 * std::numbers::pi * radius * radius / (0.2 * 0.2));
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / n;
      const double r = std::sqrt(1.0 - z * z);
      const double a = golden * k;
      add(u + radius * r * std::cos(a), v + radius * r * std::sin(a), base + 15.0 + radius * z, kCanopy,
          FeatureClass::TreeCanopy);
    }
  }

  void seed(FeatureClass c, double u, double v, double z) {
    seeds_.push_back({c, Eigen::Vector3d(o_.origin_x + u, o_.origin_y + v, z), true});
  }

  SyntheticCity finish(Trajectory traj) && {
    SyntheticCity city;
    city.cloud = std::move(b_).build();
    city.truth = std::move(truth_);
    city.trajectory = std::move(traj);
    city.seeds = std::move(seeds_);
    city.extent = extent(city.cloud);
    return city;
  }

 private:
  CityOptions o_;
  PointCloudBuilder b_;
  std::mt19937 rng_;
  std::vector<std::optional<FeatureClass>> truth_;
  std::vector<PromptSeed> seeds_;
};

}  // namespace

SyntheticCity make_synthetic_city(const CityOptions& options) {
  if (!(options.spacing > 0.0) || options.spacing > 1.0) {
    throw Error(ErrorKind::InvalidArgument, "synthetic city spacing must be in (0, 1] feet");
  }
  CloudMetadata meta;
  meta.crs_id = "EPSG:2263";
  meta.linear_unit = LinearUnit::Feet;
  Scene s(options, meta);
  s.ground();
  s.tree(20.0, 1.5);
  s.tree(70.0, 1.5);
  s.tree(45.0, 48.5);
  s.cylinder(30.0, 46.5, 0.25, 10.0, kPost, FeatureClass::Post);
  s.cylinder(80.0, 46.5, 0.25, 10.0, kPost, FeatureClass::Post);
  s.cylinder(55.0, 4.0, 0.4, 2.5, kHydrant, FeatureClass::FireHydrant);

  for (int k = 0; k < 8; ++k) {
    const double u = 6.25 + 12.5 * k;
    s.seed(FeatureClass::Sidewalk, u, 6.5, s.surface_z(u, 6.5));
    s.seed(FeatureClass::Sidewalk, u, 43.5, s.surface_z(u, 43.5));
    s.seed(FeatureClass::Landscape, u, 1.5, s.surface_z(u, 1.5));
    s.seed(FeatureClass::Landscape, u, 48.5, s.surface_z(u, 48.5));
  }
  for (double v : {15.0, 25.0, 35.0}) s.seed(FeatureClass::Crosswalk, 50.0, v, s.road_z(50.0));
  for (auto [u, v] : {std::pair{20.0, 1.5}, {70.0, 1.5}, {45.0, 48.5}}) {
    const double toward_road = v < 25.0 ? 1.0 : -1.0;
    const double base = s.surface_z(u, v);
    s.seed(FeatureClass::TreeTrunk, u, v + 0.6 * toward_road, base + 4.0);
    s.seed(FeatureClass::TreeCanopy, u, v, base + 21.0);
    s.seed(FeatureClass::TreeCanopy, u, v + 6.0 * toward_road, base + 15.0);
  }
  for (double u : {30.0, 80.0}) {
    s.seed(FeatureClass::Post, u, 46.25, s.surface_z(u, 46.5) + 5.0);
    s.seed(FeatureClass::Post, u, 46.5, s.surface_z(u, 46.5) + 10.0);
  }
  s.seed(FeatureClass::FireHydrant, 55.0, 4.4, s.surface_z(55.0, 4.0) + 1.2);
  s.seed(FeatureClass::FireHydrant, 55.0, 4.0, s.surface_z(55.0, 4.0) + 2.5);

  std::vector<TrajectorySample> samples;
  for (int k = 0; k <= 100; ++k) {
    const double u = k;
    samples.push_back({options.origin_x + u, options.origin_y + 25.0, s.road_z(u) + 6.5, u / 30.0});
  }
  return std::move(s).finish(Trajectory(std::move(samples)));
}

RasterImage synthetic_orthophoto(const SyntheticCity& city, double cell) {
  RasterImage img = render_bev(city.cloud, ClassSelector::All, PixelAttribute::Color, cell).image;
  img.set_representation(RepresentationId::Rep5);
  return img;
}

}  // namespace pai
