#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "pai/error.hpp"
#include "pai/pipeline.hpp"

namespace pai {
namespace {

using Setter = std::function<void(const YAML::Node&)>;

class Reader {
 public:
  explicit Reader(std::string name) : name_(std::move(name)) {}

  [[noreturn]] void fail(const YAML::Mark& m, const std::string& msg) const {
    if (m.is_null()) throw Error(ErrorKind::Configuration, name_ + ": " + msg);
    throw Error(ErrorKind::Configuration,
                name_ + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1) + ": " + msg);
  }

  template <typename T>
  T as(const YAML::Node& n, const std::string& key, const char* what) const {
    if (!n.IsScalar()) fail(n.Mark(), "'" + key + "' must be " + what);
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n.Mark(), "'" + key + "' must be " + what + ", got '" + n.Scalar() + "'");
    }
  }

  /// Parses a scalar through `parse`, reporting its failures at the node.
  template <typename F>
  auto parsed(const YAML::Node& n, const std::string& key, F parse) const {
    const auto text = as<std::string>(n, key, "a string");
    try {
      return parse(text);
    } catch (const Error& e) {
      fail(n.Mark(), "'" + key + "': " + e.what());
    }
  }

  void section(const YAML::Node& node, const std::string& name, const std::map<std::string, Setter>& keys) const {
    if (!node.IsMap()) fail(node.Mark(), "section '" + name + "' must be a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      auto it = keys.find(key);
      if (it == keys.end()) fail(kv.first.Mark(), "unknown key '" + key + "' in section '" + name + "'");
      if (kv.second.IsNull()) continue;  // an empty value keeps the default
      it->second(kv.second);
    }
  }

 private:
  std::string name_;
};

AxisOrder parse_axis_order(const std::string& t) {
  if (t == "auto") return AxisOrder::Auto;
  if (t == "east-north") return AxisOrder::EastNorth;
  if (t == "north-east") return AxisOrder::NorthEast;
  throw Error(ErrorKind::Configuration, "axis order must be auto, east-north or north-east");
}

std::string to_string(AxisOrder a) {
  return a == AxisOrder::Auto ? "auto" : a == AxisOrder::EastNorth ? "east-north" : "north-east";
}

}  // namespace

std::filesystem::path PipelineConfig::resolve(const std::filesystem::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return base_dir / p;
}

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir, const std::string& name) {
  const Reader rd(name);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    rd.fail(e.mark, e.msg);
  }
  PipelineConfig c;
  c.base_dir = base_dir;
  if (root.IsNull()) return c;
  if (!root.IsMap()) rd.fail(root.Mark(), "the config must be a mapping of sections");

  auto num = [&](double& dst, const std::string& key) {
    return [&rd, &dst, key](const YAML::Node& n) { dst = rd.as<double>(n, key, "a number"); };
  };
  auto opt_num = [&](std::optional<double>& dst, const std::string& key) {
    return [&rd, &dst, key](const YAML::Node& n) { dst = rd.as<double>(n, key, "a number"); };
  };
  auto integer = [&](int& dst, const std::string& key) {
    return [&rd, &dst, key](const YAML::Node& n) { dst = rd.as<int>(n, key, "an integer"); };
  };
  auto str = [&](std::string& dst, const std::string& key) {
    return [&rd, &dst, key](const YAML::Node& n) { dst = rd.as<std::string>(n, key, "a string"); };
  };
  auto path = [&](std::filesystem::path& dst, const std::string& key) {
    return [&rd, &dst, key](const YAML::Node& n) { dst = rd.as<std::string>(n, key, "a path"); };
  };

  const std::map<std::string, Setter> sections = {
      {"version",
       [&](const YAML::Node& n) {
         c.version = rd.as<int>(n, "version", "an integer");
         if (c.version != kConfigVersion) {
           rd.fail(n.Mark(), "unsupported config version " + std::to_string(c.version) + " (expected " +
                                 std::to_string(kConfigVersion) + ")");
         }
       }},
      {"input",
       [&](const YAML::Node& n) {
         rd.section(n, "input",
                    {{"cloud", path(c.input.cloud, "cloud")},
                     {"trajectory", path(c.input.trajectory, "trajectory")},
                     {"seeds", path(c.input.seeds, "seeds")},
                     {"crs", [&](const YAML::Node& v) { c.input.crs = rd.as<std::string>(v, "crs", "a string"); }},
                     {"unit", [&](const YAML::Node& v) {
                        c.input.unit = rd.parsed(v, "unit", [](const std::string& t) { return parse_linear_unit(t); });
                      }}});
       }},
      {"classify",
       [&](const YAML::Node& n) {
         rd.section(n, "classify",
                    {{"cell_size", opt_num(c.classify.cell_size, "cell_size")},
                     {"max_window", opt_num(c.classify.max_window, "max_window")},
                     {"slope_threshold", opt_num(c.classify.slope_threshold, "slope_threshold")},
                     {"elevation_threshold", opt_num(c.classify.elevation_threshold, "elevation_threshold")},
                     {"elevation_scaling", opt_num(c.classify.elevation_scaling, "elevation_scaling")},
                     {"low_max_m", num(c.classify.low_max_m, "low_max_m")},
                     {"medium_max_m", num(c.classify.medium_max_m, "medium_max_m")},
                     {"surface_cell_m", num(c.classify.surface_cell_m, "surface_cell_m")}});
       }},
      {"render_bev",
       [&](const YAML::Node& n) { rd.section(n, "render_bev", {{"cell_size", num(c.bev.cell_size, "cell_size")}}); }},
      {"render_views",
       [&](const YAML::Node& n) {
         auto& v = c.views;
         rd.section(n, "render_views",
                    {{"spacing", num(v.spacing, "spacing")},
                     {"point_size", integer(v.point_size, "point_size")},
                     {"classes", [&](const YAML::Node& x) {
                        v.classes = rd.parsed(x, "classes", [](const std::string& t) { return parse_class_selector(t); });
                      }},
                     {"pixel", [&](const YAML::Node& x) {
                        v.pixel = rd.parsed(x, "pixel", [](const std::string& t) { return parse_pixel_attribute(t); });
                      }},
                     {"focal_mm", num(v.intrinsics.focal_mm, "focal_mm")},
                     {"pixel_um", num(v.intrinsics.pixel_um, "pixel_um")},
                     {"width", integer(v.intrinsics.width, "width")},
                     {"height_px", integer(v.intrinsics.height, "height_px")},
                     {"scale", num(v.scale, "scale")},
                     {"camera_height", num(v.height, "camera_height")},
                     {"pitch_down_deg", num(v.pitch_down_deg, "pitch_down_deg")},
                     {"side_yaw_deg", num(v.side_yaw_deg, "side_yaw_deg")}});
       }},
      {"fetch_sat",
       [&](const YAML::Node& n) {
         auto& s = c.satellite;
         rd.section(n, "fetch_sat",
                    {{"source", str(s.source, "source")},
                     {"layer", str(s.layer, "layer")},
                     {"resolution", num(s.resolution, "resolution")},
                     {"format", str(s.format, "format")},
                     {"axis_order", [&](const YAML::Node& x) { s.axis_order = rd.parsed(x, "axis_order", parse_axis_order); }},
                     {"cache_dir", path(s.cache_dir, "cache_dir")}});
       }},
      {"segment",
       [&](const YAML::Node& n) {
         auto& s = c.segment;
         rd.section(n, "segment",
                    {{"backend", str(s.backend, "backend")},
                     {"tolerance", integer(s.tolerance, "tolerance")},
                     {"simplify", num(s.simplify, "simplify")},
                     {"seed_tolerance", num(s.seed_tolerance, "seed_tolerance")},
                     {"timeout_ms", integer(s.timeout_ms, "timeout_ms")}});
       }},
      {"pool",
       [&](const YAML::Node& n) {
         rd.section(n, "pool", {{"min_votes", [&](const YAML::Node& x) {
                                   const int v = rd.as<int>(x, "min_votes", "an integer");
                                   if (v < 1) rd.fail(x.Mark(), "'min_votes' must be at least 1");
                                   c.pool.min_votes = static_cast<uint32_t>(v);
                                 }}});
       }},
      {"metrics",
       [&](const YAML::Node& n) {
         auto& o = c.metrics.options;
         rd.section(n, "metrics",
                    {{"class", [&](const YAML::Node& x) {
                        c.metrics.feature_class = rd.parsed(x, "class", [](const std::string& t) {
                          const auto fc = parse_feature_class(t);
                          if (!fc) throw Error(ErrorKind::Configuration, "unknown feature class '" + t + "'");
                          return *fc;
                        });
                      }},
                     {"cell_m", num(o.cell_m, "cell_m")},
                     {"min_arc_m", num(o.min_arc_m, "min_arc_m")},
                     {"station_spacing_m", num(o.station_spacing_m, "station_spacing_m")},
                     {"probe_halfwidth_m", num(o.probe_halfwidth_m, "probe_halfwidth_m")},
                     {"slope_window_m", num(o.slope_window_m, "slope_window_m")}});
       }},
      {"report", [&](const YAML::Node& n) { rd.section(n, "report", {{"assessment", path(c.report.assessment, "assessment")}}); }},
  };
  rd.section(root, "top level", sections);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Configuration, "cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(ss.str(), base, path.string());
}

nlohmann::json config_snapshot(const PipelineConfig& c) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  const auto& v = c.views;
  return {
      {"version", c.version},
      {"input",
       {{"cloud", c.resolve(c.input.cloud).string()},
        {"trajectory", c.resolve(c.input.trajectory).string()},
        {"seeds", c.resolve(c.input.seeds).string()},
        {"crs", c.input.crs ? json(*c.input.crs) : json(nullptr)},
        {"unit", c.input.unit ? json(to_string(*c.input.unit)) : json(nullptr)}}},
      {"classify",
       {{"cell_size", opt(c.classify.cell_size)},
        {"max_window", opt(c.classify.max_window)},
        {"slope_threshold", opt(c.classify.slope_threshold)},
        {"elevation_threshold", opt(c.classify.elevation_threshold)},
        {"elevation_scaling", opt(c.classify.elevation_scaling)},
        {"low_max_m", c.classify.low_max_m},
        {"medium_max_m", c.classify.medium_max_m},
        {"surface_cell_m", c.classify.surface_cell_m}}},
      {"render_bev", {{"cell_size", c.bev.cell_size}}},
      {"render_views",
       {{"spacing", v.spacing},
        {"point_size", v.point_size},
        {"classes", to_string(v.classes)},
        {"pixel", to_string(v.pixel)},
        {"focal_mm", v.intrinsics.focal_mm},
        {"pixel_um", v.intrinsics.pixel_um},
        {"width", v.intrinsics.width},
        {"height_px", v.intrinsics.height},
        {"scale", v.scale},
        {"camera_height", v.height},
        {"pitch_down_deg", v.pitch_down_deg},
        {"side_yaw_deg", v.side_yaw_deg}}},
      {"fetch_sat",
       {{"source", c.satellite.source},
        {"layer", c.satellite.layer},
        {"resolution", c.satellite.resolution},
        {"format", c.satellite.format},
        {"axis_order", to_string(c.satellite.axis_order)},
        {"cache_dir", c.resolve(c.satellite.cache_dir).string()}}},
      {"segment",
       {{"backend", c.segment.backend},
        {"tolerance", c.segment.tolerance},
        {"simplify", c.segment.simplify},
        {"seed_tolerance", c.segment.seed_tolerance},
        {"timeout_ms", c.segment.timeout_ms}}},
      {"pool", {{"min_votes", c.pool.min_votes}}},
      {"metrics",
       {{"class", snake_name(c.metrics.feature_class)},
        {"cell_m", c.metrics.options.cell_m},
        {"min_arc_m", c.metrics.options.min_arc_m},
        {"station_spacing_m", c.metrics.options.station_spacing_m},
        {"probe_halfwidth_m", c.metrics.options.probe_halfwidth_m},
        {"slope_window_m", c.metrics.options.slope_window_m}}},
      {"report", {{"assessment", c.resolve(c.report.assessment).string()}}},
  };
}

}  // namespace pai
