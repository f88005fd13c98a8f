#include "pai/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "binary_io.hpp"
#include "pai/assessment.hpp"
#include "pai/coco.hpp"
#include "pai/error.hpp"
#include "pai/ground_classify.hpp"
#include "pai/hash.hpp"
#include "pai/image_io.hpp"
#include "pai/las.hpp"
#include "pai/local_wms.hpp"
#include "pai/mask_reprojection.hpp"
#include "pai/prompt_seeds.hpp"
#include "pai/render.hpp"
#include "pai/segmentation.hpp"
#include "pai/synthetic_city.hpp"
#include "pai/trajectory.hpp"

namespace pai {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::string kManifestFile = "manifest.json";
const std::string kClassified = "classify/classified.las";
const std::string kCameras = "views/cameras.json";
const std::string kSatellite = "sat/rep5.tif";
const std::string kMasks = "segment/masks.json";
const std::string kPolygons = "reproject/polygons.json";
const std::string kVotes = "reproject/votes.json";

struct Ctx {
  const PipelineConfig& cfg;
  const RunOptions& opt;
  std::ostream& log;
  const RunManifest& manifest;
  fs::path run;
  std::mutex log_mu;

  fs::path at(const std::string& rel) const { return run / rel; }
  void say(const std::string& line) {
    std::lock_guard lock(log_mu);
    log << line << '\n';
  }
  std::vector<std::string> outputs_of(const std::string& stage) const {
    std::vector<std::string> out;
    auto it = manifest.stages.find(stage);
    if (it == manifest.stages.end()) return out;
    for (const auto& [rel, sha] : it->second.outputs) out.push_back(rel);
    return out;
  }
};

struct Plan {
  std::vector<std::string> prerequisites;
  std::vector<std::string> optional_prerequisites;  // used when present
  std::vector<fs::path> external_inputs;
  json params = json::object();
  std::string output_dir;
  std::function<std::vector<std::string>(Ctx&)> run;
};

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

fs::path required_input(const PipelineConfig& cfg, const fs::path& p, const std::string& key) {
  if (p.empty()) throw Error(ErrorKind::Configuration, "config key '" + key + "' is not set");
  const fs::path full = cfg.resolve(p);
  if (!fs::exists(full)) throw Error(ErrorKind::Io, "'" + key + "' points at missing file " + full.string());
  return full;
}

PointCloud load_classified(Ctx& ctx) {
  LasLoadOptions o;
  o.crs_override = ctx.cfg.input.crs;
  o.unit_override = ctx.cfg.input.unit;
  return load_las(ctx.at(kClassified), o);
}

// ---- classify ----

std::vector<std::string> run_classify(Ctx& ctx) {
  LasLoadOptions o;
  o.crs_override = ctx.cfg.input.crs;
  o.unit_override = ctx.cfg.input.unit;
  const PointCloud cloud = load_las(required_input(ctx.cfg, ctx.cfg.input.cloud, "input.cloud"), o);
  const auto& c = ctx.cfg.classify;
  SmrfParams p = SmrfParams::defaults(cloud.metadata().linear_unit);
  if (c.cell_size) p.cell_size = *c.cell_size;
  if (c.max_window) p.max_window = *c.max_window;
  if (c.slope_threshold) p.slope_threshold = *c.slope_threshold;
  if (c.elevation_threshold) p.elevation_threshold = *c.elevation_threshold;
  if (c.elevation_scaling) p.elevation_scaling = *c.elevation_scaling;
  const PointCloud ground = classify_ground(cloud, p);
  const PointCloud tiers = classify_vegetation(ground, {c.low_max_m, c.medium_max_m}, c.surface_cell_m);
  std::size_t n_ground = 0;
  for (std::size_t i = 0; i < tiers.size(); ++i) n_ground += tiers.label(i) == ClassLabel::ground();
  ctx.say("classify: " + std::to_string(n_ground) + " of " + std::to_string(tiers.size()) + " points ground");
  fs::create_directories(ctx.at("classify"));
  write_las(tiers, ctx.at(kClassified));
  return {kClassified};
}

// ---- render-bev ----

std::vector<std::string> run_render_bev(Ctx& ctx) {
  const PointCloud cloud = load_classified(ctx);
  struct Variant {
    ClassSelector sel;
    PixelAttribute attr;
  };
  std::vector<Variant> variants;
  for (auto sel : {ClassSelector::GroundAndLowVeg, ClassSelector::All}) {
    for (auto attr : {PixelAttribute::Intensity, PixelAttribute::Color}) {
      if (attr == PixelAttribute::Color && !cloud.has_color()) {
        ctx.say("render-bev: warning: the cloud has no color; skipping " +
                to_string(representation_for(ViewKind::BEV, sel, attr)));
        continue;
      }
      variants.push_back({sel, attr});
    }
  }
  fs::create_directories(ctx.at("bev"));
  std::vector<std::string> outputs(variants.size() * 2);
  parallel_for(variants.size(), ctx.opt.jobs, [&](std::size_t k) {
    const auto r = render_bev(cloud, variants[k].sel, variants[k].attr, ctx.cfg.bev.cell_size);
    const std::string stem = "bev/" + to_string(r.image.representation());
    write_geotiff(r.image, ctx.at(stem + ".tif"));
    write_correspondence(r.correspondence, ctx.at(stem + ".cmap"));
    outputs[2 * k] = stem + ".tif";
    outputs[2 * k + 1] = stem + ".cmap";
    ctx.say("render-bev: " + stem + ".tif " + std::to_string(r.image.width()) + "x" + std::to_string(r.image.height()));
  });
  return outputs;
}

// ---- render-views ----

CameraIntrinsics view_intrinsics(const PipelineConfig& cfg) {
  return cfg.views.scale == 1.0 ? cfg.views.intrinsics : cfg.views.intrinsics.scaled(cfg.views.scale);
}

std::string view_name(const CameraView& v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "views/s%02d_%s", v.station, to_string(v.direction).c_str());
  return buf;
}

json pose_json(const CameraPose& p) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) rot.push_back({p.rotation(r, 0), p.rotation(r, 1), p.rotation(r, 2)});
  return {{"position", {p.position.x(), p.position.y(), p.position.z()}}, {"rotation", rot}};
}

CameraPose pose_from_json(const json& j) {
  CameraPose p;
  for (int k = 0; k < 3; ++k) p.position[k] = j.at("position").at(k).get<double>();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = j.at("rotation").at(r).at(c).get<double>();
  }
  return p;
}

std::vector<std::string> run_render_views(Ctx& ctx) {
  const PointCloud cloud = load_classified(ctx);
  const Trajectory traj = load_trajectory_csv(required_input(ctx.cfg, ctx.cfg.input.trajectory, "input.trajectory"));
  const auto& v = ctx.cfg.views;
  CameraRig rig;
  rig.spacing = v.spacing;
  rig.height = v.height;
  rig.pitch_down_deg = v.pitch_down_deg;
  rig.side_yaw_deg = v.side_yaw_deg;
  const CameraPlan plan = plan_cameras(traj, rig);
  for (const auto& w : plan.warnings) ctx.say("render-views: warning: " + w);
  const CameraIntrinsics intr = view_intrinsics(ctx.cfg);
  fs::create_directories(ctx.at("views"));

  std::vector<std::string> outputs(plan.views.size() * 2);
  parallel_for(plan.views.size(), ctx.opt.jobs, [&](std::size_t k) {
    const auto r = render_street_view(cloud, v.classes, v.pixel, intr, plan.views[k].pose, v.point_size);
    const std::string stem = view_name(plan.views[k]);
    write_png(r.image, ctx.at(stem + ".png"));
    write_correspondence(r.correspondence, ctx.at(stem + ".cmap"));
    outputs[2 * k] = stem + ".png";
    outputs[2 * k + 1] = stem + ".cmap";
  });

  json cams = {{"intrinsics",
                {{"focal_mm", intr.focal_mm}, {"pixel_um", intr.pixel_um}, {"width", intr.width}, {"height", intr.height}}},
               {"representation", to_string(representation_for(ViewKind::StreetView, v.classes, v.pixel))},
               {"point_size", v.point_size},
               {"views", json::array()}};
  for (const auto& view : plan.views) {
    json j = pose_json(view.pose);
    j["image"] = view_name(view) + ".png";
    j["station"] = view.station;
    j["arc_length"] = view.arc_length;
    j["direction"] = to_string(view.direction);
    cams["views"].push_back(j);
  }
  detail::write_file_text(ctx.at(kCameras), cams.dump(1) + "\n");
  outputs.push_back(kCameras);
  ctx.say("render-views: " + std::to_string(plan.views.size()) + " street views at " + std::to_string(intr.width) +
          "x" + std::to_string(intr.height));
  return outputs;
}

// ---- fetch-sat ----

std::vector<std::string> run_fetch_sat(Ctx& ctx) {
  const auto& s = ctx.cfg.satellite;
  if (s.source.empty()) throw Error(ErrorKind::Configuration, "config key 'fetch_sat.source' is not set");
  const PointCloud cloud = load_classified(ctx);
  SatelliteSource src;
  src.layer = s.layer;
  src.format = s.format;
  src.axis_order = s.axis_order;
  std::unique_ptr<Transport> owned;
  Transport* transport = ctx.opt.transport;
  if (s.source.rfind("file:", 0) == 0) {
    const fs::path file = required_input(ctx.cfg, s.source.substr(5), "fetch_sat.source");
    owned = std::make_unique<RasterWmsTransport>(read_geotiff(file));
    transport = owned.get();
    src.kind = SatelliteSourceKind::Wms;
    src.endpoint = "file://" + fs::absolute(file).lexically_normal().string();
  } else if (s.source.rfind("wms:", 0) == 0) {
    src.kind = SatelliteSourceKind::Wms;
    src.endpoint = s.source.substr(4);
  } else if (s.source.rfind("xyz:", 0) == 0) {
    src.kind = SatelliteSourceKind::Xyz;
    src.endpoint = s.source.substr(4);
  } else {
    throw Error(ErrorKind::Configuration,
                "fetch_sat.source must start with wms:, xyz: or file:, got '" + s.source + "'");
  }
  if (!transport) {
    owned = std::make_unique<HttplibTransport>();
    transport = owned.get();
  }
  FetchOptions fo;
  if (!s.cache_dir.empty()) {
    fo.cache_dir = ctx.cfg.resolve(s.cache_dir);
  } else if (const char* env = std::getenv(kCacheDirEnv); env && *env) {
    fo.cache_dir = env;
  }
  fo.refresh = ctx.opt.force;
  const RasterImage sat =
      fetch_satellite(extent(cloud), cloud.metadata().crs_id, s.resolution, src, *transport, fo);
  fs::create_directories(ctx.at("sat"));
  write_geotiff(sat, ctx.at(kSatellite));
  ctx.say("fetch-sat: " + std::string(kSatellite) + " " + std::to_string(sat.width()) + "x" +
          std::to_string(sat.height()));
  return {kSatellite};
}

// ---- segment ----

struct RunImage {
  RegisteredImage reg;
  RasterImage image;
  std::string cmap;  // run-relative, empty when the image has none
};

/// Every rendered or fetched image of the run, in registry order: BEV, satellite, street views.
std::vector<RunImage> collect_images(Ctx& ctx, bool load_pixels) {
  std::vector<RunImage> out;
  auto add = [&](const std::string& rel, bool geotiff, std::optional<RepresentationId> rep) {
    RunImage ri;
    ri.image = geotiff ? read_geotiff(ctx.at(rel)) : read_png(ctx.at(rel));
    ri.reg = {rel, ri.image.width(), ri.image.height(), rep.value_or(ri.image.representation()), 0};
    ri.image.set_representation(ri.reg.representation);
    const std::string cmap = rel.substr(0, rel.size() - 4) + ".cmap";
    if (fs::exists(ctx.at(cmap))) ri.cmap = cmap;
    if (!load_pixels) ri.image = RasterImage();
    out.push_back(std::move(ri));
  };
  for (const auto& rel : ctx.outputs_of("render-bev")) {
    if (ends_with(rel, ".tif")) add(rel, true, parse_representation(fs::path(rel).stem().string()));
  }
  for (const auto& rel : ctx.outputs_of("fetch-sat")) add(rel, true, RepresentationId::Rep5);
  if (!ctx.outputs_of("render-views").empty()) {
    const json cams = json::parse(detail::read_file_text(ctx.at(kCameras)));
    const auto rep = parse_representation(cams.at("representation").get<std::string>());
    for (const auto& v : cams.at("views")) add(v.at("image").get<std::string>(), false, rep);
  }
  return out;
}

ImageRegistry registry_of(const std::vector<RunImage>& images) {
  ImageRegistry reg;
  for (const auto& i : images) reg.add(i.reg);
  return reg;
}

std::vector<std::string> run_segment(Ctx& ctx) {
  auto images = collect_images(ctx, true);
  const ImageRegistry registry = registry_of(images);
  const std::string& backend = ctx.cfg.segment.backend;
  std::vector<MaskAnnotation> masks;

  if (backend.rfind("coco:", 0) == 0) {
    const auto imported = import_coco(required_input(ctx.cfg, backend.substr(5), "segment.backend"), registry);
    for (const auto& r : imported.rejects) {
      ctx.say("segment: skipped annotation " + std::to_string(r.annotation_id) + " (" + r.category + "): " + r.reason);
    }
    masks = imported.annotations;
  } else if (backend == "stub" || backend.rfind("remote:", 0) == 0) {
    const auto seeds = parse_seeds_json(
        detail::read_file_text(required_input(ctx.cfg, ctx.cfg.input.seeds, "input.seeds")));
    const auto classes = seeded_classes(seeds);
    const PointCloud cloud = load_classified(ctx);
    std::map<std::string, CameraPose> poses;
    CameraIntrinsics intr;
    if (fs::exists(ctx.at(kCameras)) && !ctx.outputs_of("render-views").empty()) {
      const json cams = json::parse(detail::read_file_text(ctx.at(kCameras)));
      const auto& ij = cams.at("intrinsics");
      intr = {ij.at("focal_mm").get<double>(), ij.at("pixel_um").get<double>(), ij.at("width").get<int>(),
              ij.at("height").get<int>()};
      for (const auto& v : cams.at("views")) poses[v.at("image").get<std::string>()] = pose_from_json(v);
    }
    StubOptions so{ctx.cfg.segment.tolerance, ctx.cfg.segment.simplify};
    RemoteOptions ro;
    std::unique_ptr<Transport> owned;
    Transport* transport = ctx.opt.transport;
    if (backend != "stub") {
      ro.endpoint = backend.substr(7);
      ro.timeout = std::chrono::milliseconds(ctx.cfg.segment.timeout_ms);
      if (!transport) {
        owned = std::make_unique<HttplibTransport>();
        transport = owned.get();
      }
      const auto health = check_health(ro.endpoint, *transport);
      if (!health.ok) {
        throw Error(ErrorKind::Transport, "segmentation service at " + ro.endpoint + " is not healthy: " + health.detail);
      }
    }
    const double tol = ctx.cfg.segment.seed_tolerance;
    std::vector<std::vector<MaskAnnotation>> per_image(images.size());
    parallel_for(images.size(), ctx.opt.jobs, [&](std::size_t k) {
      const RunImage& ri = images[k];
      const ImageRef ref{ri.reg.representation, ri.reg.file_name};
      std::optional<CorrespondenceMap> cmap;
      if (!ri.cmap.empty()) cmap = read_correspondence(ctx.at(ri.cmap));
      for (FeatureClass c : classes) {
        std::vector<PromptPoint> prompts;
        if (ri.reg.representation == RepresentationId::Rep5) {
          prompts = ortho_prompts(seeds, c, ri.image);
        } else if (describe(ri.reg.representation).view == ViewKind::BEV && cmap && ri.image.geo) {
          prompts = bev_prompts(seeds, c, *ri.image.geo, *cmap, cloud, tol);
        } else if (cmap && poses.count(ri.reg.file_name)) {
          prompts = view_prompts(seeds, c, intr, poses.at(ri.reg.file_name), *cmap, cloud, tol);
        }
        if (prompts.empty()) continue;
        auto got = backend == "stub" ? segment_stub(ri.image, prompts, c, ref, so)
                                     : segment_remote(ri.image, prompts, c, ref, ro, *transport);
        per_image[k].insert(per_image[k].end(), got.begin(), got.end());
      }
    });
    for (auto& m : per_image) masks.insert(masks.end(), m.begin(), m.end());
  } else {
    throw Error(ErrorKind::Configuration,
                "segment.backend must be stub, coco:<path> or remote:<url>, got '" + backend + "'");
  }

  fs::create_directories(ctx.at("segment"));
  export_coco(masks, registry, ctx.at(kMasks));
  std::map<FeatureClass, int> per_class;
  for (const auto& m : masks) ++per_class[m.feature_class];
  std::string summary;
  for (const auto& [c, n] : per_class) summary += " " + snake_name(c) + "=" + std::to_string(n);
  ctx.say("segment: " + std::to_string(masks.size()) + " masks on " + std::to_string(images.size()) + " images;" +
          summary);
  return {kMasks};
}

// ---- reproject ----

json ring_json(const Ring& r) {
  json out = json::array();
  for (const auto& p : r) out.push_back({p.x, p.y});
  return out;
}

Ring ring_from_json(const json& j) {
  Ring r;
  for (const auto& p : j) r.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return r;
}

std::vector<std::string> run_reproject(Ctx& ctx) {
  const auto images = collect_images(ctx, true);
  const ImageRegistry registry = registry_of(images);
  const auto imported = import_coco(ctx.at(kMasks), registry);
  std::map<std::string, std::vector<MaskAnnotation>> by_image;
  for (const auto& m : imported.annotations) by_image[m.image.image_id].push_back(m);
  const PointCloud cloud = load_classified(ctx);
  const std::string crs = cloud.metadata().crs_id;

  json polys = {{"crs_id", crs}, {"polygons", json::array()}};
  json votes = {{"point_count", cloud.size()}, {"views", json::array()}};
  std::size_t n_votes = 0;
  for (const auto& ri : images) {
    const auto it = by_image.find(ri.reg.file_name);
    const std::vector<MaskAnnotation> none;
    const auto& masks = it == by_image.end() ? none : it->second;
    if (describe(ri.reg.representation).view != ViewKind::StreetView) {
      if (ri.image.crs_id != crs) {
        throw Error(ErrorKind::Alignment,
                    ri.reg.file_name + " is in " + ri.image.crs_id + " but the cloud is in " + crs);
      }
      for (const auto& m : masks) {
        const GeoPolygon g = bev_mask_to_geo(m, ri.image.geo, crs);
        json holes = json::array();
        for (const auto& h : g.polygon.holes) holes.push_back(ring_json(h));
        polys["polygons"].push_back({{"class", snake_name(g.feature_class)},
                                     {"sources", {to_string(ri.reg.representation)}},
                                     {"image", ri.reg.file_name},
                                     {"outer", ring_json(g.polygon.outer)},
                                     {"holes", holes}});
      }
    }
    if (!ri.cmap.empty()) {
      const CorrespondenceMap cmap = read_correspondence(ctx.at(ri.cmap));
      const auto v = view_votes(masks, cmap, ri.reg.width, ri.reg.height);
      json arr = json::array();
      for (const auto& vote : v) arr.push_back({vote.point_index, las_code(vote.feature_class)});
      n_votes += v.size();
      votes["views"].push_back({{"image", ri.reg.file_name}, {"votes", arr}});
    }
  }
  fs::create_directories(ctx.at("reproject"));
  detail::write_file_text(ctx.at(kPolygons), polys.dump(1) + "\n");
  detail::write_file_text(ctx.at(kVotes), votes.dump() + "\n");
  ctx.say("reproject: " + std::to_string(polys["polygons"].size()) + " geo polygons, " + std::to_string(n_votes) +
          " point votes from " + std::to_string(votes["views"].size()) + " views");
  return {kPolygons, kVotes};
}

// ---- pool ----

std::vector<GeoPolygon> read_polygons(const fs::path& path) {
  const json doc = json::parse(detail::read_file_text(path));
  std::vector<GeoPolygon> out;
  for (const auto& p : doc.at("polygons")) {
    GeoPolygon g;
    g.feature_class = parse_feature_class(p.at("class").get<std::string>()).value();
    for (const auto& s : p.at("sources")) g.sources.push_back(parse_representation(s.get<std::string>()));
    g.polygon.outer = ring_from_json(p.at("outer"));
    for (const auto& h : p.at("holes")) g.polygon.holes.push_back(ring_from_json(h));
    g.crs_id = doc.at("crs_id").get<std::string>();
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<std::string> run_pool(Ctx& ctx) {
  const PointCloud cloud = load_classified(ctx);
  const json doc = json::parse(detail::read_file_text(ctx.at(kVotes)));
  if (doc.at("point_count").get<std::size_t>() != cloud.size()) {
    throw Error(ErrorKind::ReferentialIntegrity, "votes were cast on a cloud of " +
                                                     std::to_string(doc.at("point_count").get<std::size_t>()) +
                                                     " points; the classified cloud has " + std::to_string(cloud.size()));
  }
  std::vector<std::vector<LabelVote>> views;
  for (const auto& v : doc.at("views")) {
    std::vector<LabelVote> votes;
    for (const auto& e : v.at("votes")) {
      const auto fc = feature_from_las_code(e.at(1).get<uint8_t>());
      if (!fc) throw Error(ErrorKind::Parse, "votes.json: unknown class code " + e.at(1).dump());
      votes.push_back({e.at(0).get<uint32_t>(), *fc});
    }
    views.push_back(std::move(votes));
  }
  const LabeledCloud labeled = pool_labels(views, cloud.size(), ctx.cfg.pool.min_votes);
  const auto files = export_inventory(read_polygons(ctx.at(kPolygons)), labeled, cloud, ctx.at("inventory"));
  ctx.say("pool: " + std::to_string(labeled.labeled_count()) + " of " + std::to_string(cloud.size()) +
          " points labeled");
  auto rel = [&](const fs::path& p) { return fs::relative(p, ctx.run).generic_string(); };
  return {rel(files.geojson), rel(files.las), rel(files.label_map)};
}

// ---- metrics ----

std::vector<std::string> run_metrics(Ctx& ctx) {
  const PointCloud cloud = load_classified(ctx);
  LabeledCloud labeled;
  labeled.labels = import_labels(ctx.at("inventory/labeled.las"));
  const auto segs = sidewalk_metrics(cloud, labeled, ctx.cfg.metrics.feature_class, ctx.cfg.metrics.options);
  fs::create_directories(ctx.at("metrics"));
  detail::write_file_text(ctx.at("metrics/stations.csv"), stations_csv(segs));
  detail::write_file_text(ctx.at("metrics/centerlines.geojson"), metrics_geojson(segs, cloud.metadata().crs_id));
  std::size_t stations = 0;
  for (const auto& s : segs) stations += s.stations.size();
  ctx.say("metrics: " + std::to_string(segs.size()) + " " + snake_name(ctx.cfg.metrics.feature_class) +
          " centerlines, " + std::to_string(stations) + " stations");
  return {"metrics/stations.csv", "metrics/centerlines.geojson"};
}

// ---- report ----

std::vector<std::string> run_report(Ctx& ctx) {
  const auto images = collect_images(ctx, false);
  std::map<std::string, int> image_counts;
  for (const auto& i : images) {
    const auto view = describe(i.reg.representation).view;
    ++image_counts[view == ViewKind::BEV ? "bev" : view == ViewKind::Satellite ? "satellite" : "street_view"];
  }
  const auto imported = import_coco(ctx.at(kMasks), registry_of(images));
  std::map<std::string, int> masks;
  for (const auto& m : imported.annotations) ++masks[snake_name(m.feature_class)];
  std::map<std::string, int> labeled;
  for (const auto& l : import_labels(ctx.at("inventory/labeled.las"))) {
    if (l) ++labeled[snake_name(*l)];
  }
  const json inv = json::parse(detail::read_file_text(ctx.at("inventory/inventory.geojson")));
  std::map<std::string, int> polygons;
  for (const auto& f : inv.at("features")) ++polygons[f.at("properties").at("feature_class").get<std::string>()];

  // station summary from the CSV: segment,s_m,width_m,running_slope_pct,cross_slope_pct
  std::istringstream csv(detail::read_file_text(ctx.at("metrics/stations.csv")));
  std::string line;
  std::getline(csv, line);
  std::vector<double> widths, running, cross;
  std::size_t stations = 0;
  while (std::getline(csv, line)) {
    ++stations;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string part; std::getline(ss, part, ',');) f.push_back(part);
    f.resize(5);
    if (!f[2].empty()) widths.push_back(std::stod(f[2]));
    if (!f[3].empty()) running.push_back(std::stod(f[3]));
    if (!f[4].empty()) cross.push_back(std::stod(f[4]));
  }
  auto stats = [](const std::vector<double>& v) {
    if (v.empty()) return json(nullptr);
    return json{{"min", *std::min_element(v.begin(), v.end())},
                {"median", percentile(v, 50)},
                {"max", *std::max_element(v.begin(), v.end())}};
  };
  int total = 0;
  for (const auto& [k, n] : image_counts) total += n;

  json summary = {{"images", image_counts},
                  {"images_total", total},
                  {"masks", masks},
                  {"labeled_points", labeled},
                  {"inventory_polygons", polygons},
                  {"stations", stations},
                  {"width_m", stats(widths)},
                  {"running_slope_pct", stats(running)},
                  {"cross_slope_pct", stats(cross)}};
  fs::create_directories(ctx.at("report"));
  detail::write_file_text(ctx.at("report/summary.json"), summary.dump(2) + "\n");

  std::ostringstream txt;
  txt << "images: " << total;
  for (const auto& [k, n] : image_counts) txt << "  " << k << " " << n;
  txt << "\nmasks:";
  for (const auto& [k, n] : masks) txt << "  " << k << " " << n;
  txt << "\ninventory polygons:";
  for (const auto& [k, n] : polygons) txt << "  " << k << " " << n;
  txt << "\nlabeled points:";
  for (const auto& [k, n] : labeled) txt << "  " << k << " " << n;
  txt << "\nstations: " << stations << "\n";
  auto line_of = [&](const char* name, const json& s) {
    if (s.is_null()) return;
    txt << name << ": min " << s["min"].get<double>() << "  median " << s["median"].get<double>() << "  max "
        << s["max"].get<double>() << "\n";
  };
  line_of("width_m", summary["width_m"]);
  line_of("running_slope_pct", summary["running_slope_pct"]);
  line_of("cross_slope_pct", summary["cross_slope_pct"]);
  detail::write_file_text(ctx.at("report/summary.txt"), txt.str());

  std::vector<std::string> out = {"report/summary.json", "report/summary.txt"};
  if (!ctx.cfg.report.assessment.empty()) {
    const auto matrix = parse_assessment_json(
        detail::read_file_text(required_input(ctx.cfg, ctx.cfg.report.assessment, "report.assessment")));
    record_assessment(matrix, ctx.at("report"));
    out.push_back("report/assessment.json");
    out.push_back("report/assessment.txt");
  }
  ctx.say("report: report/summary.txt");
  ctx.say(txt.str().substr(0, txt.str().size() - 1));
  return out;
}

Plan plan_for(const std::string& name, const PipelineConfig& cfg) {
  const json snap = config_snapshot(cfg);
  Plan p;
  p.output_dir = name;
  if (name == "classify") {
    p.external_inputs = {cfg.resolve(cfg.input.cloud)};
    p.params = {snap["input"], snap["classify"]};
    p.run = run_classify;
  } else if (name == "render-bev") {
    p.prerequisites = {"classify"};
    p.params = snap["render_bev"];
    p.output_dir = "bev";
    p.run = run_render_bev;
  } else if (name == "render-views") {
    p.prerequisites = {"classify"};
    p.external_inputs = {cfg.resolve(cfg.input.trajectory)};
    p.params = snap["render_views"];
    p.output_dir = "views";
    p.run = run_render_views;
  } else if (name == "fetch-sat") {
    p.prerequisites = {"classify"};
    p.params = snap["fetch_sat"];
    if (cfg.satellite.source.rfind("file:", 0) == 0) p.external_inputs = {cfg.resolve(cfg.satellite.source.substr(5))};
    p.output_dir = "sat";
    p.run = run_fetch_sat;
  } else if (name == "segment") {
    p.prerequisites = {"classify", "render-bev", "render-views"};
    p.optional_prerequisites = {"fetch-sat"};
    p.params = snap["segment"];
    const auto& b = cfg.segment.backend;
    if (b.rfind("coco:", 0) == 0) {
      p.external_inputs = {cfg.resolve(b.substr(5))};
    } else {
      p.external_inputs = {cfg.resolve(cfg.input.seeds)};
    }
    p.run = run_segment;
  } else if (name == "reproject") {
    p.prerequisites = {"classify", "render-bev", "render-views", "segment"};
    p.optional_prerequisites = {"fetch-sat"};
    p.run = run_reproject;
  } else if (name == "pool") {
    p.prerequisites = {"classify", "reproject"};
    p.params = snap["pool"];
    p.output_dir = "inventory";
    p.run = run_pool;
  } else if (name == "metrics") {
    p.prerequisites = {"classify", "pool"};
    p.params = snap["metrics"];
    p.run = run_metrics;
  } else if (name == "report") {
    p.prerequisites = {"render-bev", "render-views", "segment", "pool", "metrics"};
    p.optional_prerequisites = {"fetch-sat"};
    p.params = snap["report"];
    if (!cfg.report.assessment.empty()) p.external_inputs = {cfg.resolve(cfg.report.assessment)};
    p.run = run_report;
  } else {
    throw Error(ErrorKind::Usage, "unknown stage '" + name + "'");
  }
  return p;
}

std::optional<std::string> missing_outputs(const RunManifest& m, const fs::path& run, const std::string& stage) {
  auto it = m.stages.find(stage);
  if (it == m.stages.end()) return "has not run";
  for (const auto& [rel, sha] : it->second.outputs) {
    if (!fs::exists(run / rel)) return "output " + rel + " is missing";
  }
  return std::nullopt;
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"classify", "render-bev", "render-views", "fetch-sat", "segment",
                                                 "reproject", "pool", "metrics", "report"};
  return names;
}

RunManifest RunManifest::load(const fs::path& run_dir) {
  RunManifest m;
  const fs::path path = run_dir / kManifestFile;
  if (!fs::exists(path)) return m;
  json doc;
  try {
    doc = json::parse(detail::read_file_text(path));
    m.schema = doc.at("schema").get<int>();
    if (m.schema != kManifestSchema) {
      throw Error(ErrorKind::Parse, path.string() + ": unsupported manifest schema " + std::to_string(m.schema));
    }
    m.config = doc.value("config", json::object());
    for (const auto& [name, s] : doc.at("stages").items()) {
      StageRecord r;
      r.fingerprint = s.at("fingerprint").get<std::string>();
      r.inputs = s.at("inputs").get<std::map<std::string, std::string>>();
      r.outputs = s.at("outputs").get<std::map<std::string, std::string>>();
      r.seconds = s.value("seconds", 0.0);
      m.stages[name] = std::move(r);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  return m;
}

void RunManifest::save(const fs::path& run_dir) const {
  json doc = {{"schema", schema}, {"config", config}, {"stages", json::object()}};
  for (const auto& [name, r] : stages) {
    doc["stages"][name] = {
        {"fingerprint", r.fingerprint}, {"inputs", r.inputs}, {"outputs", r.outputs}, {"seconds", r.seconds}};
  }
  fs::create_directories(run_dir);
  const fs::path tmp = run_dir / (kManifestFile + ".tmp");
  detail::write_file_text(tmp, doc.dump(2) + "\n");
  fs::rename(tmp, run_dir / kManifestFile);
}

StageOutcome run_stage(const std::string& name, const PipelineConfig& config, const RunOptions& options,
                       std::ostream& log) {
  const Plan plan = plan_for(name, config);
  RunManifest manifest = RunManifest::load(options.run_dir);

  std::vector<std::string> blocked;
  for (const auto& pre : plan.prerequisites) {
    if (auto why = missing_outputs(manifest, options.run_dir, pre)) {
      if (!options.dry_run) {
        throw Error(ErrorKind::MissingPrerequisite, "stage '" + name + "' needs '" + pre + "', which " + *why +
                                                        "; run `pai " + pre + "` first");
      }
      blocked.push_back(pre);
    }
  }
  if (options.dry_run && !blocked.empty()) {
    std::string list;
    for (const auto& b : blocked) list += (list.empty() ? "" : ", ") + b;
    log << name << ": would run after " << list << " (outputs under " << (options.run_dir / plan.output_dir).string()
        << "/)\n";
    return StageOutcome::Planned;
  }

  // fingerprint: stage parameters plus the checksum of every input file
  std::map<std::string, std::string> inputs;
  for (const auto& p : plan.external_inputs) {
    if (p.empty() || !fs::exists(p)) continue;  // the stage reports missing inputs itself
    inputs[fs::absolute(p).lexically_normal().string()] = sha256_file(p);
  }
  std::vector<std::string> upstream = plan.prerequisites;
  for (const auto& o : plan.optional_prerequisites) {
    if (!missing_outputs(manifest, options.run_dir, o)) upstream.push_back(o);
  }
  for (const auto& pre : upstream) {
    for (const auto& [rel, sha] : manifest.stages.at(pre).outputs) inputs[rel] = sha;
  }
  std::string material = name + "\n" + plan.params.dump() + "\n";
  for (const auto& [k, v] : inputs) material += k + " " + v + "\n";
  const std::string fingerprint = sha256_hex(material);

  if (auto it = manifest.stages.find(name); it != manifest.stages.end() && !options.force &&
                                            it->second.fingerprint == fingerprint) {
    bool intact = true;
    for (const auto& [rel, sha] : it->second.outputs) {
      const fs::path p = options.run_dir / rel;
      if (!fs::exists(p) || sha256_file(p) != sha) {
        intact = false;
        break;
      }
    }
    if (intact) {
      log << name << ": up to date\n";
      return StageOutcome::UpToDate;
    }
  }
  if (options.dry_run) {
    log << name << ": would run (" << inputs.size() << " inputs; outputs under "
        << (options.run_dir / plan.output_dir).string() << "/)\n";
    return StageOutcome::Planned;
  }

  const auto start = std::chrono::steady_clock::now();
  Ctx ctx{config, options, log, manifest, options.run_dir, {}};
  const auto outputs = plan.run(ctx);
  StageRecord rec;
  rec.fingerprint = fingerprint;
  rec.inputs = inputs;
  for (const auto& rel : outputs) rec.outputs[rel] = sha256_file(options.run_dir / rel);
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest.config = config_snapshot(config);
  manifest.stages[name] = std::move(rec);
  manifest.save(options.run_dir);
  return StageOutcome::Ran;
}

SynthFiles write_synthetic_inputs(const fs::path& out_dir) {
  const SyntheticCity city = make_synthetic_city();
  fs::create_directories(out_dir);
  SynthFiles f{out_dir / "city.las", out_dir / "trajectory.csv", out_dir / "seeds.json", out_dir / "ortho.tif",
               out_dir / "pai.yaml"};
  write_las(city.cloud, f.cloud);
  write_trajectory_csv(city.trajectory, f.trajectory);
  detail::write_file_text(f.seeds, seeds_json(city.seeds));
  write_geotiff(synthetic_orthophoto(city, 0.5), f.ortho);
  detail::write_file_text(f.config,
                          "# Offline run over the synthetic block (feet, EPSG:2263).\n"
                          "version: 1\n"
                          "input:\n"
                          "  cloud: city.las\n"
                          "  trajectory: trajectory.csv\n"
                          "  seeds: seeds.json\n"
                          "render_bev:\n"
                          "  cell_size: 0.1\n"
                          "render_views:\n"
                          "  spacing: 12.5\n"
                          "  point_size: 8\n"
                          "  classes: ground-only\n"
                          "  pixel: intensity\n"
                          "  scale: 0.25\n"
                          "fetch_sat:\n"
                          "  source: file:ortho.tif\n"
                          "  resolution: 0.5\n"
                          "segment:\n"
                          "  backend: stub\n"
                          "metrics:\n"
                          "  class: sidewalk\n");
  return f;
}

}  // namespace pai
