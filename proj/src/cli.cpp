#include "pai/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "pai/pipeline.hpp"
#include "pai/units.hpp"

namespace pai {
namespace {

namespace fs = std::filesystem;

struct Overrides {
  std::optional<std::string> crs, unit;
  std::optional<double> bev_cell;
  std::optional<double> spacing, scale;
  std::optional<int> point_size;
  std::optional<std::string> classes, pixel;
  std::optional<std::string> source, layer, cache_dir;
  std::optional<double> resolution;
  std::optional<std::string> backend;
  std::optional<int> tolerance;
  std::optional<uint32_t> min_votes;
  std::optional<std::string> metrics_class;
  std::optional<std::string> assessment;
};

fs::path from_cwd(const std::string& p) { return fs::absolute(p).lexically_normal(); }

void apply(const Overrides& o, PipelineConfig& c) {
  if (o.crs) c.input.crs = *o.crs;
  if (o.unit) c.input.unit = parse_linear_unit(*o.unit);
  if (o.bev_cell) c.bev.cell_size = *o.bev_cell;
  if (o.spacing) c.views.spacing = *o.spacing;
  if (o.scale) c.views.scale = *o.scale;
  if (o.point_size) c.views.point_size = *o.point_size;
  if (o.classes) c.views.classes = parse_class_selector(*o.classes);
  if (o.pixel) c.views.pixel = parse_pixel_attribute(*o.pixel);
  if (o.source) {
    // file paths on the command line are relative to the working directory
    c.satellite.source = o.source->rfind("file:", 0) == 0 ? "file:" + from_cwd(o.source->substr(5)).string() : *o.source;
  }
  if (o.layer) c.satellite.layer = *o.layer;
  if (o.cache_dir) c.satellite.cache_dir = from_cwd(*o.cache_dir);
  if (o.resolution) c.satellite.resolution = *o.resolution;
  if (o.backend) {
    c.segment.backend = o.backend->rfind("coco:", 0) == 0 ? "coco:" + from_cwd(o.backend->substr(5)).string() : *o.backend;
  }
  if (o.tolerance) c.segment.tolerance = *o.tolerance;
  if (o.min_votes) c.pool.min_votes = *o.min_votes;
  if (o.metrics_class) {
    const auto fc = parse_feature_class(*o.metrics_class);
    if (!fc) throw Error(ErrorKind::Usage, "unknown feature class '" + *o.metrics_class + "'");
    c.metrics.feature_class = *fc;
  }
  if (o.assessment) c.report.assessment = from_cwd(*o.assessment);
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::Configuration:
      return kExitUsage;
    case ErrorKind::MissingPrerequisite:
      return kExitMissingPrerequisite;
    case ErrorKind::Transport:
    case ErrorKind::Service:
      return kExitTransport;
    default:
      return kExitData;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, Transport* transport) {
  CLI::App app{"Pedestrian infrastructure inventory from mobile lidar", "pai"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path = "pai.yaml";
  std::string run_dir;
  RunOptions options;
  Overrides o;
  app.add_option("-c,--config", config_path, "YAML run configuration")->capture_default_str();
  app.add_option("--run", run_dir, "run directory (default: run/ next to the config)");
  app.add_flag("--force", options.force, "re-run stages even when up to date");
  app.add_flag("--dry-run", options.dry_run, "print the plan without writing anything");
  app.add_option("-j,--jobs", options.jobs, "parallel renders, fetches and segmentations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::string synth_dir;
  auto* synth = app.add_subcommand("synth", "write the synthetic street block and an offline config");
  synth->add_option("dir", synth_dir, "output directory")->required();

  auto* classify = app.add_subcommand("classify", "ground filter and vegetation tiers");
  classify->add_option("--crs", o.crs, "CRS of the input cloud when its header has none");
  classify->add_option("--unit", o.unit, "linear unit of the input cloud (feet|meters)");

  auto* bev = app.add_subcommand("render-bev", "four bird's-eye rasters with correspondence maps");
  bev->add_option("--cell-size", o.bev_cell, "raster cell in cloud units");

  auto* views = app.add_subcommand("render-views", "street view images along the trajectory");
  views->add_option("--spacing", o.spacing, "station spacing in cloud units");
  views->add_option("--point-size", o.point_size, "splat size in pixels");
  views->add_option("--classes", o.classes, "all | ground-only | ground-and-low-veg");
  views->add_option("--pixel", o.pixel, "intensity | color");
  views->add_option("--scale", o.scale, "resolution scale applied to the camera intrinsics");

  auto* sat = app.add_subcommand("fetch-sat", "satellite raster over the cloud extent");
  sat->add_option("--source", o.source, "wms:<url> | xyz:<template> | file:<geotiff>");
  sat->add_option("--layer", o.layer, "WMS layer");
  sat->add_option("--resolution", o.resolution, "ground sample distance in cloud units");
  sat->add_option("--cache-dir", o.cache_dir, "tile cache (overrides " + std::string(kCacheDirEnv) + ")");

  auto* segment = app.add_subcommand("segment", "prompted masks for every image");
  segment->add_option("--backend", o.backend, "stub | coco:<path> | remote:<url>");
  segment->add_option("--tolerance", o.tolerance, "stub flood-fill tolerance in gray levels");

  auto* reproject = app.add_subcommand("reproject", "masks to geographic polygons and point votes");
  auto* pool = app.add_subcommand("pool", "per-point majority labels and the inventory");
  pool->add_option("--min-votes", o.min_votes, "votes needed before a point is labeled");

  auto* metrics = app.add_subcommand("metrics", "width and slopes along feature centerlines");
  metrics->add_option("--class", o.metrics_class, "feature class to measure");

  auto* report = app.add_subcommand("report", "summary of the run");
  report->add_option("--assessment", o.assessment, "operator assessment matrix (JSON)");

  auto* all = app.add_subcommand("all", "run every stage in order");
  (void)reproject;
  (void)all;

  std::vector<std::string> argv(args.rbegin(), args.rend());  // CLI11 consumes from the back
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "pai: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      const auto files = write_synthetic_inputs(synth_dir);
      out << "wrote " << files.cloud.string() << ", " << files.trajectory.string() << ", " << files.seeds.string()
          << ", " << files.ortho.string() << "\n";
      out << "run it with: pai --config " << files.config.string() << " all\n";
      return kExitOk;
    }
    const fs::path cfg_path = config_path;
    if (!fs::exists(cfg_path)) throw Error(ErrorKind::Usage, "config file " + config_path + " not found");
    PipelineConfig config = load_config(cfg_path);
    apply(o, config);
    options.run_dir = run_dir.empty() ? config.base_dir / "run" : fs::path(run_dir);
    options.transport = transport;

    std::vector<std::string> stages;
    if (all->parsed()) {
      stages = stage_names();
    } else {
      stages = {app.get_subcommands().front()->get_name()};
    }
    for (const auto& s : stages) {
      if (all->parsed() && s == "fetch-sat" && config.satellite.source.empty()) {
        out << "fetch-sat: skipped (no fetch_sat.source configured)\n";
        continue;
      }
      const auto outcome = run_stage(s, config, options, out);
      if (outcome == StageOutcome::Ran) out << s << ": done\n";
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "pai: error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "pai: error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace pai
