#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pai/camera.hpp"
#include "pai/feature_class.hpp"
#include "pai/geo_alignment.hpp"
#include "pai/http.hpp"
#include "pai/pointcloud.hpp"
#include "pai/raster.hpp"
#include "pai/sidewalk_metrics.hpp"

namespace pai {

inline constexpr int kConfigVersion = 1;
inline constexpr int kManifestSchema = 1;
/// Satellite cache directory when the config names none.
inline constexpr const char* kCacheDirEnv = "PAI_CACHE_DIR";

/// Run configuration: one YAML document with a version and a section per
/// stage. Relative paths resolve against the directory of the config file.
/// Lengths are in cloud units unless the key ends in _m.
struct PipelineConfig {
  int version = kConfigVersion;
  std::filesystem::path base_dir = ".";

  struct Input {
    std::filesystem::path cloud;
    std::filesystem::path trajectory;
    std::filesystem::path seeds;
    std::optional<std::string> crs;
    std::optional<LinearUnit> unit;
  } input;

  struct Classify {
    std::optional<double> cell_size, max_window, slope_threshold, elevation_threshold, elevation_scaling;
    double low_max_m = 0.5;
    double medium_max_m = 2.0;
    double surface_cell_m = 1.0;
  } classify;

  struct Bev {
    double cell_size = 0.1;
  } bev;

  struct Views {
    double spacing = 12.5;
    int point_size = 8;
    ClassSelector classes = ClassSelector::GroundAndLowVeg;
    PixelAttribute pixel = PixelAttribute::Intensity;
    CameraIntrinsics intrinsics;
    double scale = 1.0;  // applied to the intrinsics' resolution
    double height = 2.0;
    double pitch_down_deg = 10.0;
    double side_yaw_deg = 90.0;
  } views;

  struct Satellite {
    /// "wms:<url>", "xyz:<template>" or "file:<georeferenced raster>" (served offline as WMS)
    std::string source;
    std::string layer;
    double resolution = 0.5;
    std::string format = "image/png";
    AxisOrder axis_order = AxisOrder::Auto;
    std::filesystem::path cache_dir;
  } satellite;

  struct Segment {
    /// "stub", "coco:<path>" or "remote:<url>"
    std::string backend = "stub";
    int tolerance = 10;
    double simplify = 0.0;
    double seed_tolerance = 1.0;
    int timeout_ms = 60000;
  } segment;

  struct Pool {
    uint32_t min_votes = 1;
  } pool;

  struct Metrics {
    FeatureClass feature_class = FeatureClass::Sidewalk;
    MetricsOptions options;
  } metrics;

  struct Report {
    std::filesystem::path assessment;  // optional operator assessment matrix (JSON)
  } report;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// Throws ErrorKind::Configuration as "<name>:<line>:<column>: <message>" for
/// YAML syntax errors, unknown keys, wrong types and unsupported versions.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                            const std::string& name = "config");
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json config_snapshot(const PipelineConfig& config);

struct StageRecord {
  std::string fingerprint;                    // sha256 over parameters and input checksums
  std::map<std::string, std::string> inputs;  // path -> sha256
  std::map<std::string, std::string> outputs; // run-relative path -> sha256
  double seconds = 0.0;
};

/// manifest.json in the run directory.
struct RunManifest {
  int schema = kManifestSchema;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, StageRecord> stages;

  static RunManifest load(const std::filesystem::path& run_dir);  // empty when absent
  void save(const std::filesystem::path& run_dir) const;
};

/// Stage names in pipeline order.
const std::vector<std::string>& stage_names();

struct RunOptions {
  std::filesystem::path run_dir = "run";
  bool force = false;
  bool dry_run = false;
  int jobs = 1;
  /// Network boundary for satellite and remote segmentation; HttplibTransport when null.
  Transport* transport = nullptr;
};

enum class StageOutcome { Ran, UpToDate, Planned };

/// Runs one stage. Throws ErrorKind::MissingPrerequisite naming the command to
/// run when an earlier stage's outputs are missing from the manifest or disk.
StageOutcome run_stage(const std::string& name, const PipelineConfig& config, const RunOptions& options,
                       std::ostream& log);

/// Files of the synthetic block written by `synth`: cloud, trajectory, seeds,
/// orthophoto and a config that wires them into a fully offline run.
struct SynthFiles {
  std::filesystem::path cloud, trajectory, seeds, ortho, config;
};
SynthFiles write_synthetic_inputs(const std::filesystem::path& out_dir);

}  // namespace pai
