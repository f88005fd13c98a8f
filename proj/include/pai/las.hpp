#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>
#include <string>

#include "pai/pointcloud.hpp"

namespace pai {

struct LasLoadOptions {
  /// Used when the file carries no CRS; takes precedence otherwise too.
  std::optional<std::string> crs_override;
  std::optional<LinearUnit> unit_override;
};

/// Reads LAS 1.2 / 1.4 files with point formats 0-3, 6 and 7. Extended-format
/// codes above 31 have no legacy class and load as code 0.
PointCloud load_las(const std::filesystem::path& path, const LasLoadOptions& options = {});

/// Writes LAS 1.2, point format 0 (or 2 when the cloud has color), with a
/// GeoKeyDirectory VLR describing the CRS and linear unit.
void write_las(const PointCloud& cloud, const std::filesystem::path& path);

/// Writes LAS 1.4 point format 6 (7 with color) whose classification byte is
/// codes[i], so the full 0..255 code range is available. Legacy flag bits of
/// the cloud's classification bytes go to the extended flag field.
void write_las_with_codes(const PointCloud& cloud, std::span<const uint8_t> codes,
                          const std::filesystem::path& path);
/// Per-point class codes: the full byte for formats 6/7, the low five bits otherwise.
std::vector<uint8_t> read_las_class_codes(const std::filesystem::path& path);

}  // namespace pai
