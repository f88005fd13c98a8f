#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pai/raster.hpp"

namespace pai {

/// PNG with an alpha channel carrying validity (alpha 0 = no-data).
void write_png(const RasterImage& image, const std::filesystem::path& path);
std::vector<uint8_t> encode_png(const RasterImage& image);
/// Decodes gray/RGB(A) PNGs; images without alpha are fully valid. The
/// representation id is left at its default.
RasterImage read_png(const std::filesystem::path& path);
RasterImage decode_png(std::span<const uint8_t> bytes);
/// Baseline JPEG (gray or RGB); every pixel is valid.
RasterImage decode_jpeg(std::span<const uint8_t> bytes);
/// PNG or JPEG, chosen by signature.
RasterImage decode_image(std::span<const uint8_t> bytes);

/// Uncompressed baseline GeoTIFF with ModelPixelScale, ModelTiepoint,
/// GeoKeyDirectory and GDAL_NODATA = 0. Valid pixels are clamped to >= 1 in
/// every channel so that 0 unambiguously marks no-data.
void write_geotiff(const RasterImage& image, const std::filesystem::path& path);
RasterImage read_geotiff(const std::filesystem::path& path);

/// Correspondence sidecar: "PAICMAP1", u32 width, u32 height, then per pixel
/// (row-major) u64 point index (UINT64_MAX = none) and f32 depth, little-endian.
void write_correspondence(const CorrespondenceMap& cmap, const std::filesystem::path& path);
CorrespondenceMap read_correspondence(const std::filesystem::path& path);

}  // namespace pai
