#include "pai/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <jpeglib.h>
#include <csetjmp>

#include <cmath>
#include <algorithm>
#include <cstring>
#include <limits>
#include <map>

#include "binary_io.hpp"
#include "pai/error.hpp"

namespace pai {
namespace {

using detail::put_le;
using detail::read_le;

std::vector<uint8_t> to_interleaved_alpha(const RasterImage& image) {
  const int ch = image.channels();
  const std::size_t n = static_cast<std::size_t>(image.width()) * image.height();
  std::vector<uint8_t> out(n * (ch + 1));
  const auto& px = image.pixels();
  const auto& valid = image.validity();
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < ch; ++c) out[i * (ch + 1) + c] = valid[i] ? px[i * ch + c] : 0;
    out[i * (ch + 1) + ch] = valid[i] ? 255 : 0;
  }
  return out;
}

png_image make_png_header(const RasterImage& image) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = image.channels() == 1 ? PNG_FORMAT_GA : PNG_FORMAT_RGBA;
  return png;
}

RasterImage from_png(png_image& png, const std::string& what) {
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGBA : PNG_FORMAT_GA;
  const int ch = color ? 3 : 1;
  std::vector<uint8_t> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(ErrorKind::Format, what + ": " + msg);
  }
  RasterImage image(static_cast<int>(png.width), static_cast<int>(png.height), ch,
                    RepresentationId::Rep1);
  const std::size_t n = static_cast<std::size_t>(png.width) * png.height;
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < ch; ++c) image.pixels()[i * ch + c] = buf[i * (ch + 1) + c];
    image.validity()[i] = buf[i * (ch + 1) + ch] != 0;
  }
  return image;
}

// --- TIFF ---------------------------------------------------------------

constexpr uint16_t kShort = 3;
constexpr uint16_t kLong = 4;
constexpr uint16_t kAscii = 2;
constexpr uint16_t kDouble = 12;

struct TiffEntry {
  uint16_t type = kShort;
  uint32_t count = 0;
  std::vector<uint8_t> payload;  // little-endian values
};

template <typename T>
TiffEntry tiff_values(uint16_t type, std::initializer_list<T> values) {
  TiffEntry e;
  e.type = type;
  e.count = static_cast<uint32_t>(values.size());
  for (T v : values) put_le(e.payload, v);
  return e;
}

TiffEntry tiff_shorts(const std::vector<uint16_t>& values) {
  TiffEntry e;
  e.type = kShort;
  e.count = static_cast<uint32_t>(values.size());
  for (uint16_t v : values) put_le(e.payload, v);
  return e;
}

TiffEntry tiff_ascii(const std::string& s) {
  TiffEntry e;
  e.type = kAscii;
  e.payload.assign(s.begin(), s.end());
  e.payload.push_back(0);
  e.count = static_cast<uint32_t>(e.payload.size());
  return e;
}

std::size_t type_size(uint16_t type) {
  switch (type) {
    case 1: case 2: case 6: case 7: return 1;
    case 3: case 8: return 2;
    case 4: case 9: case 11: return 4;
    case 5: case 10: case 12: return 8;
    default: return 0;
  }
}

constexpr uint16_t kTagWidth = 256, kTagHeight = 257, kTagBits = 258, kTagCompression = 259,
                   kTagPhotometric = 262, kTagStripOffsets = 273, kTagSamples = 277,
                   kTagRowsPerStrip = 278, kTagStripBytes = 279, kTagPlanar = 284,
                   kTagPixelScale = 33550, kTagTiepoint = 33922, kTagGeoKeys = 34735,
                   kTagGeoAscii = 34737, kTagNoData = 42113;

std::vector<uint16_t> raster_geokeys(const std::string& crs_id, std::string& ascii) {
  std::vector<uint16_t> keys;
  auto add = [&](uint16_t id, uint16_t loc, uint16_t count, uint16_t value) {
    keys.insert(keys.end(), {id, loc, count, value});
  };
  add(1024, 0, 1, 1);  // projected model
  add(1025, 0, 1, 1);  // PixelIsArea
  std::optional<uint16_t> epsg;
  if (crs_id.rfind("EPSG:", 0) == 0) {
    try {
      const long code = std::stol(crs_id.substr(5));
      if (code > 0 && code < 32767) epsg = static_cast<uint16_t>(code);
    } catch (const std::exception&) {
    }
  }
  if (epsg) {
    add(3072, 0, 1, *epsg);
  } else if (!crs_id.empty()) {
    ascii = crs_id + "|";
    add(3072, 0, 1, 32767);
    add(3073, kTagGeoAscii, static_cast<uint16_t>(ascii.size()), 0);
  }
  std::vector<uint16_t> out = {1, 1, 0, static_cast<uint16_t>(keys.size() / 4)};
  out.insert(out.end(), keys.begin(), keys.end());
  return out;
}

}  // namespace

std::vector<uint8_t> encode_png(const RasterImage& image) {
  png_image png = make_png_header(image);
  const auto buf = to_interleaved_alpha(image);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, buf.data(), 0, nullptr)) {
    throw Error(ErrorKind::Io, std::string("PNG encode failed: ") + png.message);
  }
  std::vector<uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, buf.data(), 0, nullptr)) {
    throw Error(ErrorKind::Io, std::string("PNG encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

void write_png(const RasterImage& image, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_png(image));
}

RasterImage decode_png(std::span<const uint8_t> bytes) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw Error(ErrorKind::Format, std::string("PNG decode failed: ") + png.message);
  }
  return from_png(png, "PNG decode");
}

namespace {

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

}  // namespace

RasterImage decode_jpeg(std::span<const uint8_t> bytes) {
  jpeg_decompress_struct info;
  JpegErrorManager err;
  info.err = jpeg_std_error(&err.base);
  err.base.error_exit = on_jpeg_error;
  err.base.output_message = [](j_common_ptr) {};  // warnings are not errors; keep stderr quiet
  // no C++ objects with destructors are live between setjmp and longjmp
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&info);
    throw Error(ErrorKind::Format, std::string("JPEG decode failed: ") + err.message);
  }
  jpeg_create_decompress(&info);
  jpeg_mem_src(&info, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&info, TRUE);
  info.out_color_space = info.jpeg_color_space == JCS_GRAYSCALE ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&info);
  const int ch = static_cast<int>(info.output_components);
  std::vector<uint8_t> buf(static_cast<std::size_t>(info.output_width) * info.output_height * ch);
  while (info.output_scanline < info.output_height) {
    JSAMPROW row = buf.data() + static_cast<std::size_t>(info.output_scanline) * info.output_width * ch;
    jpeg_read_scanlines(&info, &row, 1);
  }
  const int w = static_cast<int>(info.output_width), h = static_cast<int>(info.output_height);
  jpeg_finish_decompress(&info);
  jpeg_destroy_decompress(&info);
  RasterImage image(w, h, ch, RepresentationId::Rep1);
  image.pixels() = std::move(buf);
  std::fill(image.validity().begin(), image.validity().end(), uint8_t{1});
  return image;
}

RasterImage decode_image(std::span<const uint8_t> bytes) {
  static const uint8_t png_sig[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::equal(png_sig, png_sig + 4, bytes.begin())) return decode_png(bytes);
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) return decode_jpeg(bytes);
  throw Error(ErrorKind::UnsupportedFormat, "image is neither PNG nor JPEG");
}

RasterImage read_png(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  try {
    return decode_png(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_geotiff(const RasterImage& image, const std::filesystem::path& path) {
  if (!image.geo) throw Error(ErrorKind::InvalidArgument, "GeoTIFF export needs a geotransform");
  const int ch = image.channels();
  const uint32_t w = static_cast<uint32_t>(image.width());
  const uint32_t h = static_cast<uint32_t>(image.height());
  const uint64_t strip_bytes = uint64_t{w} * h * ch;
  if (strip_bytes > UINT32_MAX - (1u << 20)) throw Error(ErrorKind::InvalidArgument, "image too large for TIFF");

  std::string ascii;
  std::map<uint16_t, TiffEntry> tags;
  tags[kTagWidth] = tiff_values<uint32_t>(kLong, {w});
  tags[kTagHeight] = tiff_values<uint32_t>(kLong, {h});
  tags[kTagBits] = ch == 1 ? tiff_values<uint16_t>(kShort, {8}) : tiff_values<uint16_t>(kShort, {8, 8, 8});
  tags[kTagCompression] = tiff_values<uint16_t>(kShort, {1});
  tags[kTagPhotometric] = tiff_values<uint16_t>(kShort, {static_cast<uint16_t>(ch == 1 ? 1 : 2)});
  tags[kTagStripOffsets] = tiff_values<uint32_t>(kLong, {0});  // patched below
  tags[kTagSamples] = tiff_values<uint16_t>(kShort, {static_cast<uint16_t>(ch)});
  tags[kTagRowsPerStrip] = tiff_values<uint32_t>(kLong, {h});
  tags[kTagStripBytes] = tiff_values<uint32_t>(kLong, {static_cast<uint32_t>(strip_bytes)});
  tags[kTagPlanar] = tiff_values<uint16_t>(kShort, {1});
  const auto& g = *image.geo;
  tags[kTagPixelScale] = tiff_values<double>(kDouble, {g.cell_size, g.cell_size, 0.0});
  tags[kTagTiepoint] = tiff_values<double>(kDouble, {0.0, 0.0, 0.0, g.origin_x, g.origin_y, 0.0});
  tags[kTagGeoKeys] = tiff_shorts(raster_geokeys(image.crs_id, ascii));
  if (!ascii.empty()) tags[kTagGeoAscii] = tiff_ascii(ascii);
  tags[kTagNoData] = tiff_ascii("0");

  // layout: header (8) | IFD | out-of-line values | pixel strip
  const std::size_t ifd_size = 2 + tags.size() * 12 + 4;
  std::size_t extra = 0;
  for (const auto& [tag, e] : tags) {
    if (e.payload.size() > 4) extra += e.payload.size() + (e.payload.size() & 1);
  }
  const uint32_t pixel_offset = static_cast<uint32_t>(8 + ifd_size + extra);
  tags[kTagStripOffsets] = tiff_values<uint32_t>(kLong, {pixel_offset});

  std::vector<uint8_t> buf;
  buf.reserve(pixel_offset + strip_bytes);
  buf.push_back('I');
  buf.push_back('I');
  put_le<uint16_t>(buf, 42);
  put_le<uint32_t>(buf, 8);
  put_le<uint16_t>(buf, static_cast<uint16_t>(tags.size()));
  std::vector<uint8_t> out_of_line;
  const std::size_t out_of_line_base = 8 + ifd_size;
  for (const auto& [tag, e] : tags) {
    put_le<uint16_t>(buf, tag);
    put_le<uint16_t>(buf, e.type);
    put_le<uint32_t>(buf, e.count);
    if (e.payload.size() <= 4) {
      std::vector<uint8_t> inl = e.payload;
      inl.resize(4, 0);
      buf.insert(buf.end(), inl.begin(), inl.end());
    } else {
      put_le<uint32_t>(buf, static_cast<uint32_t>(out_of_line_base + out_of_line.size()));
      out_of_line.insert(out_of_line.end(), e.payload.begin(), e.payload.end());
      if (out_of_line.size() & 1) out_of_line.push_back(0);
    }
  }
  put_le<uint32_t>(buf, 0);  // no further IFDs
  buf.insert(buf.end(), out_of_line.begin(), out_of_line.end());

  const auto& px = image.pixels();
  const auto& valid = image.validity();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < ch; ++c) {
      buf.push_back(valid[i] ? std::max<uint8_t>(1, px[i * ch + c]) : 0);
    }
  }
  detail::write_file_bytes(path, buf);
}

RasterImage read_geotiff(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  const std::span<const uint8_t> buf(bytes);
  auto fail = [&](std::size_t offset, const std::string& msg) {
    return Error(ErrorKind::Format, path.string() + ": " + msg + " at byte offset " + std::to_string(offset));
  };
  if (buf.size() < 8 || buf[0] != 'I' || buf[1] != 'I' || read_le<uint16_t>(buf, 2) != 42) {
    throw fail(0, "not a little-endian classic TIFF");
  }
  const uint32_t ifd = read_le<uint32_t>(buf, 4);
  if (ifd + 2 > buf.size()) throw fail(4, "IFD offset out of range");
  const uint16_t n = read_le<uint16_t>(buf, ifd);
  if (ifd + 2 + std::size_t{n} * 12 > buf.size()) throw fail(ifd, "truncated IFD");

  struct Raw {
    uint16_t type;
    uint32_t count;
    std::size_t offset;  // where the values live
  };
  std::map<uint16_t, Raw> entries;
  for (uint16_t k = 0; k < n; ++k) {
    const std::size_t at = ifd + 2 + std::size_t{k} * 12;
    Raw r{read_le<uint16_t>(buf, at + 2), read_le<uint32_t>(buf, at + 4), at + 8};
    const std::size_t bytes_needed = type_size(r.type) * r.count;
    if (bytes_needed > 4) r.offset = read_le<uint32_t>(buf, at + 8);
    if (r.offset + bytes_needed > buf.size()) throw fail(at, "tag value out of range");
    entries[read_le<uint16_t>(buf, at)] = r;
  }
  auto uint_at = [&](uint16_t tag, uint32_t i, std::optional<uint32_t> fallback = std::nullopt) -> uint32_t {
    auto it = entries.find(tag);
    if (it == entries.end() || i >= it->second.count) {
      if (fallback) return *fallback;
      throw fail(ifd, "missing TIFF tag " + std::to_string(tag));
    }
    const auto& r = it->second;
    if (r.type == kShort) return read_le<uint16_t>(buf, r.offset + 2 * i);
    if (r.type == kLong) return read_le<uint32_t>(buf, r.offset + 4 * i);
    throw fail(r.offset, "unexpected type for tag " + std::to_string(tag));
  };
  auto doubles = [&](uint16_t tag) {
    std::vector<double> v;
    auto it = entries.find(tag);
    if (it == entries.end() || it->second.type != kDouble) return v;
    for (uint32_t i = 0; i < it->second.count; ++i) v.push_back(read_le<double>(buf, it->second.offset + 8 * i));
    return v;
  };

  const uint32_t w = uint_at(kTagWidth, 0);
  const uint32_t h = uint_at(kTagHeight, 0);
  const uint32_t spp = uint_at(kTagSamples, 0, 1);
  if (uint_at(kTagCompression, 0, 1) != 1) {
    throw Error(ErrorKind::UnsupportedFormat, path.string() + ": compressed TIFF");
  }
  if (spp != 1 && spp != 3) throw Error(ErrorKind::UnsupportedFormat, path.string() + ": samples per pixel");
  for (uint32_t s = 0; s < spp; ++s) {
    if (uint_at(kTagBits, s, 8) != 8) throw Error(ErrorKind::UnsupportedFormat, path.string() + ": not 8-bit");
  }
  if (uint_at(kTagPlanar, 0, 1) != 1) throw Error(ErrorKind::UnsupportedFormat, path.string() + ": planar TIFF");

  RasterImage image(static_cast<int>(w), static_cast<int>(h), static_cast<int>(spp), RepresentationId::Rep1);
  const std::size_t total = std::size_t{w} * h * spp;
  std::size_t written = 0;
  const uint32_t strips = entries.count(kTagStripOffsets) ? entries[kTagStripOffsets].count : 0;
  for (uint32_t s = 0; s < strips && written < total; ++s) {
    const uint32_t off = uint_at(kTagStripOffsets, s);
    const uint32_t len = uint_at(kTagStripBytes, s);
    if (std::size_t{off} + len > buf.size()) throw fail(off, "strip out of range");
    const std::size_t take = std::min<std::size_t>(len, total - written);
    std::memcpy(image.pixels().data() + written, buf.data() + off, take);
    written += take;
  }
  if (written != total) throw fail(ifd, "pixel data incomplete");

  std::optional<int> nodata;
  if (auto it = entries.find(kTagNoData); it != entries.end() && it->second.type == kAscii) {
    const std::string s(reinterpret_cast<const char*>(buf.data() + it->second.offset), it->second.count);
    try {
      nodata = std::stoi(s);
    } catch (const std::exception&) {
    }
  }
  const std::size_t npx = std::size_t{w} * h;
  for (std::size_t i = 0; i < npx; ++i) {
    bool all_nodata = nodata.has_value();
    for (uint32_t c = 0; c < spp && all_nodata; ++c) all_nodata = image.pixels()[i * spp + c] == *nodata;
    image.validity()[i] = !all_nodata;
  }

  const auto scale = doubles(kTagPixelScale);
  const auto tie = doubles(kTagTiepoint);
  if (scale.size() >= 2 && tie.size() >= 6) {
    if (scale[0] != scale[1]) throw Error(ErrorKind::UnsupportedFormat, path.string() + ": non-square pixels");
    image.geo = Geotransform{tie[3] - tie[0] * scale[0], tie[4] + tie[1] * scale[1], scale[0]};
  }
  if (auto it = entries.find(kTagGeoKeys); it != entries.end() && it->second.type == kShort) {
    const auto& r = it->second;
    auto key = [&](uint32_t i) { return read_le<uint16_t>(buf, r.offset + 2 * i); };
    const uint32_t nkeys = r.count >= 4 ? key(3) : 0;
    for (uint32_t k = 0; k < nkeys && 4 + 4 * k + 3 < r.count; ++k) {
      const uint16_t id = key(4 + 4 * k), loc = key(5 + 4 * k), count = key(6 + 4 * k), value = key(7 + 4 * k);
      if (id == 3072 && loc == 0 && value != 32767) image.crs_id = "EPSG:" + std::to_string(value);
      if (id == 3073 && loc == kTagGeoAscii && entries.count(kTagGeoAscii)) {
        const auto& a = entries[kTagGeoAscii];
        if (value + count <= a.count) {
          std::string s(reinterpret_cast<const char*>(buf.data() + a.offset + value), count);
          while (!s.empty() && (s.back() == '|' || s.back() == '\0')) s.pop_back();
          image.crs_id = s;
        }
      }
    }
  }
  return image;
}

void write_correspondence(const CorrespondenceMap& cmap, const std::filesystem::path& path) {
  std::vector<uint8_t> buf;
  const std::size_t n = static_cast<std::size_t>(cmap.width()) * cmap.height();
  buf.reserve(16 + n * 12);
  detail::put_fixed_string(buf, "PAICMAP1", 8);
  put_le<uint32_t>(buf, static_cast<uint32_t>(cmap.width()));
  put_le<uint32_t>(buf, static_cast<uint32_t>(cmap.height()));
  const auto& idx = cmap.indices();
  const auto& depth = cmap.depths();
  for (std::size_t i = 0; i < n; ++i) {
    const uint64_t v = idx[i] == CorrespondenceMap::kNoPoint ? UINT64_MAX : uint64_t{idx[i]};
    put_le<uint64_t>(buf, v);
    put_le<float>(buf, idx[i] == CorrespondenceMap::kNoPoint ? std::numeric_limits<float>::quiet_NaN()
                                                             : depth[i]);
  }
  detail::write_file_bytes(path, buf);
}

CorrespondenceMap read_correspondence(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  const std::span<const uint8_t> buf(bytes);
  if (buf.size() < 16 || std::memcmp(buf.data(), "PAICMAP1", 8) != 0) {
    throw Error(ErrorKind::Format, path.string() + ": bad correspondence magic at byte offset 0");
  }
  const uint32_t w = read_le<uint32_t>(buf, 8);
  const uint32_t h = read_le<uint32_t>(buf, 12);
  const std::size_t n = std::size_t{w} * h;
  if (buf.size() != 16 + n * 12) {
    throw Error(ErrorKind::Format, path.string() + ": correspondence payload size mismatch at byte offset 16");
  }
  CorrespondenceMap cmap(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < n; ++i) {
    const uint64_t v = read_le<uint64_t>(buf, 16 + i * 12);
    if (v == UINT64_MAX) continue;
    if (v >= CorrespondenceMap::kNoPoint) {
      throw Error(ErrorKind::UnsupportedFormat, path.string() + ": point index exceeds 32-bit range");
    }
    cmap.set(static_cast<int>(i % w), static_cast<int>(i / w), static_cast<uint32_t>(v),
             read_le<float>(buf, 16 + i * 12 + 8));
  }
  return cmap;
}

}  // namespace pai
