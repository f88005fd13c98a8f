#include "pai/las.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "binary_io.hpp"
#include "pai/error.hpp"

namespace pai {
namespace {

using detail::put_le;
using detail::read_le;

constexpr std::size_t kHeader12Size = 227;
constexpr std::size_t kHeader14Size = 375;
constexpr std::size_t kVlrHeaderSize = 54;
constexpr uint16_t kGeoKeyDirectoryRecord = 34735;
constexpr uint16_t kGeoAsciiParamsRecord = 34737;
constexpr uint16_t kWktRecord = 2112;

constexpr uint16_t kGTModelTypeKey = 1024;
constexpr uint16_t kGeographicTypeKey = 2048;
constexpr uint16_t kProjectedCsTypeKey = 3072;
constexpr uint16_t kProjLinearUnitsKey = 3076;
constexpr uint16_t kPCSCitationKey = 3073;
constexpr uint16_t kUserDefined = 32767;

constexpr uint16_t kUnitMeter = 9001;
constexpr uint16_t kUnitFoot = 9002;
constexpr uint16_t kUnitUsSurveyFoot = 9003;

std::size_t min_record_length(uint8_t format) {
  switch (format) {
    case 0: return 20;
    case 1: return 28;
    case 2: return 26;
    case 3: return 34;
    case 6: return 30;
    case 7: return 36;
    default: return 0;
  }
}

Error format_error(const std::filesystem::path& path, std::size_t offset, const std::string& msg) {
  return Error(ErrorKind::Format,
               path.string() + ": " + msg + " at byte offset " + std::to_string(offset));
}

struct CrsInfo {
  std::optional<std::string> crs_id;
  std::optional<LinearUnit> unit;
};

void parse_geokeys(std::span<const uint8_t> dir, std::span<const uint8_t> ascii, CrsInfo& info) {
  if (dir.size() < 8) return;
  const uint16_t nkeys = read_le<uint16_t>(dir, 6);
  std::optional<uint16_t> projected;
  std::optional<uint16_t> geographic;
  std::optional<std::string> citation;
  for (uint16_t k = 0; k < nkeys; ++k) {
    const std::size_t at = 8 + 8 * static_cast<std::size_t>(k);
    if (at + 8 > dir.size()) break;
    const uint16_t id = read_le<uint16_t>(dir, at);
    const uint16_t location = read_le<uint16_t>(dir, at + 2);
    const uint16_t count = read_le<uint16_t>(dir, at + 4);
    const uint16_t value = read_le<uint16_t>(dir, at + 6);
    if (location == kGeoAsciiParamsRecord) {
      if (id == kPCSCitationKey && static_cast<std::size_t>(value) + count <= ascii.size()) {
        std::string s(ascii.begin() + value, ascii.begin() + value + count);
        while (!s.empty() && (s.back() == '|' || s.back() == '\0')) s.pop_back();
        citation = s;
      }
      continue;
    }
    if (location != 0) continue;
    if (id == kProjectedCsTypeKey) projected = value;
    if (id == kGeographicTypeKey) geographic = value;
    if (id == kProjLinearUnitsKey) {
      if (value == kUnitMeter) info.unit = LinearUnit::Meters;
      if (value == kUnitFoot || value == kUnitUsSurveyFoot) info.unit = LinearUnit::Feet;
    }
  }
  if (projected && *projected != kUserDefined) {
    info.crs_id = "EPSG:" + std::to_string(*projected);
  } else if (citation) {
    info.crs_id = *citation;
  } else if (geographic && *geographic != kUserDefined) {
    info.crs_id = "EPSG:" + std::to_string(*geographic);
  }
}

void parse_wkt(const std::string& wkt, CrsInfo& info) {
  static const std::regex authority(R"re(AUTHORITY\[\s*"EPSG"\s*,\s*"?(\d+)"?\s*\])re");
  std::string last;
  for (auto it = std::sregex_iterator(wkt.begin(), wkt.end(), authority); it != std::sregex_iterator();
       ++it) {
    last = (*it)[1];
  }
  info.crs_id = last.empty() ? "WKT:" + wkt : "EPSG:" + last;
  const auto unit_pos = wkt.rfind("UNIT[");
  if (unit_pos != std::string::npos) {
    const std::string unit = wkt.substr(unit_pos, 40);
    if (unit.find("oot") != std::string::npos || unit.find("ft") != std::string::npos) {
      info.unit = LinearUnit::Feet;
    } else if (unit.find("metre") != std::string::npos || unit.find("meter") != std::string::npos) {
      info.unit = LinearUnit::Meters;
    }
  }
}

}  // namespace

namespace {

PointCloud load_las_impl(const std::filesystem::path& path, const LasLoadOptions& options,
                         std::vector<uint8_t>* codes_out) {
  const std::vector<uint8_t> bytes = detail::read_file_bytes(path);
  const std::span<const uint8_t> buf(bytes);
  if (buf.size() < kHeader12Size) throw format_error(path, buf.size(), "truncated LAS header");
  if (!std::equal(buf.begin(), buf.begin() + 4, "LASF")) {
    throw format_error(path, 0, "missing LASF signature");
  }
  const uint8_t major = buf[24];
  const uint8_t minor = buf[25];
  if (major != 1 || (minor != 2 && minor != 4)) {
    throw Error(ErrorKind::UnsupportedFormat, path.string() + ": LAS version " +
                                                  std::to_string(major) + "." +
                                                  std::to_string(minor) + " is not supported");
  }
  const uint16_t header_size = read_le<uint16_t>(buf, 94);
  const std::size_t expected_header = minor == 4 ? kHeader14Size : kHeader12Size;
  if (header_size < expected_header || header_size > buf.size()) {
    throw format_error(path, 94, "invalid header size " + std::to_string(header_size));
  }
  const uint32_t point_offset = read_le<uint32_t>(buf, 96);
  if (point_offset < header_size || point_offset > buf.size()) {
    throw format_error(path, 96, "invalid offset to point data " + std::to_string(point_offset));
  }
  const uint32_t num_vlrs = read_le<uint32_t>(buf, 100);
  const uint8_t format = buf[104] & 0x3F;  // high bits flag compression
  if ((buf[104] & 0xC0) != 0) {
    throw Error(ErrorKind::UnsupportedFormat, path.string() + ": compressed (LAZ) point data");
  }
  if (format > 3 && format != 6 && format != 7) {
    throw Error(ErrorKind::UnsupportedFormat,
                path.string() + ": point format " + std::to_string(format) + " is not supported");
  }
  const uint16_t record_length = read_le<uint16_t>(buf, 105);
  if (record_length < min_record_length(format)) {
    throw format_error(path, 105, "record length " + std::to_string(record_length) +
                                      " too short for point format " + std::to_string(format));
  }
  uint64_t count = read_le<uint32_t>(buf, 107);
  if (minor == 4) {
    const uint64_t count64 = read_le<uint64_t>(buf, 247);
    if (count == 0) count = count64;
  }
  if (point_offset + count * record_length > buf.size()) {
    throw format_error(path, point_offset,
                       "point data truncated: header declares " + std::to_string(count) + " records");
  }

  Quantization q;
  for (int a = 0; a < 3; ++a) {
    q.scale[a] = read_le<double>(buf, 131 + 8 * a);
    q.offset[a] = read_le<double>(buf, 155 + 8 * a);
    if (!(q.scale[a] > 0.0) || !std::isfinite(q.offset[a])) {
      throw format_error(path, 131 + 8 * a, "invalid scale/offset");
    }
  }

  // Variable length records between header and point data.
  CrsInfo crs;
  std::span<const uint8_t> geokeys;
  std::span<const uint8_t> geoascii;
  std::size_t at = header_size;
  for (uint32_t v = 0; v < num_vlrs; ++v) {
    if (at + kVlrHeaderSize > point_offset) throw format_error(path, at, "truncated VLR header");
    const std::string user(reinterpret_cast<const char*>(buf.data() + at + 2),
                           strnlen(reinterpret_cast<const char*>(buf.data() + at + 2), 16));
    const uint16_t record_id = read_le<uint16_t>(buf, at + 18);
    const uint16_t length = read_le<uint16_t>(buf, at + 20);
    const std::size_t body = at + kVlrHeaderSize;
    if (body + length > point_offset) throw format_error(path, at + 20, "VLR body overruns point data");
    if (user == "LASF_Projection") {
      const auto payload = buf.subspan(body, length);
      if (record_id == kGeoKeyDirectoryRecord) geokeys = payload;
      if (record_id == kGeoAsciiParamsRecord) geoascii = payload;
      if (record_id == kWktRecord) {
        parse_wkt(std::string(payload.begin(), std::find(payload.begin(), payload.end(), 0)), crs);
      }
    }
    at = body + length;
  }
  if (!geokeys.empty()) parse_geokeys(geokeys, geoascii, crs);

  CloudMetadata meta;
  meta.source_path = path.string();
  meta.quantization = q;
  if (options.crs_override) {
    meta.crs_id = *options.crs_override;
  } else if (crs.crs_id) {
    meta.crs_id = *crs.crs_id;
  } else {
    throw Error(ErrorKind::Configuration,
                path.string() + ": no CRS in LAS header; pass a CRS override");
  }
  if (options.unit_override) {
    meta.linear_unit = *options.unit_override;
  } else if (crs.unit) {
    meta.linear_unit = *crs.unit;
  } else {
    throw Error(ErrorKind::Configuration,
                path.string() + ": linear unit not declared in LAS header; pass a unit override");
  }

  const bool extended = format >= 6;
  const bool has_rgb = format == 2 || format == 3 || format == 7;
  const std::size_t rgb_offset = format == 7 ? 30 : format == 3 ? 28 : 20;
  PointColumns cols;
  cols.x.resize(count);
  cols.y.resize(count);
  cols.z.resize(count);
  cols.intensity.resize(count);
  if (has_rgb) cols.rgb.resize(count);
  std::vector<uint8_t> cls(count);
  for (uint64_t i = 0; i < count; ++i) {
    const std::size_t rec = point_offset + i * record_length;
    cols.x[i] = q.offset[0] + q.scale[0] * read_le<int32_t>(buf, rec);
    cols.y[i] = q.offset[1] + q.scale[1] * read_le<int32_t>(buf, rec + 4);
    cols.z[i] = q.offset[2] + q.scale[2] * read_le<int32_t>(buf, rec + 8);
    cols.intensity[i] = read_le<uint16_t>(buf, rec + 12);
    // extended formats carry a full code byte; codes above 31 have no legacy tier
    cls[i] = extended ? (buf[rec + 16] <= 31 ? buf[rec + 16] : 0) : buf[rec + 15];
    if (codes_out) codes_out->push_back(extended ? buf[rec + 16] : static_cast<uint8_t>(buf[rec + 15] & 0x1F));
    if (has_rgb) {
      cols.rgb[i] = Rgb{static_cast<uint8_t>(read_le<uint16_t>(buf, rec + rgb_offset) / 256),
                        static_cast<uint8_t>(read_le<uint16_t>(buf, rec + rgb_offset + 2) / 256),
                        static_cast<uint8_t>(read_le<uint16_t>(buf, rec + rgb_offset + 4) / 256)};
    }
  }
  if (count == 0) return PointCloud(std::move(cols), {}, std::move(meta));
  return PointCloud(std::move(cols), std::move(cls), std::move(meta));
}

std::vector<uint8_t> geokey_payload(const CloudMetadata& meta, std::string& ascii_out) {
  std::vector<uint16_t> keys;
  auto add = [&](uint16_t id, uint16_t loc, uint16_t count, uint16_t value) {
    keys.insert(keys.end(), {id, loc, count, value});
  };
  const uint16_t unit = meta.linear_unit == LinearUnit::Feet ? kUnitFoot : kUnitMeter;
  std::optional<uint16_t> epsg;
  if (meta.crs_id.rfind("EPSG:", 0) == 0) {
    try {
      const long code = std::stol(meta.crs_id.substr(5));
      if (code > 0 && code < kUserDefined) epsg = static_cast<uint16_t>(code);
    } catch (const std::exception&) {
    }
  }
  add(kGTModelTypeKey, 0, 1, 1);
  if (epsg) {
    add(kProjectedCsTypeKey, 0, 1, *epsg);
  } else {
    add(kProjectedCsTypeKey, 0, 1, kUserDefined);
    ascii_out = meta.crs_id + "|";
    add(kPCSCitationKey, kGeoAsciiParamsRecord, static_cast<uint16_t>(ascii_out.size()), 0);
  }
  add(kProjLinearUnitsKey, 0, 1, unit);
  std::vector<uint8_t> out;
  const auto nkeys = static_cast<uint16_t>(keys.size() / 4);
  for (uint16_t v : {uint16_t{1}, uint16_t{1}, uint16_t{0}, nkeys}) put_le(out, v);
  for (uint16_t v : keys) put_le(out, v);
  return out;
}

void put_vlr(std::vector<uint8_t>& buf, uint16_t record_id, std::span<const uint8_t> payload,
             const std::string& description) {
  put_le<uint16_t>(buf, 0);
  detail::put_fixed_string(buf, "LASF_Projection", 16);
  put_le<uint16_t>(buf, record_id);
  put_le<uint16_t>(buf, static_cast<uint16_t>(payload.size()));
  detail::put_fixed_string(buf, description, 32);
  buf.insert(buf.end(), payload.begin(), payload.end());
}

int32_t quantize(double v, double scale, double offset, const char* axis) {
  const double stored = std::round((v - offset) / scale);
  if (stored < static_cast<double>(INT32_MIN) || stored > static_cast<double>(INT32_MAX)) {
    throw Error(ErrorKind::InvalidArgument,
                std::string("coordinate ") + axis + " out of LAS range for the cloud's scale/offset");
  }
  return static_cast<int32_t>(stored);
}


// Legacy LAS 1.2 (formats 0/2, raw classification bytes) or, with `codes`,
// LAS 1.4 formats 6/7 carrying full 8-bit class codes.
void write_las_impl(const PointCloud& cloud, std::optional<std::span<const uint8_t>> codes,
                    const std::filesystem::path& path) {
  const auto& meta = cloud.metadata();
  const auto& q = meta.quantization;
  const bool extended = codes.has_value();
  const uint8_t format = extended ? (cloud.has_color() ? 7 : 6) : (cloud.has_color() ? 2 : 0);
  const uint16_t record_length = static_cast<uint16_t>(min_record_length(format));
  const std::size_t header_size = extended ? kHeader14Size : kHeader12Size;
  if (extended && codes->size() != cloud.size()) {
    throw Error(ErrorKind::InvalidArgument, "class code count differs from point count");
  }

  std::string ascii;
  const auto keys = geokey_payload(meta, ascii);
  std::vector<uint8_t> vlrs;
  put_vlr(vlrs, kGeoKeyDirectoryRecord, keys, "GeoTiff GeoKeyDirectoryTag");
  uint32_t num_vlrs = 1;
  if (!ascii.empty()) {
    std::vector<uint8_t> payload(ascii.begin(), ascii.end());
    payload.push_back(0);
    put_vlr(vlrs, kGeoAsciiParamsRecord, payload, "GeoTiff GeoAsciiParamsTag");
    ++num_vlrs;
  }

  const uint64_t count = cloud.size();
  if (!extended && count > UINT32_MAX) throw Error(ErrorKind::InvalidArgument, "too many points for LAS 1.2");

  std::vector<uint8_t> buf;
  buf.reserve(header_size + vlrs.size() + count * record_length);
  detail::put_fixed_string(buf, "LASF", 4);
  put_le<uint16_t>(buf, 0);  // file source id
  put_le<uint16_t>(buf, 0);  // global encoding
  detail::put_fixed_string(buf, "", 16);  // GUID
  buf.push_back(1);
  buf.push_back(extended ? 4 : 2);
  detail::put_fixed_string(buf, "pai", 32);
  detail::put_fixed_string(buf, "pai write_las", 32);
  put_le<uint16_t>(buf, 1);
  put_le<uint16_t>(buf, 2024);
  put_le<uint16_t>(buf, static_cast<uint16_t>(header_size));
  put_le<uint32_t>(buf, static_cast<uint32_t>(header_size + vlrs.size()));
  put_le<uint32_t>(buf, num_vlrs);
  buf.push_back(format);
  put_le<uint16_t>(buf, record_length);
  // legacy counts stay zero for the extended formats
  const uint32_t legacy = extended ? 0 : static_cast<uint32_t>(count);
  put_le<uint32_t>(buf, legacy);
  put_le<uint32_t>(buf, legacy);  // all first returns
  for (int r = 1; r < 5; ++r) put_le<uint32_t>(buf, 0);
  for (double s : q.scale) put_le(buf, s);
  for (double o : q.offset) put_le(buf, o);
  double bounds[6] = {0, 0, 0, 0, 0, 0};  // max x, min x, max y, min y, max z, min z
  if (count > 0) {
    const auto [minx, maxx] = std::ranges::minmax(cloud.xs());
    const auto [miny, maxy] = std::ranges::minmax(cloud.ys());
    const auto [minz, maxz] = std::ranges::minmax(cloud.zs());
    double b[6] = {maxx, minx, maxy, miny, maxz, minz};
    std::copy(std::begin(b), std::end(b), std::begin(bounds));
  }
  for (double b : bounds) put_le(buf, b);
  if (extended) {
    put_le<uint64_t>(buf, 0);  // waveform data
    put_le<uint64_t>(buf, 0);  // first EVLR
    put_le<uint32_t>(buf, 0);  // EVLR count
    put_le<uint64_t>(buf, count);
    put_le<uint64_t>(buf, count);
    for (int r = 1; r < 15; ++r) put_le<uint64_t>(buf, 0);
  }
  buf.insert(buf.end(), vlrs.begin(), vlrs.end());

  const auto cls = cloud.classification_bytes();
  for (uint64_t i = 0; i < count; ++i) {
    put_le<int32_t>(buf, quantize(cloud.x(i), q.scale[0], q.offset[0], "x"));
    put_le<int32_t>(buf, quantize(cloud.y(i), q.scale[1], q.offset[1], "y"));
    put_le<int32_t>(buf, quantize(cloud.z(i), q.scale[2], q.offset[2], "z"));
    put_le<uint16_t>(buf, cloud.intensity(i));
    if (extended) {
      buf.push_back(0x11);  // return 1 of 1
      buf.push_back(static_cast<uint8_t>(cls[i] >> 5));  // synthetic / key-point / withheld
      buf.push_back((*codes)[i]);
      buf.push_back(0);          // user data
      put_le<int16_t>(buf, 0);   // scan angle
      put_le<uint16_t>(buf, 0);  // point source id
      put_le<double>(buf, 0.0);  // GPS time
    } else {
      buf.push_back(0x09);  // return 1 of 1
      buf.push_back(cls[i]);
      buf.push_back(0);     // scan angle rank
      buf.push_back(0);     // user data
      put_le<uint16_t>(buf, 0);  // point source id
    }
    if (format == 2 || format == 7) {
      const Rgb c = cloud.colors()[i];
      put_le<uint16_t>(buf, static_cast<uint16_t>(c.r * 256));
      put_le<uint16_t>(buf, static_cast<uint16_t>(c.g * 256));
      put_le<uint16_t>(buf, static_cast<uint16_t>(c.b * 256));
    }
  }
  detail::write_file_bytes(path, buf);
}

}  // namespace

PointCloud load_las(const std::filesystem::path& path, const LasLoadOptions& options) {
  return load_las_impl(path, options, nullptr);
}

std::vector<uint8_t> read_las_class_codes(const std::filesystem::path& path) {
  std::vector<uint8_t> codes;
  load_las_impl(path, {std::string("unused"), LinearUnit::Meters}, &codes);
  return codes;
}

void write_las(const PointCloud& cloud, const std::filesystem::path& path) {
  write_las_impl(cloud, std::nullopt, path);
}

void write_las_with_codes(const PointCloud& cloud, std::span<const uint8_t> codes, const std::filesystem::path& path) {
  write_las_impl(cloud, codes, path);
}

}  // namespace pai
