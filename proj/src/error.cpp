#include "pai/error.hpp"

#include <algorithm>
#include <cctype>

#include "pai/units.hpp"

namespace pai {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Format: return "format error";
    case ErrorKind::UnsupportedFormat: return "unsupported format";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::EmptyInput: return "empty input";
    case ErrorKind::DegenerateInput: return "degenerate input";
    case ErrorKind::MissingGround: return "missing ground";
    case ErrorKind::MissingAttribute: return "missing attribute";
    case ErrorKind::Bounds: return "out of bounds";
    case ErrorKind::Alignment: return "alignment error";
    case ErrorKind::Transport: return "transport error";
    case ErrorKind::Service: return "service error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::ReferentialIntegrity: return "referential integrity error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::MissingPrerequisite: return "missing prerequisite";
    case ErrorKind::Usage: return "usage error";
    case ErrorKind::InvalidArgument: return "invalid argument";
  }
  return "error";
}

std::string to_string(LinearUnit u) { return u == LinearUnit::Feet ? "feet" : "meters"; }

LinearUnit parse_linear_unit(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "feet" || t == "foot" || t == "ft" || t == "us-ft" || t == "ftus") return LinearUnit::Feet;
  if (t == "meters" || t == "meter" || t == "metre" || t == "metres" || t == "m") return LinearUnit::Meters;
  throw Error(ErrorKind::Configuration, "unknown linear unit '" + std::string(text) + "'");
}

}  // namespace pai
