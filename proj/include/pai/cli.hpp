#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "pai/error.hpp"

namespace pai {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitMissingPrerequisite = 3;
inline constexpr int kExitData = 4;
inline constexpr int kExitTransport = 5;

int exit_code_for(ErrorKind kind);

class Transport;

/// Entry point of the `pai` tool. `args` excludes the program name. A non-null
/// `transport` replaces the network for satellite and remote segmentation.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            Transport* transport = nullptr);

}  // namespace pai
