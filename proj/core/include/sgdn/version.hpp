#pragma once

#include <string_view>

namespace sgdn {

/// Library version, "major.minor.patch".
std::string_view version();

}  // namespace sgdn
