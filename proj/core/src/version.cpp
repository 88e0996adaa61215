#include "sgdn/version.hpp"

namespace sgdn {

std::string_view version() { return SGDN_VERSION; }

}  // namespace sgdn
