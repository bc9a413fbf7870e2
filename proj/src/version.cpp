#include "ddcd/version.hpp"

namespace ddcd {

std::string_view build_id() { return DDCD_BUILD_ID; }

}  // namespace ddcd
