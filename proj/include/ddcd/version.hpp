#pragma once

#include <string_view>

namespace ddcd {

// Library version plus compiler identity, fixed at build time.
std::string_view build_id();

}  // namespace ddcd
