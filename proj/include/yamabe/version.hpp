#pragma once

#define YAMABE_VERSION_MAJOR 0
#define YAMABE_VERSION_MINOR 1
#define YAMABE_VERSION_PATCH 0
#define YAMABE_VERSION "0.1.0"

namespace yamabe {
inline constexpr const char* version() noexcept { return YAMABE_VERSION; }
} // namespace yamabe
