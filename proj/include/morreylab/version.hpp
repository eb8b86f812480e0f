#pragma once

namespace morreylab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace morreylab
