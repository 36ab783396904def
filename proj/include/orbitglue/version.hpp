#pragma once

namespace orbitglue {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace orbitglue
