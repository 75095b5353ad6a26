#pragma once

namespace compsim {

inline constexpr const char* kToolName = "compsim";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace compsim
