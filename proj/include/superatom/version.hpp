#pragma once

namespace superatom {

inline constexpr const char* kToolName = "superatom";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace superatom
