#pragma once

namespace btm {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace btm
