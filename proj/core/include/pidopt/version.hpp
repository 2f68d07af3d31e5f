#pragma once

namespace pidopt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pidopt
