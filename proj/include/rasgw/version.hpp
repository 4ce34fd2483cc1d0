#pragma once

namespace rasgw {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rasgw
