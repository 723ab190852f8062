#pragma once

namespace hcbl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hcbl
