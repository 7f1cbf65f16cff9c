#pragma once

namespace fsc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fsc
