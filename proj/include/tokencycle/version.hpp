#pragma once

namespace tokencycle {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace tokencycle
