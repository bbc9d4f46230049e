#pragma once

namespace adaptmt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace adaptmt
