#pragma once

namespace usd {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace usd
