#pragma once

namespace shadow_merton {

inline constexpr const char* kToolVersion = "0.1.0";

} // namespace shadow_merton
