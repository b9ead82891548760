#pragma once

namespace graphflow {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace graphflow
