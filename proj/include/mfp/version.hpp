#pragma once

namespace mfp {
inline constexpr const char* kVersion = "0.1.0";
}
