#pragma once

namespace cavsync {
inline constexpr const char* kVersion = "0.1.0";
}
