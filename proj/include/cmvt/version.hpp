#pragma once

namespace cmvt {
inline constexpr const char* kVersion = "0.1.0";
}
